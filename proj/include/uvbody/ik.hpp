#pragma once

#include "uvbody/body_model.hpp"
#include "uvbody/dense_maps.hpp"
#include "uvbody/nn_core.hpp"
#include "uvbody/types.hpp"
#include "uvbody/uv_atlas.hpp"

namespace uvbody {

struct AggregationResult {
    JointSet j_initial;
    std::array<int, kNumParts> texel_counts{};
};

/// Per-part mean of the UV joint map over valid texels. Parts with fewer
/// than min_texels valid texels are zeroed and marked invisible.
AggregationResult aggregate_joints(const UVMaps& uv, const PartSegmentation& part_seg,
                                   int min_texels = 1);

struct IkOutput {
    PoseParams theta;
    ShapeParams beta;
    JointSet j_refine;  // all joints visible
};

/// 14 x 3 coordinates with invisible joints zeroed, concatenated with the 14
/// visibility flags: the 56-wide input layout of the inpaint/refine net.
VecX inpaint_input_layout(const AggregationResult& agg);
inline constexpr int kInpaintInputDim = kNumParts * 3 + kNumParts;
inline constexpr int kInpaintOutputDim = kNumParts * 3;
inline constexpr int kGikInputDim = kNumParts * 3;
inline constexpr int kGikOutputDim = kNumJoints * 3 + kShapeDim;

/// Complete and refine a sparse joint estimate; output has every joint visible.
JointSet inpaint_refine_joints(const MlpState& net, const AggregationResult& agg);

/// Regress pose and shape from refined joints. The pose is canonicalized per
/// joint and the shape clamped to [-5, 5].
IkOutput gik_forward(const MlpState& net, const JointSet& j_refine);

/// Fast evaluator for the sparse joints of a posed shape. Exploits the ring
/// construction: every regressed site is a constant-weight rigid blend of two
/// joint transforms applied to the shaped site location, which reproduces
/// regress_joints(skin(theta, beta), lsp_regressor) to numerical precision.
class JointEvaluator {
public:
    explicit JointEvaluator(const BodyModel& model);

    MatX joints(const PoseParams& theta, const ShapeParams& beta) const;  // 14 x 3, root-relative

private:
    const BodyModel* model_;
    MatX rest_base_;                       // 24 x 3
    std::array<MatX, kShapeDim> rest_dirs_;
    MatX site_base_;                       // 14 x 3
    std::array<MatX, kShapeDim> site_dirs_;
    std::array<std::array<int, 2>, kNumParts> site_joints_;
    std::array<std::array<double, 2>, kNumParts> site_weights_;
};

struct IkSolveConfig {
    int max_iterations = 200;
    double lambda_init = 1e-3;
    double lambda_up = 10.0;
    double lambda_down = 0.1;
    double fd_step = 1e-6;
    double tol_cost = 1e-16;
    double tol_step = 1e-12;
    bool optimize_beta = true;
};

struct IkSolveResult {
    PoseParams theta;
    ShapeParams beta;
    double residual = 0.0;  // L2 norm of the stacked visible-joint residual
    int iterations = 0;
    bool converged = false;
};

/// Levenberg-Marquardt fit of (theta, beta) to visible target joints, with a
/// central finite-difference Jacobian. Requires >= 4 visible targets.
/// Non-convergence is reported through the residual, not an exception.
IkSolveResult numerical_ik(const BodyModel& model, const JointSet& target, const PoseParams& init_theta,
                           const ShapeParams& init_beta, const IkSolveConfig& config = {});

struct AugmentConfig {
    double noise_sigma = 0.01;    // meters
    double occlusion_prob = 0.3;  // per-joint zeroing probability

    void validate() const {
        if (noise_sigma < 0.0 || occlusion_prob < 0.0 || occlusion_prob >= 1.0)
            throw std::invalid_argument("augment config: sigma >= 0 and prob in [0, 1) required");
    }
};

/// Additive Gaussian noise on visible joints, then independent per-joint
/// zero-and-hide with the configured probability. Deterministic per seed.
JointSet augment_joints(const JointSet& joints, const AugmentConfig& config, uint64_t seed);

struct MocapSample {
    PoseParams theta;
    ShapeParams beta;
};

/// Synthetic mocap stand-in: seeded poses within limits and uniform shapes.
std::vector<MocapSample> sample_mocap(int count, uint64_t seed, const PoseLimits& limits,
                                      double beta_range);

struct TrainConfig {
    int epochs = 30;
    int batch_size = 128;
    double lr = 1e-3;
    double w_theta = 1.0, w_beta = 1.0, w_ji = 1.0, w_vi = 1.0;
    AugmentConfig augment;
    uint64_t seed = 1;
};

struct EpochLosses {
    double l_ji = 0, l_theta = 0, l_beta = 0, l_vi = 0;
    double total() const { return l_ji + l_theta + l_beta + l_vi; }
};

struct IkTrainResult {
    MlpState inpaint;
    MlpState gik;
    std::vector<EpochLosses> curve;      // per-epoch mean training losses
    EpochLosses first_batch;             // losses of the first batch before any update
};

/// Deterministic batch order and per-sample augmentation seeds, exposed so
/// training batches can be reconstructed exactly.
std::vector<int> shuffled_indices(uint64_t seed, int epoch, int n);
uint64_t augment_seed(uint64_t seed, int epoch, int sample_index);

/// Joint training of the inpaint/refine net (L1 joints) and the pose/shape
/// regressor (L1 on parameters plus L1 on skinned vertices). Both nets see
/// noise/occlusion-augmented joints. Aborts on non-finite losses.
IkTrainResult train_ik_stage(const BodyModel& model, const std::vector<MocapSample>& mocap,
                             const TrainConfig& config, const MlpSpec& inpaint_spec,
                             const MlpSpec& gik_spec);

/// Mean-L1 vertex loss between skin(theta, beta) and target vertices together
/// with its exact gradient in the 82 stacked (theta, beta) parameters,
/// computed analytically through the kinematic chain.
class VertexLossEvaluator {
public:
    explicit VertexLossEvaluator(const BodyModel& model);

    double loss_and_grad(const PoseParams& theta, const ShapeParams& beta,
                         const MatX& target_vertices, VecX* grad) const;

private:
    const BodyModel* model_;
    std::vector<std::array<int, 2>> vert_joints_;     // per-vertex weighted joints, -1 padded
    std::vector<std::array<double, 2>> vert_weights_;
    MatX rest_base_;                                  // 24 x 3
    std::array<MatX, kShapeDim> rest_dirs_;
};

/// d(rodrigues)/d(axis_angle): three 3x3 matrices, one per input component.
std::array<Mat3, 3> rodrigues_jacobian(const Vec3& axis_angle);

}  // namespace uvbody
