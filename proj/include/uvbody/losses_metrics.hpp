#pragma once

#include "uvbody/body_model.hpp"
#include "uvbody/dense_maps.hpp"
#include "uvbody/types.hpp"
#include "uvbody/uv_atlas.hpp"

namespace uvbody {

/// Every loss term by name plus the stage composites. All L1 terms are means
/// over the elements they cover, so magnitudes are resolution independent.
struct LossBreakdown {
    double l_mib = 0, l_miuv = 0, l_ml = 0, l_mj = 0, l_md = 0;      // dense-map stage
    double l_theta = 0, l_beta = 0, l_ji = 0, l_vi = 0;              // kinematics stage
    double l_map = 0, l_j3d = 0, l_j2d = 0, l_dismag = 0, l_con = 0; // uv completion stage

    double dmp() const { return l_mib + l_miuv + l_ml + l_mj + l_md; }
    double ik() const { return l_theta + l_beta + l_ji + l_vi; }
    double uvi() const { return l_dismag + l_j2d + l_j3d + l_map + l_con; }
    double all() const { return dmp() + ik() + uvi(); }
};

/// Mean |pred - gt| over masked pixels (all channels); 0 on an empty mask.
double l1_masked(const Grid& pred, const Grid& gt, const MaskGrid& mask);

/// Mean L1 between two flat vectors.
double l1_mean(const MatX& pred, const MatX& gt);

/// Mean binary cross-entropy of a probability map against a boolean mask,
/// probabilities clamped to [1e-7, 1 - 1e-7].
double bce_mask_loss(const Grid& pred_prob, const MaskGrid& gt_mask);

/// Symmetric displacement-magnitude loss: mean | ||d(t)|| - ||d(flip t)|| |
/// over texels valid at both ends of the flip.
double loss_dismag(const Grid& uv_d, const FlipMap& flip, const MaskGrid& valid);

double loss_j3d(const JointSet& pred, const JointSet& gt);

/// Projects the predicted 3D joints with the camera, then mean L1 against
/// the given 2D joints.
double loss_j2d(const JointSet& pred_j3d, const MatX& gt_j2d, const Camera& camera);

/// Reprojection consistency: sample the predicted UV location map at each
/// foreground pixel's uv, project it, and compare with the pixel's own
/// center coordinates. Mean over foreground; 0 with the flag set when the
/// foreground is empty.
double loss_consistency(const Grid& pred_uv_l, const MaskGrid& pred_valid, const Camera& camera,
                        const ImageMaps& gt_maps, bool* empty_foreground = nullptr);

/// Mean per-joint position error in millimeters over joints visible in both.
double mpjpe(const JointSet& pred, const JointSet& gt);

/// Mean per-vertex error in millimeters.
double mpve(const Mesh& pred, const Mesh& gt);

/// Procrustes-aligned MPJPE: optimal similarity transform (rotation with
/// reflection correction, uniform scale, translation) before measuring.
double pa_mpjpe(const JointSet& pred, const JointSet& gt);

/// Dense-map stage losses between a predicted render and the clean ground
/// truth. L1 terms are evaluated where both masks are foreground.
LossBreakdown compute_dmp_losses(const ImageMaps& pred, const ImageMaps& gt);

/// Bilinear sample of a UV-space map restricted to valid texels; weights are
/// renormalized over the valid corners. Returns false if no valid corner
/// covers the location.
bool sample_bilinear(const Grid& map, const MaskGrid& valid, double u, double v, VecX& out);

}  // namespace uvbody
