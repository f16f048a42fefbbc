#pragma once

#include "uvbody/types.hpp"

namespace uvbody {

/// Joint hierarchy. parent[0] is -1 (root); parents are topologically
/// ordered so parent[i] < i for every non-root joint.
struct KinematicTree {
    std::array<int, kNumJoints> parent{};
    std::array<std::string, kNumJoints> names{};

    void validate() const;
};

/// Axis-angle pose, one row per joint, root orientation in row 0.
/// Canonical form keeps every row's magnitude below pi.
struct PoseParams {
    Eigen::Matrix<double, kNumJoints, 3> theta = Eigen::Matrix<double, kNumJoints, 3>::Zero();

    static PoseParams zero() { return PoseParams{}; }
    void validate() const;
};

struct ShapeParams {
    Eigen::Matrix<double, kShapeDim, 1> beta = Eigen::Matrix<double, kShapeDim, 1>::Zero();

    static ShapeParams zero() { return ShapeParams{}; }
    void validate() const;
};

struct Mesh {
    MatX vertices;  // N x 3, meters, root-relative

    int vertex_count() const { return static_cast<int>(vertices.rows()); }
};

/// 14 sparse joints with per-joint visibility. Invisible joints hold zero.
struct JointSet {
    Eigen::Matrix<double, kNumParts, 3> joints = Eigen::Matrix<double, kNumParts, 3>::Zero();
    std::array<bool, kNumParts> visible{};

    static JointSet all_visible(const MatX& j);
    /// Zero the rows of invisible joints (the storage convention).
    void apply_visibility();
    int visible_count() const;
};

/// Construction layout of one bone capsule. Kept alongside the model so the
/// UV unwrap and the constructed regressors can address rings directly.
struct SegmentLayout {
    int bone = -1;            // child joint of the bone this capsule wraps
    int parent_joint = -1;
    int mirror_segment = -1;  // partner capsule index; self for midline ones
    bool midline = false;
    double radius = 0.0;
    int vertex_start = 0;     // [bottom pole][ring 0..R-1 x S][top pole]
    int ring_count = 0;       // R
    int face_start = 0;
    int face_count = 0;
    std::vector<double> ring_axial;  // per-ring position along the bone, 0 at parent, 1 at child

    int bottom_pole() const { return vertex_start; }
    int top_pole() const { return vertex_start + 1 + ring_count * segments_in_ring; }
    int ring_vertex(int ring, int col) const { return vertex_start + 1 + ring * segments_in_ring + col; }
    int segments_in_ring = 0;  // S, shared across the model
};

struct ModelConfig {
    int vertex_budget = 1000;  // >= 500
};

/// Procedurally built articulated body: one capsule per bone, bilaterally
/// symmetric, with anisotropic per-segment shape offsets and ring-averaged
/// joint regressors.
struct BodyModel {
    KinematicTree tree;
    MatX template_vertices;          // N x 3
    Eigen::MatrixXi faces;           // F x 3
    std::array<MatX, kShapeDim> shape_dirs;  // each N x 3, meters per unit beta
    MatX skin_weights;               // N x kNumJoints, rows sum to 1
    MatX kin_regressor;              // kNumJoints x N
    MatX lsp_regressor;              // kNumParts x N
    std::vector<int> mirror_vertex;  // N, bilateral partner index

    // unwrap metadata
    std::vector<SegmentLayout> segments;
    MatX face_corner_local;  // F x 6: (cu, rv) per corner in capsule-local unwrap units
    std::vector<int> face_segment;   // F
    int ring_segments = 0;           // S
    int rows_per_island = 0;         // R + 1 row intervals in the unwrap

    int vertex_count() const { return static_cast<int>(template_vertices.rows()); }
    int face_count() const { return static_cast<int>(faces.rows()); }
    void validate() const;
};

/// Joint index mirror under left-right exchange (kinematic tree order).
extern const std::array<int, kNumJoints> kJointMirror;
/// Part index mirror for the 14 sparse joints.
extern const std::array<int, kNumParts> kPartMirror;

/// Axis-angle to rotation matrix. Zero input maps to identity.
Mat3 rodrigues(const Vec3& axis_angle);

/// Wrap an axis-angle vector to magnitude < pi (same rotation).
Vec3 canonicalize_axis_angle(const Vec3& axis_angle);

BodyModel build_synthetic_model(const ModelConfig& config);

/// Linear blend skinning of the shaped template through the kinematic chain,
/// translated so the root joint sits at the origin.
Mesh skin(const BodyModel& model, const PoseParams& theta, const ShapeParams& beta);

/// joints = regressor * vertices. Works for both the kinematic (24 x N) and
/// the sparse (14 x N) regressor.
MatX regress_joints(const Mesh& mesh, const MatX& regressor);

/// Rest-pose joint locations of the kinematic tree for a given shape.
MatX shaped_rest_joints(const BodyModel& model, const ShapeParams& beta);

/// Per-joint uniform sampling ranges, axis-angle components.
struct PoseLimits {
    Eigen::Matrix<double, kNumJoints, 3> lo = Eigen::Matrix<double, kNumJoints, 3>::Zero();
    Eigen::Matrix<double, kNumJoints, 3> hi = Eigen::Matrix<double, kNumJoints, 3>::Zero();

    /// Scale every range about zero.
    PoseLimits scaled(double s) const;
    void validate() const;
};

PoseLimits default_pose_limits();

PoseParams sample_pose(uint64_t seed, const PoseLimits& limits);

}  // namespace uvbody
