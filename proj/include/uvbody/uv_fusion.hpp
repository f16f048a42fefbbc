#pragma once

#include "uvbody/body_model.hpp"
#include "uvbody/dense_maps.hpp"
#include "uvbody/losses_metrics.hpp"
#include "uvbody/types.hpp"
#include "uvbody/uv_atlas.hpp"

namespace uvbody {

enum class FuseSource : uint8_t { dmp = 0, ik = 1, blend = 2, background = 255 };

/// Completed UV maps: evidence texels keep their dense-map values, holes are
/// filled from the reposed template, and a narrow band around each hole is
/// linearly blended. displacement = location - joint everywhere inside.
struct FusedUVMaps {
    int height = 0, width = 0;
    MaskGrid inside;
    Grid joint, location, displacement;  // each H x W x 3
    std::vector<FuseSource> source;

    FuseSource source_at(int y, int x) const { return source[static_cast<size_t>(y) * width + x]; }
};

/// Write each part's refined joint to all of its texels; background is zero.
Grid distribute_joints_to_uv(const JointSet& j_refine, const PartSegmentation& part_seg);

/// Complete UV maps of the reposed template: rasterized skinned vertices for
/// the location channel, regressed joints distributed per part, and their
/// difference.
UVMaps repose_uv_from_ik(const BodyModel& model, const UVAtlas& atlas, const PartSegmentation& part_seg,
                         const PoseParams& theta, const ShapeParams& beta);

/// Deterministic evidence-preserving fusion. Valid dmp texels keep their
/// location values; invalid inside texels take ik values shifted by the
/// per-part offset uv_jrefine - ik joint (both constant per part); texels
/// within band_width of a hole blend linearly. The joint channel is
/// uv_jrefine everywhere inside.
FusedUVMaps fuse_uv_maps(const UVMaps& dmp, const UVMaps& ik, const Grid& uv_jrefine, int band_width = 2);

/// Per-part mean of the fused joint channel; every joint comes back visible.
JointSet infer_joints_from_uv(const FusedUVMaps& fused, const PartSegmentation& part_seg);

/// Sample each vertex's position from the fused location channel at its uv
/// coordinate (bilinear over inside texels). Vertices whose neighborhood is
/// entirely background are counted and filled from the fallback mesh when
/// given, else left at zero.
Mesh infer_mesh_from_uv(const FusedUVMaps& fused, const UVAtlas& atlas, const BodyModel& model,
                        const Mesh* ik_fallback = nullptr, int* fallback_count = nullptr);

/// Naive completion baseline: every invalid inside texel copies the nearest
/// valid texel (chessboard distance, deterministic scan order).
UVMaps fill_nearest_valid(const UVMaps& partial, const MaskGrid& inside);

/// The five UV-completion losses and their sum (in the returned breakdown's
/// uv-stage fields).
LossBreakdown loss_uvi_terms(const FusedUVMaps& pred, const Camera& camera, const JointSet& pred_joints,
                             const UVMaps& gt, const JointSet& gt_joints, const MatX& gt_j2d,
                             const ImageMaps& gt_image, const FlipMap& flip);

}  // namespace uvbody
