#pragma once

#include "uvbody/body_model.hpp"
#include "uvbody/types.hpp"
#include "uvbody/uv_atlas.hpp"

namespace uvbody {

/// Weak-perspective camera: uniform pixels-per-meter scale plus 2D offset.
struct Camera {
    double scale = 100.0;
    Vec2 offset = Vec2(112.0, 112.0);

    void validate() const {
        if (!(scale > 0.0) || !offset.allFinite())
            throw std::invalid_argument("camera: scale must be positive and finite");
    }
};

Vec2 project_weak_perspective(const Vec3& point, const Camera& camera);
MatX project_weak_perspective(const MatX& points, const Camera& camera);  // K x 3 -> K x 2

/// Image-space dense maps. On foreground pixels displacement = location - joint;
/// background pixels are zero with part id -1.
struct ImageMaps {
    int height = 0, width = 0;
    MaskGrid mask;
    Grid uv;            // H x W x 2, surface uv of the visible point
    Grid joint;         // H x W x 3
    Grid location;      // H x W x 3
    Grid displacement;  // H x W x 3
    std::vector<int> part;  // H x W, -1 background

    int part_at(int y, int x) const { return part[static_cast<size_t>(y) * width + x]; }
    void set_part(int y, int x, int p) { part[static_cast<size_t>(y) * width + x] = p; }
    size_t foreground_count() const { return mask.count(); }
};

/// UV-space dense maps with a validity mask.
struct UVMaps {
    int height = 0, width = 0;
    MaskGrid valid;
    Grid joint, location, displacement;  // each H x W x 3

    size_t valid_count() const { return valid.count(); }
};

/// Z-buffered weak-perspective render of the posed mesh into dense maps.
/// Depth is camera-space z; smaller z is nearer to the viewer. Requires at
/// least half the vertices to project inside the image.
ImageMaps render_dense_maps(const Mesh& mesh, const BodyModel& model, const UVAtlas& atlas,
                            const PartSegmentation& part_seg, const JointSet& joints_gt,
                            const Camera& camera, int height = 224, int width = 224);

struct OcclusionConfig {
    int count_min = 1, count_max = 3;
    int size_min = 30, size_max = 80;

    void validate() const {
        if (count_min < 0 || count_max < count_min || size_min < 0 || size_max < size_min)
            throw std::invalid_argument("occlusion config: invalid rectangle ranges");
    }
};

/// Zero out random axis-aligned rectangles. Deterministic per seed.
ImageMaps apply_synthetic_occlusion(const ImageMaps& maps, uint64_t seed, const OcclusionConfig& config);

/// Additive Gaussian noise on the uv and 3D channels of foreground pixels,
/// displacement recomputed. Stand-in for imperfect dense predictions.
ImageMaps add_prediction_noise(const ImageMaps& maps, double sigma, uint64_t seed);

/// Forward-scatter foreground pixels to the texel nearest their stored uv.
/// Collisions average; untouched texels stay invalid. Out-of-range uv values
/// are clamped and counted in clamped_count when given.
UVMaps warp_image_to_uv(const ImageMaps& maps, const UVAtlas& atlas, size_t* clamped_count = nullptr);

/// Complete UV-space ground truth for a posed mesh: rasterized locations,
/// per-part joints, and their difference.
UVMaps make_uv_ground_truth(const Mesh& mesh, const BodyModel& model, const PartSegmentation& part_seg,
                            const JointSet& joints_gt, const UVAtlas& atlas);

}  // namespace uvbody
