#pragma once

#include "uvbody/body_model.hpp"
#include "uvbody/types.hpp"

namespace uvbody {

/// One rectangular UV island per body segment. Left/right partners share a
/// rectangle size and are laid out as exact horizontal reflections, so the
/// flip correspondence is a per-island axis reflection.
struct IslandRect {
    int x0 = 0, y0 = 0, w = 0, h = 0;
    int segment = -1;
    int partner = -1;  // island holding the mirror segment; self for midline
};

struct UVAtlas {
    int height = 0, width = 0;
    int n_vertices = 0;
    Eigen::MatrixXi faces;       // copy of the model faces (F x 3)
    MatX corner_uv;              // F x 6, (u, v) in [0,1]^2 per face corner
    std::vector<int> texel_face;    // H*W, face index or -1
    Grid texel_bary;                // H x W x 3
    MaskGrid inside;
    std::vector<IslandRect> islands;   // indexed by segment id
    std::vector<int> texel_island;     // H*W, island id or -1

    int texel_at(int y, int x) const { return y * width + x; }
    int face_at(int y, int x) const { return texel_face[texel_at(y, x)]; }

    /// Texel whose center is nearest to a clamped uv coordinate.
    void uv_to_texel(double u, double v, int& ix, int& iy) const;
};

struct PartSegmentation {
    int height = 0, width = 0;
    std::vector<int> assign;  // part id in [0, 14) or -1 background

    int at(int y, int x) const { return assign[static_cast<size_t>(y) * width + x]; }
};

struct FlipMap {
    int height = 0, width = 0;
    std::vector<int> flip;  // texel index -> mirrored texel index

    int at(int y, int x) const { return flip[static_cast<size_t>(y) * width + x]; }
};

UVAtlas build_atlas(const BodyModel& model, int height, int width);

/// Barycentric rasterization of a per-vertex attribute into UV space.
/// Background texels are zero.
Grid rasterize_vertex_attribute(const UVAtlas& atlas, const MatX& values);

FlipMap build_flip_map(const UVAtlas& atlas);

/// Nearest-joint part assignment rasterized into UV space and symmetrized so
/// mirrored texels always carry mirrored labels.
PartSegmentation build_part_segmentation(const BodyModel& model, const UVAtlas& atlas);

/// T-pose surface point of an inside texel (barycentric combination of the
/// template corners).
Vec3 texel_surface_point(const UVAtlas& atlas, const BodyModel& model, int y, int x);

}  // namespace uvbody
