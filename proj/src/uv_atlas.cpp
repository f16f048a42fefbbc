#include "uvbody/uv_atlas.hpp"

#include "uvbody/raster.hpp"

#include <algorithm>
#include <cmath>

namespace uvbody {

using raster::barycentric;
using raster::point_in_triangle;

void UVAtlas::uv_to_texel(double u, double v, int& ix, int& iy) const {
    u = std::clamp(u, 0.0, 1.0);
    v = std::clamp(v, 0.0, 1.0);
    ix = std::clamp(static_cast<int>(std::floor(u * width)), 0, width - 1);
    iy = std::clamp(static_cast<int>(std::floor(v * height)), 0, height - 1);
}

UVAtlas build_atlas(const BodyModel& model, int height, int width) {
    if (height < 32 || width < 32)
        throw std::invalid_argument("atlas: resolution must be at least 32 x 32");

    const int S = model.ring_segments;
    const int v_rows = model.rows_per_island;  // unwrap row intervals per island
    const int n_islands = static_cast<int>(model.segments.size());
    const int grid = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n_islands))));
    const int cell_w = width / grid;
    const int cell_h = height / grid;
    const int col_w = (cell_w - 1) / S;
    const int row_h = (cell_h - 1) / v_rows;
    if (col_w < 1 || row_h < 1)
        throw std::invalid_argument("atlas: resolution too small to pack one island per segment");

    UVAtlas atlas;
    atlas.height = height;
    atlas.width = width;
    atlas.n_vertices = model.vertex_count();
    atlas.faces = model.faces;
    atlas.texel_face.assign(static_cast<size_t>(height) * width, -1);
    atlas.texel_island.assign(static_cast<size_t>(height) * width, -1);
    atlas.texel_bary = Grid(height, width, 3);
    atlas.inside = MaskGrid(height, width, false);

    atlas.islands.resize(n_islands);
    for (int i = 0; i < n_islands; ++i) {
        IslandRect r;
        r.segment = i;
        r.partner = model.segments[i].mirror_segment;
        r.w = S * col_w;
        r.h = v_rows * row_h;
        int gc = i % grid, gr = i / grid;
        r.x0 = gc * cell_w + (cell_w - r.w) / 2;
        r.y0 = gr * cell_h + (cell_h - r.h) / 2;
        atlas.islands[i] = r;
        for (int y = r.y0; y < r.y0 + r.h; ++y)
            for (int x = r.x0; x < r.x0 + r.w; ++x) atlas.texel_island[y * width + x] = i;
    }

    // corner uv from capsule-local unwrap coordinates; all positions land on
    // the integer texel lattice (half-integers for pole apexes)
    const int F = model.face_count();
    atlas.corner_uv.resize(F, 6);
    for (int f = 0; f < F; ++f) {
        const IslandRect& r = atlas.islands[model.face_segment[f]];
        for (int c = 0; c < 3; ++c) {
            double tx = r.x0 + model.face_corner_local(f, 2 * c) * col_w;
            double ty = r.y0 + model.face_corner_local(f, 2 * c + 1) * row_h;
            atlas.corner_uv(f, 2 * c) = tx / width;
            atlas.corner_uv(f, 2 * c + 1) = ty / height;
        }
    }

    // first face in index order claims a texel; later faces never overwrite
    for (int f = 0; f < F; ++f) {
        double tx[3], ty[3];
        for (int c = 0; c < 3; ++c) {
            tx[c] = atlas.corner_uv(f, 2 * c) * width;
            ty[c] = atlas.corner_uv(f, 2 * c + 1) * height;
        }
        int x_lo = std::max(0, static_cast<int>(std::floor(std::min({tx[0], tx[1], tx[2]}) - 0.5)));
        int x_hi = std::min(width - 1, static_cast<int>(std::ceil(std::max({tx[0], tx[1], tx[2]}))));
        int y_lo = std::max(0, static_cast<int>(std::floor(std::min({ty[0], ty[1], ty[2]}) - 0.5)));
        int y_hi = std::min(height - 1, static_cast<int>(std::ceil(std::max({ty[0], ty[1], ty[2]}))));
        for (int y = y_lo; y <= y_hi; ++y) {
            for (int x = x_lo; x <= x_hi; ++x) {
                int t = y * width + x;
                if (atlas.texel_face[t] >= 0) continue;
                double px = x + 0.5, py = y + 0.5;
                if (!point_in_triangle(tx, ty, px, py)) continue;
                double w[3];
                barycentric(tx, ty, px, py, w);
                atlas.texel_face[t] = f;
                atlas.inside.set(y, x, true);
                for (int c = 0; c < 3; ++c) atlas.texel_bary.at(y, x, c) = w[c];
            }
        }
    }
    return atlas;
}

Grid rasterize_vertex_attribute(const UVAtlas& atlas, const MatX& values) {
    if (values.rows() != atlas.n_vertices)
        throw std::invalid_argument("rasterize: attribute rows must match the vertex count");
    const int C = static_cast<int>(values.cols());
    Grid out(atlas.height, atlas.width, C);
    for (int y = 0; y < atlas.height; ++y) {
        for (int x = 0; x < atlas.width; ++x) {
            int f = atlas.face_at(y, x);
            if (f < 0) continue;
            for (int c = 0; c < C; ++c) {
                double v = 0.0;
                for (int k = 0; k < 3; ++k)
                    v += atlas.texel_bary.at(y, x, k) * values(atlas.faces(f, k), c);
                out.at(y, x, c) = v;
            }
        }
    }
    return out;
}

FlipMap build_flip_map(const UVAtlas& atlas) {
    FlipMap fm;
    fm.height = atlas.height;
    fm.width = atlas.width;
    fm.flip.resize(static_cast<size_t>(atlas.height) * atlas.width);
    for (int y = 0; y < atlas.height; ++y) {
        for (int x = 0; x < atlas.width; ++x) {
            int t = y * atlas.width + x;
            int isl = atlas.texel_island[t];
            if (isl < 0) {
                fm.flip[t] = t;
                continue;
            }
            const IslandRect& src = atlas.islands[isl];
            const IslandRect& dst = atlas.islands[src.partner];
            int mx = dst.x0 + (src.w - 1 - (x - src.x0));
            int my = dst.y0 + (y - src.y0);
            fm.flip[t] = my * atlas.width + mx;
        }
    }
    return fm;
}

PartSegmentation build_part_segmentation(const BodyModel& model, const UVAtlas& atlas) {
    // nearest sparse-joint site per template vertex, one-hot
    const MatX sites = model.lsp_regressor * model.template_vertices;  // 14 x 3
    const int N = model.vertex_count();
    MatX onehot = MatX::Zero(N, kNumParts);
    for (int i = 0; i < N; ++i) {
        int best = 0;
        double best_d = (model.template_vertices.row(i) - sites.row(0)).squaredNorm();
        for (int p = 1; p < kNumParts; ++p) {
            double d = (model.template_vertices.row(i) - sites.row(p)).squaredNorm();
            if (d < best_d) {
                best_d = d;
                best = p;
            }
        }
        onehot(i, best) = 1.0;
    }

    Grid prob = rasterize_vertex_attribute(atlas, onehot);

    PartSegmentation seg;
    seg.height = atlas.height;
    seg.width = atlas.width;
    seg.assign.assign(static_cast<size_t>(atlas.height) * atlas.width, -1);
    for (int y = 0; y < atlas.height; ++y) {
        for (int x = 0; x < atlas.width; ++x) {
            if (!atlas.inside.at(y, x)) continue;
            int best = 0;
            double best_p = prob.at(y, x, 0);
            for (int p = 1; p < kNumParts; ++p) {
                if (prob.at(y, x, p) > best_p) {
                    best_p = prob.at(y, x, p);
                    best = p;
                }
            }
            seg.assign[y * atlas.width + x] = best;
        }
    }

    // symmetrize: each mirror pair of texels gets the label pair maximizing
    // the combined rasterized probability, ties toward the lower part id
    FlipMap fm = build_flip_map(atlas);
    for (int t = 0; t < atlas.height * atlas.width; ++t) {
        int ft = fm.flip[t];
        if (ft <= t) continue;  // visit each unordered pair once
        if (seg.assign[t] < 0 || seg.assign[ft] < 0) continue;
        if (seg.assign[ft] == kPartMirror[seg.assign[t]]) continue;
        int ty = t / atlas.width, tx = t % atlas.width;
        int fy = ft / atlas.width, fx = ft % atlas.width;
        int best = 0;
        double best_score = -1.0;
        for (int l = 0; l < kNumParts; ++l) {
            double score = prob.at(ty, tx, l) + prob.at(fy, fx, kPartMirror[l]);
            if (score > best_score + 1e-15) {
                best_score = score;
                best = l;
            }
        }
        seg.assign[t] = best;
        seg.assign[ft] = kPartMirror[best];
    }

    std::array<int, kNumParts> counts{};
    for (int v : seg.assign)
        if (v >= 0) ++counts[v];
    for (int p = 0; p < kNumParts; ++p)
        if (counts[p] == 0) throw std::runtime_error("part segmentation: part owns no texel");
    return seg;
}

Vec3 texel_surface_point(const UVAtlas& atlas, const BodyModel& model, int y, int x) {
    int f = atlas.face_at(y, x);
    if (f < 0) throw std::invalid_argument("texel_surface_point: background texel");
    Vec3 p = Vec3::Zero();
    for (int c = 0; c < 3; ++c)
        p += atlas.texel_bary.at(y, x, c) * Vec3(model.template_vertices.row(atlas.faces(f, c)));
    return p;
}

}  // namespace uvbody
