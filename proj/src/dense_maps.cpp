#include "uvbody/dense_maps.hpp"

#include "uvbody/raster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace uvbody {

Vec2 project_weak_perspective(const Vec3& point, const Camera& camera) {
    camera.validate();
    return camera.scale * point.head<2>() + camera.offset;
}

MatX project_weak_perspective(const MatX& points, const Camera& camera) {
    camera.validate();
    if (points.cols() != 3) throw std::invalid_argument("project: expected K x 3 points");
    MatX out(points.rows(), 2);
    out.col(0) = camera.scale * points.col(0).array() + camera.offset.x();
    out.col(1) = camera.scale * points.col(1).array() + camera.offset.y();
    return out;
}

namespace {

ImageMaps empty_maps(int height, int width) {
    ImageMaps m;
    m.height = height;
    m.width = width;
    m.mask = MaskGrid(height, width, false);
    m.uv = Grid(height, width, 2);
    m.joint = Grid(height, width, 3);
    m.location = Grid(height, width, 3);
    m.displacement = Grid(height, width, 3);
    m.part.assign(static_cast<size_t>(height) * width, -1);
    return m;
}

UVMaps empty_uv_maps(int height, int width) {
    UVMaps m;
    m.height = height;
    m.width = width;
    m.valid = MaskGrid(height, width, false);
    m.joint = Grid(height, width, 3);
    m.location = Grid(height, width, 3);
    m.displacement = Grid(height, width, 3);
    return m;
}

// Dominant part id per face from its atlas texels; faces that cover no texel
// (possible at coarse resolutions) fall back to the part nearest the centroid.
std::vector<int> face_parts(const BodyModel& model, const UVAtlas& atlas, const PartSegmentation& part_seg) {
    const int F = model.face_count();
    std::vector<std::array<int, kNumParts>> tally(F, std::array<int, kNumParts>{});
    for (int y = 0; y < atlas.height; ++y)
        for (int x = 0; x < atlas.width; ++x) {
            int f = atlas.face_at(y, x);
            if (f >= 0 && part_seg.at(y, x) >= 0) ++tally[f][part_seg.at(y, x)];
        }
    const MatX sites = model.lsp_regressor * model.template_vertices;
    std::vector<int> out(F, 0);
    for (int f = 0; f < F; ++f) {
        int best = -1, best_n = 0;
        for (int p = 0; p < kNumParts; ++p)
            if (tally[f][p] > best_n) {
                best_n = tally[f][p];
                best = p;
            }
        if (best < 0) {
            Vec3 centroid = (model.template_vertices.row(model.faces(f, 0)) +
                             model.template_vertices.row(model.faces(f, 1)) +
                             model.template_vertices.row(model.faces(f, 2))) /
                            3.0;
            double best_d = std::numeric_limits<double>::infinity();
            for (int p = 0; p < kNumParts; ++p) {
                double d = (centroid.transpose() - sites.row(p)).squaredNorm();
                if (d < best_d) {
                    best_d = d;
                    best = p;
                }
            }
        }
        out[f] = best;
    }
    return out;
}

}  // namespace

ImageMaps render_dense_maps(const Mesh& mesh, const BodyModel& model, const UVAtlas& atlas,
                            const PartSegmentation& part_seg, const JointSet& joints_gt,
                            const Camera& camera, int height, int width) {
    camera.validate();
    if (mesh.vertex_count() != model.vertex_count())
        throw std::invalid_argument("render: mesh does not match the model");

    const MatX projected = project_weak_perspective(mesh.vertices, camera);
    int inside_count = 0;
    for (int i = 0; i < projected.rows(); ++i) {
        if (projected(i, 0) >= 0.0 && projected(i, 0) < width && projected(i, 1) >= 0.0 &&
            projected(i, 1) < height)
            ++inside_count;
    }
    if (inside_count * 2 < projected.rows())
        throw std::invalid_argument("render: camera must place at least half the vertices in frame");

    ImageMaps maps = empty_maps(height, width);
    std::vector<double> zbuf(static_cast<size_t>(height) * width,
                             std::numeric_limits<double>::infinity());
    const std::vector<int> fallback_part = face_parts(model, atlas, part_seg);

    const int F = model.face_count();
    for (int f = 0; f < F; ++f) {
        double tx[3], ty[3], tz[3];
        for (int c = 0; c < 3; ++c) {
            int v = model.faces(f, c);
            tx[c] = projected(v, 0);
            ty[c] = projected(v, 1);
            tz[c] = mesh.vertices(v, 2);
        }
        if (std::abs(raster::signed_area2(tx, ty)) < 1e-12) continue;  // degenerate
        int x_lo = std::max(0, static_cast<int>(std::floor(std::min({tx[0], tx[1], tx[2]}) - 0.5)));
        int x_hi = std::min(width - 1, static_cast<int>(std::ceil(std::max({tx[0], tx[1], tx[2]}))));
        int y_lo = std::max(0, static_cast<int>(std::floor(std::min({ty[0], ty[1], ty[2]}) - 0.5)));
        int y_hi = std::min(height - 1, static_cast<int>(std::ceil(std::max({ty[0], ty[1], ty[2]}))));
        for (int y = y_lo; y <= y_hi; ++y) {
            for (int x = x_lo; x <= x_hi; ++x) {
                double px = x + 0.5, py = y + 0.5;
                if (!raster::point_in_triangle(tx, ty, px, py)) continue;
                double w[3];
                raster::barycentric(tx, ty, px, py, w);
                double depth = w[0] * tz[0] + w[1] * tz[1] + w[2] * tz[2];
                size_t t = static_cast<size_t>(y) * width + x;
                if (depth >= zbuf[t]) continue;  // nearer surface already stored
                zbuf[t] = depth;

                double u = 0.0, v = 0.0;
                Vec3 loc = Vec3::Zero();
                for (int c = 0; c < 3; ++c) {
                    u += w[c] * atlas.corner_uv(f, 2 * c);
                    v += w[c] * atlas.corner_uv(f, 2 * c + 1);
                    loc += w[c] * Vec3(mesh.vertices.row(model.faces(f, c)));
                }
                int uix, uiy;
                atlas.uv_to_texel(u, v, uix, uiy);
                int part = part_seg.at(uiy, uix);
                if (part < 0) part = fallback_part[f];
                Vec3 joint = joints_gt.joints.row(part);

                maps.mask.set(y, x, true);
                maps.uv.at(y, x, 0) = u;
                maps.uv.at(y, x, 1) = v;
                maps.set_part(y, x, part);
                maps.location.set_vec3(y, x, loc);
                maps.joint.set_vec3(y, x, joint);
                maps.displacement.set_vec3(y, x, loc - joint);
            }
        }
    }
    return maps;
}

ImageMaps apply_synthetic_occlusion(const ImageMaps& maps, uint64_t seed, const OcclusionConfig& config) {
    config.validate();
    ImageMaps out = maps;
    Rng rng(seed);
    int count = config.count_min == config.count_max
                    ? config.count_min
                    : rng.uniform_int(config.count_min, config.count_max);
    for (int r = 0; r < count; ++r) {
        int w = std::min(out.width, rng.uniform_int(config.size_min, config.size_max));
        int h = std::min(out.height, rng.uniform_int(config.size_min, config.size_max));
        int x0 = rng.uniform_int(0, std::max(0, out.width - w));
        int y0 = rng.uniform_int(0, std::max(0, out.height - h));
        for (int y = y0; y < y0 + h; ++y) {
            for (int x = x0; x < x0 + w; ++x) {
                out.mask.set(y, x, false);
                out.part[static_cast<size_t>(y) * out.width + x] = -1;
                out.uv.at(y, x, 0) = out.uv.at(y, x, 1) = 0.0;
                for (int c = 0; c < 3; ++c) {
                    out.joint.at(y, x, c) = 0.0;
                    out.location.at(y, x, c) = 0.0;
                    out.displacement.at(y, x, c) = 0.0;
                }
            }
        }
    }
    return out;
}

ImageMaps add_prediction_noise(const ImageMaps& maps, double sigma, uint64_t seed) {
    if (sigma < 0.0) throw std::invalid_argument("prediction noise: sigma must be >= 0");
    if (sigma == 0.0) return maps;
    ImageMaps out = maps;
    Rng rng(seed);
    for (int y = 0; y < out.height; ++y) {
        for (int x = 0; x < out.width; ++x) {
            if (!out.mask.at(y, x)) continue;
            for (int c = 0; c < 2; ++c)
                out.uv.at(y, x, c) = std::clamp(out.uv.at(y, x, c) + sigma * rng.normal(), 0.0, 1.0);
            for (int c = 0; c < 3; ++c) {
                out.location.at(y, x, c) += sigma * rng.normal();
                out.joint.at(y, x, c) += sigma * rng.normal();
                out.displacement.at(y, x, c) = out.location.at(y, x, c) - out.joint.at(y, x, c);
            }
        }
    }
    return out;
}

UVMaps warp_image_to_uv(const ImageMaps& maps, const UVAtlas& atlas, size_t* clamped_count) {
    UVMaps out = empty_uv_maps(atlas.height, atlas.width);
    Grid joint_sum(atlas.height, atlas.width, 3), loc_sum(atlas.height, atlas.width, 3);
    std::vector<int> count(static_cast<size_t>(atlas.height) * atlas.width, 0);
    size_t clamped = 0;

    for (int y = 0; y < maps.height; ++y) {
        for (int x = 0; x < maps.width; ++x) {
            if (!maps.mask.at(y, x)) continue;
            double u = maps.uv.at(y, x, 0), v = maps.uv.at(y, x, 1);
            if (u < 0.0 || u > 1.0 || v < 0.0 || v > 1.0) ++clamped;
            int tx, ty;
            atlas.uv_to_texel(u, v, tx, ty);
            for (int c = 0; c < 3; ++c) {
                joint_sum.at(ty, tx, c) += maps.joint.at(y, x, c);
                loc_sum.at(ty, tx, c) += maps.location.at(y, x, c);
            }
            ++count[static_cast<size_t>(ty) * atlas.width + tx];
        }
    }
    for (int y = 0; y < atlas.height; ++y) {
        for (int x = 0; x < atlas.width; ++x) {
            int n = count[static_cast<size_t>(y) * atlas.width + x];
            if (n == 0) continue;
            out.valid.set(y, x, true);
            for (int c = 0; c < 3; ++c) {
                out.joint.at(y, x, c) = joint_sum.at(y, x, c) / n;
                out.location.at(y, x, c) = loc_sum.at(y, x, c) / n;
                out.displacement.at(y, x, c) = out.location.at(y, x, c) - out.joint.at(y, x, c);
            }
        }
    }
    if (clamped_count) *clamped_count = clamped;
    return out;
}

UVMaps make_uv_ground_truth(const Mesh& mesh, const BodyModel&, const PartSegmentation& part_seg,
                            const JointSet& joints_gt, const UVAtlas& atlas) {
    if (part_seg.height != atlas.height || part_seg.width != atlas.width)
        throw std::invalid_argument("uv ground truth: segmentation and atlas resolutions differ");
    UVMaps out = empty_uv_maps(atlas.height, atlas.width);
    Grid loc = rasterize_vertex_attribute(atlas, mesh.vertices);
    for (int y = 0; y < atlas.height; ++y) {
        for (int x = 0; x < atlas.width; ++x) {
            if (!atlas.inside.at(y, x)) continue;
            int part = part_seg.at(y, x);
            Vec3 j = joints_gt.joints.row(part);
            Vec3 l = loc.vec3(y, x);
            out.valid.set(y, x, true);
            out.location.set_vec3(y, x, l);
            out.joint.set_vec3(y, x, j);
            out.displacement.set_vec3(y, x, l - j);
        }
    }
    return out;
}

}  // namespace uvbody
