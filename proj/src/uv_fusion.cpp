#include "uvbody/uv_fusion.hpp"

#include <cmath>
#include <limits>

namespace uvbody {

namespace {

constexpr int kFarAway = 1 << 28;

// chessboard distance to the nearest seed texel, two-pass chamfer
std::vector<int> chessboard_distance(int height, int width, const std::vector<uint8_t>& seed) {
    std::vector<int> dist(static_cast<size_t>(height) * width, kFarAway);
    for (size_t i = 0; i < seed.size(); ++i)
        if (seed[i]) dist[i] = 0;
    auto at = [&](int y, int x) -> int& { return dist[static_cast<size_t>(y) * width + x]; };
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) {
            int d = at(y, x);
            if (y > 0) {
                d = std::min(d, at(y - 1, x) + 1);
                if (x > 0) d = std::min(d, at(y - 1, x - 1) + 1);
                if (x + 1 < width) d = std::min(d, at(y - 1, x + 1) + 1);
            }
            if (x > 0) d = std::min(d, at(y, x - 1) + 1);
            at(y, x) = d;
        }
    for (int y = height - 1; y >= 0; --y)
        for (int x = width - 1; x >= 0; --x) {
            int d = at(y, x);
            if (y + 1 < height) {
                d = std::min(d, at(y + 1, x) + 1);
                if (x > 0) d = std::min(d, at(y + 1, x - 1) + 1);
                if (x + 1 < width) d = std::min(d, at(y + 1, x + 1) + 1);
            }
            if (x + 1 < width) d = std::min(d, at(y, x + 1) + 1);
            at(y, x) = d;
        }
    return dist;
}

}  // namespace

Grid distribute_joints_to_uv(const JointSet& j_refine, const PartSegmentation& part_seg) {
    for (int k = 0; k < kNumParts; ++k)
        if (!j_refine.visible[k])
            throw std::invalid_argument("distribute_joints_to_uv: all joints must be visible");
    Grid out(part_seg.height, part_seg.width, 3);
    for (int y = 0; y < part_seg.height; ++y)
        for (int x = 0; x < part_seg.width; ++x) {
            int p = part_seg.at(y, x);
            if (p >= 0) out.set_vec3(y, x, j_refine.joints.row(p));
        }
    return out;
}

UVMaps repose_uv_from_ik(const BodyModel& model, const UVAtlas& atlas, const PartSegmentation& part_seg,
                         const PoseParams& theta, const ShapeParams& beta) {
    Mesh posed = skin(model, theta, beta);
    JointSet joints = JointSet::all_visible(regress_joints(posed, model.lsp_regressor));
    return make_uv_ground_truth(posed, model, part_seg, joints, atlas);
}

FusedUVMaps fuse_uv_maps(const UVMaps& dmp, const UVMaps& ik, const Grid& uv_jrefine, int band_width) {
    if (dmp.height != ik.height || dmp.width != ik.width || uv_jrefine.height != ik.height ||
        uv_jrefine.width != ik.width || uv_jrefine.channels != 3)
        throw std::invalid_argument("fuse_uv_maps: resolution mismatch");
    if (band_width < 0) throw std::invalid_argument("fuse_uv_maps: band width must be >= 0");

    const int H = ik.height, W = ik.width;
    FusedUVMaps out;
    out.height = H;
    out.width = W;
    out.inside = ik.valid;  // the reposed template covers every inside texel
    out.joint = Grid(H, W, 3);
    out.location = Grid(H, W, 3);
    out.displacement = Grid(H, W, 3);
    out.source.assign(static_cast<size_t>(H) * W, FuseSource::background);

    // holes: inside texels with no dense-map evidence
    std::vector<uint8_t> hole(static_cast<size_t>(H) * W, 0);
    bool any_hole = false;
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x)
            if (ik.valid.at(y, x) && !dmp.valid.at(y, x)) {
                hole[static_cast<size_t>(y) * W + x] = 1;
                any_hole = true;
            }
    std::vector<int> dist;
    if (any_hole) dist = chessboard_distance(H, W, hole);

    for (int y = 0; y < H; ++y) {
        for (int x = 0; x < W; ++x) {
            if (!ik.valid.at(y, x)) continue;
            size_t t = static_cast<size_t>(y) * W + x;
            Vec3 jref = uv_jrefine.vec3(y, x);
            Vec3 ik_shifted = ik.location.vec3(y, x) + (jref - ik.joint.vec3(y, x));
            Vec3 loc;
            if (!dmp.valid.at(y, x)) {
                loc = ik_shifted;
                out.source[t] = FuseSource::ik;
            } else {
                int d = any_hole ? dist[t] : kFarAway;
                if (d > band_width) {
                    loc = dmp.location.vec3(y, x);
                    out.source[t] = FuseSource::dmp;
                } else {
                    double alpha = static_cast<double>(d) / (band_width + 1);
                    loc = alpha * dmp.location.vec3(y, x) + (1.0 - alpha) * ik_shifted;
                    out.source[t] = FuseSource::blend;
                }
            }
            out.joint.set_vec3(y, x, jref);
            out.location.set_vec3(y, x, loc);
            out.displacement.set_vec3(y, x, loc - jref);
        }
    }
    return out;
}

JointSet infer_joints_from_uv(const FusedUVMaps& fused, const PartSegmentation& part_seg) {
    if (fused.height != part_seg.height || fused.width != part_seg.width)
        throw std::invalid_argument("infer_joints_from_uv: resolution mismatch");
    Eigen::Matrix<double, kNumParts, 3> sums = Eigen::Matrix<double, kNumParts, 3>::Zero();
    std::array<int, kNumParts> counts{};
    for (int y = 0; y < fused.height; ++y)
        for (int x = 0; x < fused.width; ++x) {
            int p = part_seg.at(y, x);
            if (p < 0 || !fused.inside.at(y, x)) continue;
            sums.row(p) += fused.joint.vec3(y, x).transpose();
            ++counts[p];
        }
    JointSet out;
    for (int p = 0; p < kNumParts; ++p) {
        if (counts[p] == 0) throw std::runtime_error("infer_joints_from_uv: part owns no inside texel");
        out.joints.row(p) = sums.row(p) / counts[p];
        out.visible[p] = true;
    }
    return out;
}

Mesh infer_mesh_from_uv(const FusedUVMaps& fused, const UVAtlas& atlas, const BodyModel& model,
                        const Mesh* ik_fallback, int* fallback_count) {
    const int N = model.vertex_count();
    if (ik_fallback && ik_fallback->vertex_count() != N)
        throw std::invalid_argument("infer_mesh_from_uv: fallback mesh size mismatch");

    // first corner occurrence defines each vertex's canonical uv
    std::vector<double> vert_u(N, -1.0), vert_v(N, 0.0);
    for (int f = 0; f < model.face_count(); ++f)
        for (int c = 0; c < 3; ++c) {
            int v = model.faces(f, c);
            if (vert_u[v] < 0.0) {
                vert_u[v] = atlas.corner_uv(f, 2 * c);
                vert_v[v] = atlas.corner_uv(f, 2 * c + 1);
            }
        }

    Mesh out;
    out.vertices.resize(N, 3);
    int fallbacks = 0;
    VecX sample;
    for (int i = 0; i < N; ++i) {
        if (sample_bilinear(fused.location, fused.inside, vert_u[i], vert_v[i], sample)) {
            out.vertices.row(i) = Eigen::RowVector3d(sample[0], sample[1], sample[2]);
        } else {
            ++fallbacks;
            if (ik_fallback)
                out.vertices.row(i) = ik_fallback->vertices.row(i);
            else
                out.vertices.row(i).setZero();
        }
    }
    if (fallback_count) *fallback_count = fallbacks;
    return out;
}

UVMaps fill_nearest_valid(const UVMaps& partial, const MaskGrid& inside) {
    if (partial.height != inside.height || partial.width != inside.width)
        throw std::invalid_argument("fill_nearest_valid: resolution mismatch");
    const int H = partial.height, W = partial.width;
    UVMaps out = partial;

    // propagate the index of the nearest valid texel alongside the distance
    std::vector<int> dist(static_cast<size_t>(H) * W, kFarAway);
    std::vector<int> src(static_cast<size_t>(H) * W, -1);
    for (int t = 0; t < H * W; ++t)
        if (partial.valid.data[t]) {
            dist[t] = 0;
            src[t] = t;
        }
    auto relax = [&](int t, int from) {
        if (src[from] < 0) return;
        if (dist[from] + 1 < dist[t]) {
            dist[t] = dist[from] + 1;
            src[t] = src[from];
        }
    };
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
            int t = y * W + x;
            if (y > 0) {
                relax(t, t - W);
                if (x > 0) relax(t, t - W - 1);
                if (x + 1 < W) relax(t, t - W + 1);
            }
            if (x > 0) relax(t, t - 1);
        }
    for (int y = H - 1; y >= 0; --y)
        for (int x = W - 1; x >= 0; --x) {
            int t = y * W + x;
            if (y + 1 < H) {
                relax(t, t + W);
                if (x > 0) relax(t, t + W - 1);
                if (x + 1 < W) relax(t, t + W + 1);
            }
            if (x + 1 < W) relax(t, t + 1);
        }

    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
            int t = y * W + x;
            if (!inside.at(y, x) || partial.valid.at(y, x) || src[t] < 0) continue;
            int sy = src[t] / W, sx = src[t] % W;
            out.valid.set(y, x, true);
            out.joint.set_vec3(y, x, partial.joint.vec3(sy, sx));
            out.location.set_vec3(y, x, partial.location.vec3(sy, sx));
            out.displacement.set_vec3(y, x, partial.displacement.vec3(sy, sx));
        }
    return out;
}

LossBreakdown loss_uvi_terms(const FusedUVMaps& pred, const Camera& camera, const JointSet& pred_joints,
                             const UVMaps& gt, const JointSet& gt_joints, const MatX& gt_j2d,
                             const ImageMaps& gt_image, const FlipMap& flip) {
    if (pred.height != gt.height || pred.width != gt.width)
        throw std::invalid_argument("loss_uvi_terms: resolution mismatch");

    MaskGrid both(pred.height, pred.width, false);
    for (int y = 0; y < pred.height; ++y)
        for (int x = 0; x < pred.width; ++x) both.set(y, x, pred.inside.at(y, x) && gt.valid.at(y, x));

    LossBreakdown b;
    // one mean over the three map channels (they share the mask)
    b.l_map = (l1_masked(pred.location, gt.location, both) + l1_masked(pred.joint, gt.joint, both) +
               l1_masked(pred.displacement, gt.displacement, both)) /
              3.0;
    b.l_j3d = loss_j3d(pred_joints, gt_joints);
    b.l_j2d = loss_j2d(pred_joints, gt_j2d, camera);
    b.l_dismag = loss_dismag(pred.displacement, flip, pred.inside);
    b.l_con = loss_consistency(pred.location, pred.inside, camera, gt_image);
    return b;
}

}  // namespace uvbody
