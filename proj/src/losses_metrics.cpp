#include "uvbody/losses_metrics.hpp"

#include <cmath>

namespace uvbody {

double l1_masked(const Grid& pred, const Grid& gt, const MaskGrid& mask) {
    if (!pred.same_shape(gt) || pred.height != mask.height || pred.width != mask.width)
        throw std::invalid_argument("l1_masked: shape mismatch");
    double sum = 0.0;
    size_t n = 0;
    for (int y = 0; y < pred.height; ++y)
        for (int x = 0; x < pred.width; ++x) {
            if (!mask.at(y, x)) continue;
            for (int c = 0; c < pred.channels; ++c) sum += std::abs(pred.at(y, x, c) - gt.at(y, x, c));
            n += pred.channels;
        }
    return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

double l1_mean(const MatX& pred, const MatX& gt) {
    if (pred.rows() != gt.rows() || pred.cols() != gt.cols())
        throw std::invalid_argument("l1_mean: shape mismatch");
    if (pred.size() == 0) return 0.0;
    return (pred - gt).array().abs().mean();
}

double bce_mask_loss(const Grid& pred_prob, const MaskGrid& gt_mask) {
    if (pred_prob.height != gt_mask.height || pred_prob.width != gt_mask.width ||
        pred_prob.channels != 1)
        throw std::invalid_argument("bce_mask_loss: shape mismatch");
    constexpr double kClamp = 1e-7;
    double sum = 0.0;
    for (int y = 0; y < pred_prob.height; ++y)
        for (int x = 0; x < pred_prob.width; ++x) {
            double p = std::clamp(pred_prob.at(y, x, 0), kClamp, 1.0 - kClamp);
            sum += gt_mask.at(y, x) ? -std::log(p) : -std::log(1.0 - p);
        }
    return sum / (static_cast<double>(pred_prob.height) * pred_prob.width);
}

double loss_dismag(const Grid& uv_d, const FlipMap& flip, const MaskGrid& valid) {
    if (uv_d.height != flip.height || uv_d.width != flip.width || uv_d.channels != 3)
        throw std::invalid_argument("loss_dismag: shape mismatch");
    double sum = 0.0;
    size_t n = 0;
    for (int y = 0; y < uv_d.height; ++y)
        for (int x = 0; x < uv_d.width; ++x) {
            if (!valid.at(y, x)) continue;
            int ft = flip.at(y, x);
            int fy = ft / uv_d.width, fx = ft % uv_d.width;
            if (!valid.at(fy, fx)) continue;
            sum += std::abs(uv_d.vec3(y, x).norm() - uv_d.vec3(fy, fx).norm());
            ++n;
        }
    return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

double loss_j3d(const JointSet& pred, const JointSet& gt) {
    return (pred.joints - gt.joints).array().abs().mean();
}

double loss_j2d(const JointSet& pred_j3d, const MatX& gt_j2d, const Camera& camera) {
    camera.validate();
    if (gt_j2d.rows() != kNumParts || gt_j2d.cols() != 2)
        throw std::invalid_argument("loss_j2d: expected 14 x 2 targets");
    MatX p2d = project_weak_perspective(MatX(pred_j3d.joints), camera);
    return (p2d - gt_j2d).array().abs().mean();
}

bool sample_bilinear(const Grid& map, const MaskGrid& valid, double u, double v, VecX& out) {
    double gx = u * map.width - 0.5;
    double gy = v * map.height - 0.5;
    int x0 = static_cast<int>(std::floor(gx));
    int y0 = static_cast<int>(std::floor(gy));
    double fx = gx - x0, fy = gy - y0;
    const double wts[4] = {(1 - fx) * (1 - fy), fx * (1 - fy), (1 - fx) * fy, fx * fy};
    const int xs[4] = {x0, x0 + 1, x0, x0 + 1};
    const int ys[4] = {y0, y0, y0 + 1, y0 + 1};

    out = VecX::Zero(map.channels);
    double wsum = 0.0;
    for (int k = 0; k < 4; ++k) {
        if (xs[k] < 0 || xs[k] >= map.width || ys[k] < 0 || ys[k] >= map.height) continue;
        if (!valid.at(ys[k], xs[k])) continue;
        for (int c = 0; c < map.channels; ++c) out[c] += wts[k] * map.at(ys[k], xs[k], c);
        wsum += wts[k];
    }
    if (wsum <= 0.0) return false;
    out /= wsum;
    return true;
}

double loss_consistency(const Grid& pred_uv_l, const MaskGrid& pred_valid, const Camera& camera,
                        const ImageMaps& gt_maps, bool* empty_foreground) {
    camera.validate();
    double sum = 0.0;
    size_t n = 0;
    VecX loc;
    for (int y = 0; y < gt_maps.height; ++y)
        for (int x = 0; x < gt_maps.width; ++x) {
            if (!gt_maps.mask.at(y, x)) continue;
            if (!sample_bilinear(pred_uv_l, pred_valid, gt_maps.uv.at(y, x, 0), gt_maps.uv.at(y, x, 1),
                                 loc))
                continue;
            Vec2 p = project_weak_perspective(Vec3(loc[0], loc[1], loc[2]), camera);
            sum += std::abs(p.x() - (x + 0.5)) + std::abs(p.y() - (y + 0.5));
            n += 2;
        }
    if (empty_foreground) *empty_foreground = (n == 0);
    return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

namespace {

// joints visible in both sets
std::vector<int> common_visible(const JointSet& a, const JointSet& b) {
    std::vector<int> idx;
    for (int k = 0; k < kNumParts; ++k)
        if (a.visible[k] && b.visible[k]) idx.push_back(k);
    return idx;
}

}  // namespace

double mpjpe(const JointSet& pred, const JointSet& gt) {
    auto idx = common_visible(pred, gt);
    if (idx.empty()) throw std::invalid_argument("mpjpe: no commonly visible joints");
    double sum = 0.0;
    for (int k : idx) sum += (pred.joints.row(k) - gt.joints.row(k)).norm();
    return 1000.0 * sum / static_cast<double>(idx.size());
}

double mpve(const Mesh& pred, const Mesh& gt) {
    if (pred.vertices.rows() != gt.vertices.rows())
        throw std::invalid_argument("mpve: vertex count mismatch");
    double sum = 0.0;
    for (int i = 0; i < pred.vertices.rows(); ++i)
        sum += (pred.vertices.row(i) - gt.vertices.row(i)).norm();
    return 1000.0 * sum / static_cast<double>(pred.vertices.rows());
}

double pa_mpjpe(const JointSet& pred, const JointSet& gt) {
    auto idx = common_visible(pred, gt);
    if (idx.size() < 3) throw std::invalid_argument("pa_mpjpe: needs at least 3 common joints");
    const int n = static_cast<int>(idx.size());
    MatX P(n, 3), G(n, 3);
    for (int i = 0; i < n; ++i) {
        P.row(i) = pred.joints.row(idx[i]);
        G.row(i) = gt.joints.row(idx[i]);
    }
    Eigen::RowVector3d mu_p = P.colwise().mean(), mu_g = G.colwise().mean();
    MatX Pc = P.rowwise() - mu_p, Gc = G.rowwise() - mu_g;

    Mat3 H = Pc.transpose() * Gc;
    Eigen::JacobiSVD<Mat3> svd(H, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Vec3 sing = svd.singularValues();
    if (sing[1] < 1e-12 * std::max(sing[0], 1e-300))
        throw std::invalid_argument("pa_mpjpe: degenerate (collinear) configuration");
    Mat3 U = svd.matrixU(), V = svd.matrixV();
    double d = (V * U.transpose()).determinant() < 0.0 ? -1.0 : 1.0;
    Mat3 D = Vec3(1.0, 1.0, d).asDiagonal();
    Mat3 R = V * D * U.transpose();

    double denom = Pc.array().square().sum();
    if (denom < 1e-300) throw std::invalid_argument("pa_mpjpe: degenerate prediction");
    double s = (sing.asDiagonal().toDenseMatrix() * D).trace() / denom;

    MatX aligned = (s * (R * Pc.transpose())).transpose().rowwise() + mu_g;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) sum += (aligned.row(i) - G.row(i)).norm();
    return 1000.0 * sum / static_cast<double>(n);
}

LossBreakdown compute_dmp_losses(const ImageMaps& pred, const ImageMaps& gt) {
    if (pred.height != gt.height || pred.width != gt.width)
        throw std::invalid_argument("dmp losses: resolution mismatch");
    MaskGrid both(pred.height, pred.width, false);
    for (int y = 0; y < pred.height; ++y)
        for (int x = 0; x < pred.width; ++x) both.set(y, x, pred.mask.at(y, x) && gt.mask.at(y, x));

    Grid prob(pred.height, pred.width, 1);
    for (int y = 0; y < pred.height; ++y)
        for (int x = 0; x < pred.width; ++x) prob.at(y, x, 0) = pred.mask.at(y, x) ? 1.0 : 0.0;

    LossBreakdown b;
    b.l_mib = bce_mask_loss(prob, gt.mask);
    b.l_miuv = l1_masked(pred.uv, gt.uv, both);
    b.l_ml = l1_masked(pred.location, gt.location, both);
    b.l_mj = l1_masked(pred.joint, gt.joint, both);
    b.l_md = l1_masked(pred.displacement, gt.displacement, both);
    return b;
}

}  // namespace uvbody
