#include "uvbody/ik.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

namespace uvbody {

namespace {

struct Fk {
    std::array<Mat3, kNumJoints> rot;
    std::array<Vec3, kNumJoints> pos;
};

Fk forward_kinematics(const KinematicTree& tree, const PoseParams& theta, const MatX& rest) {
    Fk fk;
    fk.rot[0] = rodrigues(theta.theta.row(0));
    fk.pos[0] = rest.row(0);
    for (int k = 1; k < kNumJoints; ++k) {
        int p = tree.parent[k];
        fk.rot[k] = fk.rot[p] * rodrigues(theta.theta.row(k));
        fk.pos[k] = fk.rot[p] * (rest.row(k) - rest.row(p)).transpose() + fk.pos[p];
    }
    return fk;
}

Mat3 skew(const Vec3& v) {
    Mat3 m;
    m << 0.0, -v.z(), v.y(), v.z(), 0.0, -v.x(), -v.y(), v.x(), 0.0;
    return m;
}

MatX flatten_rows(const Eigen::Matrix<double, kNumParts, 3>& j) {
    MatX v(1, kNumParts * 3);
    for (int k = 0; k < kNumParts; ++k)
        for (int c = 0; c < 3; ++c) v(0, 3 * k + c) = j(k, c);
    return v;
}

}  // namespace

AggregationResult aggregate_joints(const UVMaps& uv, const PartSegmentation& part_seg, int min_texels) {
    if (uv.height != part_seg.height || uv.width != part_seg.width)
        throw std::invalid_argument("aggregate_joints: resolution mismatch");
    if (min_texels < 1) throw std::invalid_argument("aggregate_joints: min_texels must be >= 1");

    Eigen::Matrix<double, kNumParts, 3> sums = Eigen::Matrix<double, kNumParts, 3>::Zero();
    std::array<int, kNumParts> counts{};
    for (int y = 0; y < uv.height; ++y)
        for (int x = 0; x < uv.width; ++x) {
            int p = part_seg.at(y, x);
            if (p < 0 || !uv.valid.at(y, x)) continue;
            sums.row(p) += uv.joint.vec3(y, x).transpose();
            ++counts[p];
        }

    AggregationResult out;
    out.texel_counts = counts;
    for (int p = 0; p < kNumParts; ++p) {
        if (counts[p] >= min_texels) {
            out.j_initial.joints.row(p) = sums.row(p) / counts[p];
            out.j_initial.visible[p] = true;
        } else {
            out.j_initial.visible[p] = false;
        }
    }
    out.j_initial.apply_visibility();
    return out;
}

VecX inpaint_input_layout(const AggregationResult& agg) {
    VecX x(kInpaintInputDim);
    for (int k = 0; k < kNumParts; ++k) {
        for (int c = 0; c < 3; ++c)
            x[3 * k + c] = agg.j_initial.visible[k] ? agg.j_initial.joints(k, c) : 0.0;
        x[kNumParts * 3 + k] = agg.j_initial.visible[k] ? 1.0 : 0.0;
    }
    return x;
}

JointSet inpaint_refine_joints(const MlpState& net, const AggregationResult& agg) {
    net.validate();
    if (net.spec.input_dim != kInpaintInputDim || net.spec.output_dim != kInpaintOutputDim)
        throw std::invalid_argument("inpaint net: expected 56 -> 42 layout");
    MatX x = inpaint_input_layout(agg).transpose();
    MatX y = mlp_eval(net, x);
    JointSet out;
    for (int k = 0; k < kNumParts; ++k) {
        out.joints.row(k) = Eigen::RowVector3d(y(0, 3 * k), y(0, 3 * k + 1), y(0, 3 * k + 2));
        out.visible[k] = true;
    }
    return out;
}

IkOutput gik_forward(const MlpState& net, const JointSet& j_refine) {
    net.validate();
    if (net.spec.input_dim != kGikInputDim || net.spec.output_dim != kGikOutputDim)
        throw std::invalid_argument("gik net: expected 42 -> 82 layout");
    MatX x = flatten_rows(j_refine.joints);
    MatX y = mlp_eval(net, x);
    IkOutput out;
    for (int k = 0; k < kNumJoints; ++k)
        out.theta.theta.row(k) =
            canonicalize_axis_angle(Vec3(y(0, 3 * k), y(0, 3 * k + 1), y(0, 3 * k + 2))).transpose();
    for (int b = 0; b < kShapeDim; ++b)
        out.beta.beta[b] = std::clamp(y(0, kNumJoints * 3 + b), -5.0, 5.0);
    out.j_refine = j_refine;
    return out;
}

JointEvaluator::JointEvaluator(const BodyModel& model) : model_(&model) {
    rest_base_ = model.kin_regressor * model.template_vertices;
    site_base_ = model.lsp_regressor * model.template_vertices;
    for (int b = 0; b < kShapeDim; ++b) {
        rest_dirs_[b] = model.kin_regressor * model.shape_dirs[b];
        site_dirs_[b] = model.lsp_regressor * model.shape_dirs[b];
    }
    for (int p = 0; p < kNumParts; ++p) {
        int v0 = 0;
        model.lsp_regressor.row(p).maxCoeff(&v0);
        site_joints_[p] = {-1, -1};
        site_weights_[p] = {0.0, 0.0};
        int slot = 0;
        for (int k = 0; k < kNumJoints && slot < 2; ++k) {
            double w = model.skin_weights(v0, k);
            if (w == 0.0) continue;
            site_joints_[p][slot] = k;
            site_weights_[p][slot] = w;
            ++slot;
        }
    }
}

MatX JointEvaluator::joints(const PoseParams& theta, const ShapeParams& beta) const {
    MatX rest = rest_base_;
    MatX sites = site_base_;
    for (int b = 0; b < kShapeDim; ++b) {
        if (beta.beta[b] == 0.0) continue;
        rest += beta.beta[b] * rest_dirs_[b];
        sites += beta.beta[b] * site_dirs_[b];
    }
    Fk fk = forward_kinematics(model_->tree, theta, rest);
    MatX out(kNumParts, 3);
    for (int p = 0; p < kNumParts; ++p) {
        Vec3 site = sites.row(p);
        Vec3 acc = Vec3::Zero();
        for (int s = 0; s < 2; ++s) {
            int k = site_joints_[p][s];
            if (k < 0) continue;
            acc += site_weights_[p][s] * (fk.rot[k] * (site - Vec3(rest.row(k))) + fk.pos[k]);
        }
        out.row(p) = (acc - fk.pos[0]).transpose();
    }
    return out;
}

IkSolveResult numerical_ik(const BodyModel& model, const JointSet& target, const PoseParams& init_theta,
                           const ShapeParams& init_beta, const IkSolveConfig& config) {
    if (target.visible_count() < 4)
        throw std::invalid_argument("numerical_ik: needs at least 4 visible target joints");
    init_theta.validate();
    init_beta.validate();

    JointEvaluator evaluator(model);
    std::vector<int> vis;
    for (int k = 0; k < kNumParts; ++k)
        if (target.visible[k]) vis.push_back(k);
    const int n_res = static_cast<int>(vis.size()) * 3;
    const int n_theta = kNumJoints * 3;
    const int n_par = n_theta + (config.optimize_beta ? kShapeDim : 0);

    auto unpack = [&](const VecX& p, PoseParams& th, ShapeParams& be) {
        for (int k = 0; k < kNumJoints; ++k)
            th.theta.row(k) = Eigen::RowVector3d(p[3 * k], p[3 * k + 1], p[3 * k + 2]);
        be = init_beta;
        if (config.optimize_beta)
            for (int b = 0; b < kShapeDim; ++b) be.beta[b] = p[n_theta + b];
    };
    auto residual = [&](const VecX& p) {
        PoseParams th;
        ShapeParams be;
        unpack(p, th, be);
        MatX joints = evaluator.joints(th, be);
        VecX r(n_res);
        for (size_t i = 0; i < vis.size(); ++i)
            r.segment<3>(3 * i) = (joints.row(vis[i]) - target.joints.row(vis[i])).transpose();
        return r;
    };
    auto sanitize = [&](VecX& p) {
        for (int k = 0; k < kNumJoints; ++k) {
            Vec3 a = canonicalize_axis_angle(Vec3(p[3 * k], p[3 * k + 1], p[3 * k + 2]));
            p.segment<3>(3 * k) = a;
        }
        if (config.optimize_beta)
            for (int b = 0; b < kShapeDim; ++b) p[n_theta + b] = std::clamp(p[n_theta + b], -5.0, 5.0);
    };

    VecX p(n_par);
    for (int k = 0; k < kNumJoints; ++k) p.segment<3>(3 * k) = init_theta.theta.row(k).transpose();
    if (config.optimize_beta)
        for (int b = 0; b < kShapeDim; ++b) p[n_theta + b] = init_beta.beta[b];

    VecX r = residual(p);
    double cost = r.squaredNorm();
    double lambda = config.lambda_init;
    IkSolveResult result;
    int iter = 0;
    bool stalled = false;
    for (; iter < config.max_iterations && cost > config.tol_cost && !stalled; ++iter) {
        MatX J(n_res, n_par);
        for (int c = 0; c < n_par; ++c) {  // central differences
            VecX pp = p, pm = p;
            pp[c] += config.fd_step;
            pm[c] -= config.fd_step;
            J.col(c) = (residual(pp) - residual(pm)) / (2.0 * config.fd_step);
        }
        MatX jtj = J.transpose() * J;
        VecX jtr = J.transpose() * r;

        bool accepted = false;
        for (int attempt = 0; attempt < 25 && !accepted; ++attempt) {
            MatX damped = jtj;
            for (int c = 0; c < n_par; ++c)
                damped(c, c) += lambda * std::max(jtj(c, c), 1e-8);
            VecX delta = damped.ldlt().solve(-jtr);
            VecX p_try = p + delta;
            sanitize(p_try);
            VecX r_try = residual(p_try);
            double cost_try = r_try.squaredNorm();
            if (cost_try < cost) {
                double improvement = cost - cost_try;
                p = p_try;
                r = r_try;
                cost = cost_try;
                lambda = std::max(lambda * config.lambda_down, 1e-12);
                accepted = true;
                if (delta.norm() < config.tol_step || improvement < config.tol_cost) stalled = true;
            } else {
                lambda *= config.lambda_up;
            }
        }
        if (!accepted) break;  // no damping level improved; report as-is
    }

    unpack(p, result.theta, result.beta);
    result.residual = std::sqrt(cost);
    result.iterations = iter;
    result.converged = cost <= std::max(config.tol_cost, 1e-12);
    return result;
}

JointSet augment_joints(const JointSet& joints, const AugmentConfig& config, uint64_t seed) {
    config.validate();
    Rng rng(seed);
    JointSet out = joints;
    for (int k = 0; k < kNumParts; ++k) {
        double nx = rng.normal(), ny = rng.normal(), nz = rng.normal();
        double occ = rng.uniform();
        if (out.visible[k]) {
            out.joints(k, 0) += config.noise_sigma * nx;
            out.joints(k, 1) += config.noise_sigma * ny;
            out.joints(k, 2) += config.noise_sigma * nz;
        }
        if (occ < config.occlusion_prob) out.visible[k] = false;
    }
    out.apply_visibility();
    return out;
}

std::vector<MocapSample> sample_mocap(int count, uint64_t seed, const PoseLimits& limits,
                                      double beta_range) {
    std::vector<MocapSample> out(count);
    for (int i = 0; i < count; ++i) {
        out[i].theta = sample_pose(mix_seed(seed, 0x706f7365ULL, i), limits);
        Rng rng(mix_seed(seed, 0x62657461ULL, i));
        for (int b = 0; b < kShapeDim; ++b) out[i].beta.beta[b] = rng.uniform(-beta_range, beta_range);
    }
    return out;
}

std::array<Mat3, 3> rodrigues_jacobian(const Vec3& axis_angle) {
    std::array<Mat3, 3> jac;
    double sq = axis_angle.squaredNorm();
    if (sq < 1e-16) {
        for (int c = 0; c < 3; ++c) jac[c] = skew(Vec3::Unit(c));
        return jac;
    }
    Mat3 r = rodrigues(axis_angle);
    for (int c = 0; c < 3; ++c) {
        Vec3 e = Vec3::Unit(c);
        jac[c] = ((axis_angle[c] * skew(axis_angle) + skew(axis_angle.cross((Mat3::Identity() - r) * e))) / sq) * r;
    }
    return jac;
}

VertexLossEvaluator::VertexLossEvaluator(const BodyModel& model) : model_(&model) {
    const int N = model.vertex_count();
    vert_joints_.assign(N, {-1, -1});
    vert_weights_.assign(N, {0.0, 0.0});
    for (int i = 0; i < N; ++i) {
        int slot = 0;
        for (int k = 0; k < kNumJoints && slot < 2; ++k) {
            double w = model.skin_weights(i, k);
            if (w == 0.0) continue;
            vert_joints_[i][slot] = k;
            vert_weights_[i][slot] = w;
            ++slot;
        }
    }
    rest_base_ = model.kin_regressor * model.template_vertices;
    for (int b = 0; b < kShapeDim; ++b) rest_dirs_[b] = model.kin_regressor * model.shape_dirs[b];
}

double VertexLossEvaluator::loss_and_grad(const PoseParams& theta, const ShapeParams& beta,
                                          const MatX& target_vertices, VecX* grad) const {
    const BodyModel& model = *model_;
    const int N = model.vertex_count();
    if (target_vertices.rows() != N || target_vertices.cols() != 3)
        throw std::invalid_argument("vertex loss: target must be N x 3");

    MatX shaped = model.template_vertices;
    MatX rest = rest_base_;
    for (int b = 0; b < kShapeDim; ++b) {
        if (beta.beta[b] == 0.0) continue;
        shaped += beta.beta[b] * model.shape_dirs[b];
        rest += beta.beta[b] * rest_dirs_[b];
    }
    Fk fk = forward_kinematics(model.tree, theta, rest);

    const double inv_count = 1.0 / (3.0 * N);
    double loss = 0.0;

    // accumulators for the pose gradient: per ancestor joint m,
    // T_m = sum_i s_i q_ik^T over weighted joints k in subtree(m),
    // u_m = sum of w s_i over the same set
    std::array<Mat3, kNumJoints> T{};
    std::array<Vec3, kNumJoints> u;
    std::array<Vec3, kNumJoints> c_joint;  // sum of w s_i grouped by the weighted joint itself
    for (int k = 0; k < kNumJoints; ++k) {
        T[k].setZero();
        u[k].setZero();
        c_joint[k].setZero();
    }
    std::vector<Vec3> z(grad ? N : 0);  // sum_k w Rg_k^T s_i, for the shape gradient
    Vec3 s_total = Vec3::Zero();

    for (int i = 0; i < N; ++i) {
        Vec3 x = shaped.row(i);
        Vec3 v = Vec3::Zero();
        Vec3 q[2];
        for (int s = 0; s < 2; ++s) {
            int k = vert_joints_[i][s];
            if (k < 0) {
                q[s].setZero();
                continue;
            }
            q[s] = vert_weights_[i][s] * (fk.rot[k] * (x - Vec3(rest.row(k))) + fk.pos[k]);
            v += q[s];
        }
        v -= fk.pos[0];

        Vec3 d = v - Vec3(target_vertices.row(i));
        loss += d.cwiseAbs().sum() * inv_count;
        if (!grad) continue;

        Vec3 s = d.unaryExpr([](double e) { return e > 0.0 ? 1.0 : (e < 0.0 ? -1.0 : 0.0); }) * inv_count;
        s_total += s;
        Vec3 zi = Vec3::Zero();
        for (int slot = 0; slot < 2; ++slot) {
            int k = vert_joints_[i][slot];
            if (k < 0) continue;
            double w = vert_weights_[i][slot];
            zi += w * (fk.rot[k].transpose() * s);
            c_joint[k] += w * s;
            for (int m = k; m >= 0; m = model.tree.parent[m]) {
                T[m] += s * q[slot].transpose();
                u[m] += w * s;
            }
        }
        z[i] = zi;
    }

    if (grad) {
        grad->setZero(kNumJoints * 3 + kShapeDim);
        for (int m = 0; m < kNumJoints; ++m) {
            Mat3 rg_par = m == 0 ? Mat3::Identity() : fk.rot[model.tree.parent[m]];
            Mat3 local = rodrigues(theta.theta.row(m));
            auto djac = rodrigues_jacobian(theta.theta.row(m));
            Mat3 rhs = T[m] - u[m] * fk.pos[m].transpose();
            for (int c = 0; c < 3; ++c) {
                Mat3 a = rg_par * (djac[c] * local.transpose()) * rg_par.transpose();
                (*grad)[3 * m + c] = (a.array() * rhs.array()).sum();
            }
        }
        // shape gradient: offsets move the shaped vertices, the rest joints,
        // and through them the posed joint positions
        for (int b = 0; b < kShapeDim; ++b) {
            const MatX& dr = rest_dirs_[b];
            std::array<Vec3, kNumJoints> dpos;
            dpos[0] = dr.row(0);
            for (int k = 1; k < kNumJoints; ++k) {
                int pj = model.tree.parent[k];
                dpos[k] = fk.rot[pj] * (dr.row(k) - dr.row(pj)).transpose() + dpos[pj];
            }
            double acc = 0.0;
            const MatX& dd = model.shape_dirs[b];
            for (int i = 0; i < N; ++i) acc += z[i].dot(Vec3(dd.row(i)));
            for (int k = 0; k < kNumJoints; ++k)
                acc += c_joint[k].dot(dpos[k] - fk.rot[k] * Vec3(dr.row(k)));
            acc -= s_total.dot(dpos[0]);
            (*grad)[kNumJoints * 3 + b] = acc;
        }
    }
    return loss;
}

std::vector<int> shuffled_indices(uint64_t seed, int epoch, int n) {
    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    Rng rng(mix_seed(seed, 0x73687566ULL, epoch));
    for (int i = n - 1; i > 0; --i) {
        int j = rng.uniform_int(0, i);
        std::swap(idx[i], idx[j]);
    }
    return idx;
}

uint64_t augment_seed(uint64_t seed, int epoch, int sample_index) {
    return mix_seed(seed ^ 0x6175676dULL, epoch, sample_index);
}

IkTrainResult train_ik_stage(const BodyModel& model, const std::vector<MocapSample>& mocap,
                             const TrainConfig& config, const MlpSpec& inpaint_spec,
                             const MlpSpec& gik_spec) {
    if (mocap.size() < 1000)
        throw std::invalid_argument("train_ik_stage: needs at least 1000 mocap samples");
    if (inpaint_spec.input_dim != kInpaintInputDim || inpaint_spec.output_dim != kInpaintOutputDim)
        throw std::invalid_argument("train_ik_stage: inpaint spec must be 56 -> 42");
    if (gik_spec.input_dim != kGikInputDim || gik_spec.output_dim != kGikOutputDim)
        throw std::invalid_argument("train_ik_stage: gik spec must be 42 -> 82");
    config.augment.validate();

    const int n = static_cast<int>(mocap.size());
    const JointEvaluator joint_eval(model);
    const VertexLossEvaluator vertex_eval(model);

    // ground-truth joints and parameter rows
    std::vector<JointSet> gt_joints(n);
    MatX gt_theta(n, kNumJoints * 3), gt_beta(n, kShapeDim);
    for (int i = 0; i < n; ++i) {
        gt_joints[i] = JointSet::all_visible(joint_eval.joints(mocap[i].theta, mocap[i].beta));
        for (int k = 0; k < kNumJoints; ++k)
            for (int c = 0; c < 3; ++c) gt_theta(i, 3 * k + c) = mocap[i].theta.theta(k, c);
        for (int b = 0; b < kShapeDim; ++b) gt_beta(i, b) = mocap[i].beta.beta[b];
    }

    IkTrainResult result;
    result.inpaint = mlp_init(inpaint_spec, mix_seed(config.seed, 0x696e70ULL));
    result.gik = mlp_init(gik_spec, mix_seed(config.seed, 0x67696bULL));
    result.inpaint.mode = MlpMode::train;
    result.gik.mode = MlpMode::train;
    AdamState adam_inpaint = adam_init(result.inpaint.param_count(), config.lr);
    AdamState adam_gik = adam_init(result.gik.param_count(), config.lr);

    uint64_t global_step = 0;
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        const std::vector<int> order = shuffled_indices(config.seed, epoch, n);
        EpochLosses sums;
        int batches = 0;
        for (int start = 0; start < n; start += config.batch_size) {
            const int bsz = std::min(config.batch_size, n - start);
            if (bsz < 2) break;  // train-mode batchnorm needs >= 2

            MatX x_inp(bsz, kInpaintInputDim), t_ji(bsz, kInpaintOutputDim);
            MatX x_gik(bsz, kGikInputDim), t_theta(bsz, kNumJoints * 3), t_beta(bsz, kShapeDim);
            std::vector<int> ids(bsz);
            for (int bi = 0; bi < bsz; ++bi) {
                int i = order[start + bi];
                ids[bi] = i;
                JointSet aug =
                    augment_joints(gt_joints[i], config.augment, augment_seed(config.seed, epoch, i));
                AggregationResult agg;
                agg.j_initial = aug;
                x_inp.row(bi) = inpaint_input_layout(agg).transpose();
                t_ji.row(bi) = flatten_rows(gt_joints[i].joints);
                x_gik.row(bi) = flatten_rows(aug.joints);
                t_theta.row(bi) = gt_theta.row(i);
                t_beta.row(bi) = gt_beta.row(i);
            }

            // inpaint/refine step
            result.inpaint.step = global_step;
            MlpCache cache_inp;
            MatX y_ji = mlp_forward(result.inpaint, x_inp, &cache_inp);
            double l_ji = (y_ji - t_ji).array().abs().mean();
            MatX up_ji = (y_ji - t_ji).unaryExpr([](double e) {
                return e > 0.0 ? 1.0 : (e < 0.0 ? -1.0 : 0.0);
            }) * (config.w_ji / static_cast<double>(y_ji.size()));

            // pose/shape regression step
            result.gik.step = global_step;
            MlpCache cache_gik;
            MatX y_gik = mlp_forward(result.gik, x_gik, &cache_gik);
            MatX y_theta = y_gik.leftCols(kNumJoints * 3);
            MatX y_beta = y_gik.rightCols(kShapeDim);
            double l_theta = (y_theta - t_theta).array().abs().mean();
            double l_beta = (y_beta - t_beta).array().abs().mean();
            MatX up_gik(bsz, kGikOutputDim);
            up_gik.leftCols(kNumJoints * 3) =
                (y_theta - t_theta).unaryExpr([](double e) {
                    return e > 0.0 ? 1.0 : (e < 0.0 ? -1.0 : 0.0);
                }) * (config.w_theta / static_cast<double>(y_theta.size()));
            up_gik.rightCols(kShapeDim) = (y_beta - t_beta).unaryExpr([](double e) {
                return e > 0.0 ? 1.0 : (e < 0.0 ? -1.0 : 0.0);
            }) * (config.w_beta / static_cast<double>(y_beta.size()));

            // vertex loss through the skinned mesh; clamped shape coefficients
            // stop their gradient, wrapped pose rows pass it through
            double l_vi = 0.0;
            for (int bi = 0; bi < bsz; ++bi) {
                PoseParams th;
                for (int k = 0; k < kNumJoints; ++k)
                    th.theta.row(k) = canonicalize_axis_angle(
                                          Vec3(y_theta(bi, 3 * k), y_theta(bi, 3 * k + 1),
                                               y_theta(bi, 3 * k + 2)))
                                          .transpose();
                ShapeParams be;
                for (int b = 0; b < kShapeDim; ++b) be.beta[b] = std::clamp(y_beta(bi, b), -5.0, 5.0);
                Mesh gt_mesh = skin(model, mocap[ids[bi]].theta, mocap[ids[bi]].beta);
                VecX g;
                l_vi += vertex_eval.loss_and_grad(th, be, gt_mesh.vertices, &g) / bsz;
                for (int c = 0; c < kNumJoints * 3; ++c)
                    up_gik(bi, c) += config.w_vi * g[c] / bsz;
                for (int b = 0; b < kShapeDim; ++b)
                    if (std::abs(y_beta(bi, b)) <= 5.0)
                        up_gik(bi, kNumJoints * 3 + b) += config.w_vi * g[kNumJoints * 3 + b] / bsz;
            }

            if (!std::isfinite(l_ji) || !std::isfinite(l_theta) || !std::isfinite(l_beta) ||
                !std::isfinite(l_vi)) {
                std::ostringstream msg;
                msg << "train_ik_stage: diverged at epoch " << epoch << " batch " << batches
                    << " (l_ji=" << l_ji << " l_theta=" << l_theta << " l_beta=" << l_beta
                    << " l_vi=" << l_vi << ")";
                throw std::runtime_error(msg.str());
            }
            if (epoch == 0 && batches == 0)
                result.first_batch = EpochLosses{l_ji, l_theta, l_beta, l_vi};

            MlpGradients g_inp = mlp_backward(result.inpaint, cache_inp, up_ji);
            VecX p_inp = params_to_vector(result.inpaint);
            adam_step(p_inp, grads_to_vector(result.inpaint, g_inp), adam_inpaint, config.lr);
            vector_to_params(result.inpaint, p_inp);

            MlpGradients g_gik = mlp_backward(result.gik, cache_gik, up_gik);
            VecX p_gik = params_to_vector(result.gik);
            adam_step(p_gik, grads_to_vector(result.gik, g_gik), adam_gik, config.lr);
            vector_to_params(result.gik, p_gik);

            sums.l_ji += l_ji;
            sums.l_theta += l_theta;
            sums.l_beta += l_beta;
            sums.l_vi += l_vi;
            ++batches;
            ++global_step;
        }
        result.curve.push_back(EpochLosses{sums.l_ji / batches, sums.l_theta / batches,
                                           sums.l_beta / batches, sums.l_vi / batches});
    }

    result.inpaint.mode = MlpMode::eval;
    result.gik.mode = MlpMode::eval;
    return result;
}

}  // namespace uvbody
