#include "uvbody/nn_core.hpp"

#include <cmath>

namespace uvbody {

namespace {

constexpr double kBnEps = 1e-5;
constexpr double kBnMomentum = 0.1;

Linear linear_init(int out, int in, Rng& rng) {
    Linear l;
    l.w.resize(out, in);
    double limit = std::sqrt(6.0 / in);
    for (int i = 0; i < out; ++i)
        for (int j = 0; j < in; ++j) l.w(i, j) = rng.uniform(-limit, limit);
    l.b = VecX::Zero(out);
    return l;
}

BatchNorm bn_init(int dim) {
    BatchNorm bn;
    bn.gamma = VecX::Ones(dim);
    bn.shift = VecX::Zero(dim);
    bn.running_mean = VecX::Zero(dim);
    bn.running_var = VecX::Ones(dim);
    return bn;
}

MatX linear_forward(const Linear& l, const MatX& x, MlpCache::LinearCache* c) {
    if (c) c->in = x;
    return (x * l.w.transpose()).rowwise() + l.b.transpose();
}

MatX linear_backward(const Linear& l, const MlpCache::LinearCache& c, const MatX& dy, LinearGrad& g) {
    g.w = dy.transpose() * c.in;
    g.b = dy.colwise().sum();
    return dy * l.w;
}

MatX bn_forward(BatchNorm& bn, const MatX& x, MlpMode mode, MlpCache::BnCache* c) {
    const auto B = x.rows();
    if (mode == MlpMode::train) {
        VecX mean = x.colwise().mean();
        MatX centered = x.rowwise() - mean.transpose();
        VecX var = centered.array().square().colwise().mean();
        VecX inv_std = (var.array() + kBnEps).rsqrt();
        MatX xhat = centered.array().rowwise() * inv_std.transpose().array();
        bn.running_mean = (1.0 - kBnMomentum) * bn.running_mean + kBnMomentum * mean;
        VecX var_unbiased = var * (static_cast<double>(B) / std::max<double>(1.0, B - 1.0));
        bn.running_var = (1.0 - kBnMomentum) * bn.running_var + kBnMomentum * var_unbiased;
        if (c) {
            c->xhat = xhat;
            c->inv_std = inv_std;
        }
        return (xhat.array().rowwise() * bn.gamma.transpose().array()).rowwise() +
               bn.shift.transpose().array();
    }
    VecX inv_std = (bn.running_var.array() + kBnEps).rsqrt();
    MatX xhat = (x.rowwise() - bn.running_mean.transpose()).array().rowwise() *
                inv_std.transpose().array();
    return (xhat.array().rowwise() * bn.gamma.transpose().array()).rowwise() +
           bn.shift.transpose().array();
}

MatX bn_backward(const BatchNorm& bn, const MlpCache::BnCache& c, const MatX& dy, BnGrad& g) {
    const double B = static_cast<double>(dy.rows());
    g.gamma = (dy.array() * c.xhat.array()).colwise().sum();
    g.shift = dy.colwise().sum();
    MatX dxhat = dy.array().rowwise() * bn.gamma.transpose().array();
    VecX sum_dxhat = dxhat.colwise().sum();
    VecX sum_dxhat_xhat = (dxhat.array() * c.xhat.array()).colwise().sum();
    MatX dx = (B * dxhat.array() - (MatX::Ones(dy.rows(), 1) * sum_dxhat.transpose()).array() -
               c.xhat.array() * (MatX::Ones(dy.rows(), 1) * sum_dxhat_xhat.transpose()).array()) /
              B;
    return dx.array().rowwise() * c.inv_std.transpose().array();
}

MatX dropout_mask(const MlpState& state, int layer_id, Eigen::Index rows, Eigen::Index cols) {
    MatX mask(rows, cols);
    const double keep_scale = 1.0 / (1.0 - state.spec.dropout_rate);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) {
            double u = counter_uniform(state.dropout_seed, static_cast<uint64_t>(layer_id),
                                       state.step, static_cast<uint64_t>(i * cols + j));
            mask(i, j) = u >= state.spec.dropout_rate ? keep_scale : 0.0;
        }
    return mask;
}

// linear -> batchnorm -> relu -> dropout
MatX stage_forward(MlpState& state, const Linear& lin, BatchNorm* bn, int dropout_id, const MatX& x,
                   MlpCache::StageCache* c) {
    MatX h = linear_forward(lin, x, c ? &c->lin : nullptr);
    if (bn) h = bn_forward(*bn, h, state.mode, c ? &c->bn : nullptr);
    MatX relu_mask = (h.array() > 0.0).cast<double>();
    h = h.array() * relu_mask.array();
    if (c) c->relu_mask = relu_mask;
    if (state.mode == MlpMode::train && state.spec.dropout_rate > 0.0) {
        MatX mask = dropout_mask(state, dropout_id, h.rows(), h.cols());
        h.array() *= mask.array();
        if (c) c->drop_mask = std::move(mask);
    }
    return h;
}

MatX stage_backward(const MlpState&, const Linear& lin, const BatchNorm* bn,
                    const MlpCache::StageCache& c, MatX dy, LinearGrad& lg, BnGrad* bg) {
    if (c.drop_mask.size() > 0) dy.array() *= c.drop_mask.array();
    dy.array() *= c.relu_mask.array();
    if (bn) dy = bn_backward(*bn, c.bn, dy, *bg);
    return linear_backward(lin, c.lin, dy, lg);
}

}  // namespace

int64_t MlpState::param_count() const {
    auto lin = [](const Linear& l) { return l.w.size() + l.b.size(); };
    auto bn = [&](const BatchNorm& b) {
        return spec.use_batchnorm ? b.gamma.size() + b.shift.size() : 0;
    };
    int64_t n = lin(input) + bn(input_bn) + lin(output);
    for (const auto& blk : blocks) n += lin(blk.l1) + lin(blk.l2) + bn(blk.bn1) + bn(blk.bn2);
    return n;
}

void MlpState::validate() const {
    if (!initialized) throw std::invalid_argument("mlp: state is not initialized");
    auto check = [](const MatX& m) {
        if (!m.allFinite()) throw std::invalid_argument("mlp: non-finite parameters");
    };
    check(input.w);
    check(output.w);
    for (const auto& blk : blocks) {
        check(blk.l1.w);
        check(blk.l2.w);
        if (blk.bn1.running_var.size() > 0 && blk.bn1.running_var.minCoeff() <= 0.0)
            throw std::invalid_argument("mlp: running variance must stay positive");
    }
}

MlpState mlp_init(const MlpSpec& spec, uint64_t seed) {
    spec.validate();
    Rng rng(seed);
    MlpState s;
    s.spec = spec;
    s.dropout_seed = seed;
    s.input = linear_init(spec.hidden_dim, spec.input_dim, rng);
    s.input_bn = bn_init(spec.hidden_dim);
    s.blocks.resize(spec.num_blocks);
    for (auto& blk : s.blocks) {
        blk.l1 = linear_init(spec.hidden_dim, spec.hidden_dim, rng);
        blk.l2 = linear_init(spec.hidden_dim, spec.hidden_dim, rng);
        blk.bn1 = bn_init(spec.hidden_dim);
        blk.bn2 = bn_init(spec.hidden_dim);
    }
    // zero-initialized head: predictions start at zero instead of the
    // residual trunk's inflated scale
    s.output = linear_init(spec.output_dim, spec.hidden_dim, rng);
    s.output.w.setZero();
    s.initialized = true;
    return s;
}

MatX mlp_forward(MlpState& state, const MatX& batch, MlpCache* cache) {
    state.validate();
    if (batch.rows() == 0) throw std::invalid_argument("mlp: empty batch");
    if (batch.cols() != state.spec.input_dim)
        throw std::invalid_argument("mlp: batch width does not match the input dimension");
    if (state.mode == MlpMode::train && state.spec.use_batchnorm && batch.rows() < 2)
        throw std::invalid_argument("mlp: train-mode batchnorm needs a batch of at least 2");
    if (cache) {
        cache->mode = state.mode;
        cache->step = state.step;
        cache->batch = static_cast<int>(batch.rows());
        cache->block_stages.resize(state.blocks.size());
    }

    BatchNorm* bn = state.spec.use_batchnorm ? &state.input_bn : nullptr;
    MatX h = stage_forward(state, state.input, bn, 0, batch, cache ? &cache->input_stage : nullptr);
    for (size_t b = 0; b < state.blocks.size(); ++b) {
        auto& blk = state.blocks[b];
        MatX r = h;
        h = stage_forward(state, blk.l1, state.spec.use_batchnorm ? &blk.bn1 : nullptr,
                          1 + 2 * static_cast<int>(b), h,
                          cache ? &cache->block_stages[b][0] : nullptr);
        h = stage_forward(state, blk.l2, state.spec.use_batchnorm ? &blk.bn2 : nullptr,
                          2 + 2 * static_cast<int>(b), h,
                          cache ? &cache->block_stages[b][1] : nullptr);
        h += r;  // identity skip
    }
    return linear_forward(state.output, h, cache ? &cache->output_stage : nullptr);
}

MatX mlp_eval(const MlpState& state, const MatX& batch) {
    if (state.mode != MlpMode::eval)
        throw std::invalid_argument("mlp_eval: state must be in eval mode");
    // eval-mode forward touches no state
    return mlp_forward(const_cast<MlpState&>(state), batch, nullptr);
}

MlpGradients mlp_backward(const MlpState& state, const MlpCache& cache, const MatX& upstream,
                          MatX* input_grad) {
    if (cache.mode != MlpMode::train)
        throw std::invalid_argument("mlp backward: cache must come from a train-mode forward");
    if (cache.step != state.step)
        throw std::invalid_argument("mlp backward: cache step does not match the state");

    MlpGradients g;
    g.blocks.resize(state.blocks.size());
    MatX dh = linear_backward(state.output, cache.output_stage, upstream, g.output);
    for (int b = static_cast<int>(state.blocks.size()) - 1; b >= 0; --b) {
        const auto& blk = state.blocks[b];
        MatX dskip = dh;  // identity branch
        dh = stage_backward(state, blk.l2, state.spec.use_batchnorm ? &blk.bn2 : nullptr,
                            cache.block_stages[b][1], dh, g.blocks[b].l2,
                            state.spec.use_batchnorm ? &g.blocks[b].bn2 : nullptr);
        dh = stage_backward(state, blk.l1, state.spec.use_batchnorm ? &blk.bn1 : nullptr,
                            cache.block_stages[b][0], dh, g.blocks[b].l1,
                            state.spec.use_batchnorm ? &g.blocks[b].bn1 : nullptr);
        dh += dskip;
    }
    MatX dx = stage_backward(state, state.input, state.spec.use_batchnorm ? &state.input_bn : nullptr,
                             cache.input_stage, dh, g.input,
                             state.spec.use_batchnorm ? &g.input_bn : nullptr);
    if (input_grad) *input_grad = std::move(dx);
    return g;
}

namespace {

template <typename State, typename F>
void walk_params(State& state, F&& visit) {
    auto lin = [&](auto& l) {
        visit(l.w.data(), l.w.size());
        visit(l.b.data(), l.b.size());
    };
    auto bn = [&](auto& b) {
        if (!state.spec.use_batchnorm) return;
        visit(b.gamma.data(), b.gamma.size());
        visit(b.shift.data(), b.shift.size());
    };
    lin(state.input);
    bn(state.input_bn);
    for (auto& blk : state.blocks) {
        lin(blk.l1);
        bn(blk.bn1);
        lin(blk.l2);
        bn(blk.bn2);
    }
    lin(state.output);
}

}  // namespace

VecX params_to_vector(const MlpState& state) {
    VecX v(state.param_count());
    Eigen::Index pos = 0;
    walk_params(state, [&](const double* p, Eigen::Index n) {
        std::copy(p, p + n, v.data() + pos);
        pos += n;
    });
    return v;
}

void vector_to_params(MlpState& state, const VecX& v) {
    if (v.size() != state.param_count())
        throw std::invalid_argument("mlp: parameter vector size mismatch");
    Eigen::Index pos = 0;
    walk_params(state, [&](double* p, Eigen::Index n) {
        std::copy(v.data() + pos, v.data() + pos + n, p);
        pos += n;
    });
}

VecX grads_to_vector(const MlpState& state, const MlpGradients& g) {
    VecX v(state.param_count());
    Eigen::Index pos = 0;
    auto push = [&](const double* p, Eigen::Index n) {
        std::copy(p, p + n, v.data() + pos);
        pos += n;
    };
    auto lin = [&](const LinearGrad& l) {
        push(l.w.data(), l.w.size());
        push(l.b.data(), l.b.size());
    };
    auto bn = [&](const BnGrad& b) {
        if (!state.spec.use_batchnorm) return;
        push(b.gamma.data(), b.gamma.size());
        push(b.shift.data(), b.shift.size());
    };
    lin(g.input);
    bn(g.input_bn);
    for (const auto& blk : g.blocks) {
        lin(blk.l1);
        bn(blk.bn1);
        lin(blk.l2);
        bn(blk.bn2);
    }
    lin(g.output);
    return v;
}

AdamState adam_init(Eigen::Index n, double lr) {
    AdamState a;
    a.m = VecX::Zero(n);
    a.v = VecX::Zero(n);
    a.lr = lr;
    return a;
}

void adam_step(VecX& params, const VecX& grads, AdamState& adam, double lr) {
    if (params.size() != grads.size() || params.size() != adam.m.size())
        throw std::invalid_argument("adam: shape mismatch");
    if (!grads.allFinite()) throw std::invalid_argument("adam: non-finite gradients");
    adam.step += 1;
    adam.m = adam.beta1 * adam.m + (1.0 - adam.beta1) * grads;
    adam.v = adam.beta2 * adam.v + (1.0 - adam.beta2) * grads.array().square().matrix();
    double c1 = 1.0 - std::pow(adam.beta1, static_cast<double>(adam.step));
    double c2 = 1.0 - std::pow(adam.beta2, static_cast<double>(adam.step));
    VecX mhat = adam.m / c1;
    VecX vhat = adam.v / c2;
    params.array() -= lr * mhat.array() / (vhat.array().sqrt() + adam.eps);
}

}  // namespace uvbody
