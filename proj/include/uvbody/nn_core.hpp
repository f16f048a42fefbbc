#pragma once

#include "uvbody/types.hpp"

namespace uvbody {

/// Fully connected residual network: input linear, `num_blocks` residual
/// blocks of [linear -> batchnorm -> relu -> dropout] x 2 with identity skip,
/// then an output linear.
struct MlpSpec {
    int input_dim = 0;
    int output_dim = 0;
    int hidden_dim = 256;
    int num_blocks = 3;
    double dropout_rate = 0.1;
    bool use_batchnorm = true;

    void validate() const {
        if (input_dim <= 0 || output_dim <= 0 || hidden_dim <= 0 || num_blocks < 0)
            throw std::invalid_argument("mlp spec: dimensions must be positive");
        if (dropout_rate < 0.0 || dropout_rate >= 1.0)
            throw std::invalid_argument("mlp spec: dropout rate must lie in [0, 1)");
    }
};

enum class MlpMode { train, eval };

struct Linear {
    MatX w;  // out x in
    VecX b;
};

struct BatchNorm {
    VecX gamma, shift, running_mean, running_var;
};

struct MlpState {
    MlpSpec spec;
    Linear input;
    BatchNorm input_bn;
    struct Block {
        Linear l1, l2;
        BatchNorm bn1, bn2;
    };
    std::vector<Block> blocks;
    Linear output;
    MlpMode mode = MlpMode::eval;
    uint64_t step = 0;          // training step; keys the dropout masks
    uint64_t dropout_seed = 0;
    bool initialized = false;

    int64_t param_count() const;
    void validate() const;
};

/// He-uniform initialization, deterministic per seed.
MlpState mlp_init(const MlpSpec& spec, uint64_t seed);

/// Activations recorded by a train-mode forward, consumed by the backward
/// pass. Tied to the (step, mode) it was produced under.
struct MlpCache {
    MlpMode mode = MlpMode::train;
    uint64_t step = 0;
    int batch = 0;

    struct LinearCache {
        MatX in;
    };
    struct BnCache {
        MatX xhat;
        VecX inv_std;
    };
    struct StageCache {
        LinearCache lin;
        BnCache bn;
        MatX relu_mask;
        MatX drop_mask;  // scaled inverted-dropout mask; empty when inactive
    };
    StageCache input_stage;
    std::vector<std::array<StageCache, 2>> block_stages;
    LinearCache output_stage;
};

/// Forward pass. Train mode records a cache, applies dropout, uses batch
/// statistics and updates the running ones; eval mode is a pure function of
/// (state, batch). Train mode with batchnorm requires batch size >= 2.
MatX mlp_forward(MlpState& state, const MatX& batch, MlpCache* cache = nullptr);

/// Eval-mode forward over frozen state; requires mode == eval and never
/// mutates, so concurrent calls over shared state are safe.
MatX mlp_eval(const MlpState& state, const MatX& batch);

struct LinearGrad {
    MatX w;
    VecX b;
};
struct BnGrad {
    VecX gamma, shift;
};
struct MlpGradients {
    LinearGrad input;
    BnGrad input_bn;
    struct BlockGrad {
        LinearGrad l1, l2;
        BnGrad bn1, bn2;
    };
    std::vector<BlockGrad> blocks;
    LinearGrad output;
};

/// Exact gradients of the cached forward computation. Optionally also
/// produces the gradient with respect to the batch input.
MlpGradients mlp_backward(const MlpState& state, const MlpCache& cache, const MatX& upstream,
                          MatX* input_grad = nullptr);

/// Flat parameter/gradient views in a fixed order, for the optimizer,
/// finite-difference checks and serialization.
VecX params_to_vector(const MlpState& state);
void vector_to_params(MlpState& state, const VecX& v);
VecX grads_to_vector(const MlpState& state, const MlpGradients& g);

struct AdamState {
    uint64_t step = 0;
    VecX m, v;
    double lr = 1e-3, beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
};

AdamState adam_init(Eigen::Index n, double lr);

/// Standard bias-corrected Adam update, in place. Rejects non-finite
/// gradients.
void adam_step(VecX& params, const VecX& grads, AdamState& adam, double lr);
inline void adam_step(VecX& params, const VecX& grads, AdamState& adam) {
    adam_step(params, grads, adam, adam.lr);
}

}  // namespace uvbody
