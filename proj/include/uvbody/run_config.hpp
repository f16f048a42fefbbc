#pragma once

#include "uvbody/dense_maps.hpp"
#include "uvbody/ik.hpp"

#include <string>

namespace uvbody {

/// Flat key=value run configuration. Unknown keys are rejected; every random
/// stream's seed must be spelled out explicitly.
struct RunConfig {
    int vertex_budget = 1000;

    int atlas_width = 128, atlas_height = 128;
    int image_width = 224, image_height = 224;

    double camera_scale = 100.0;
    double camera_offset_x = 112.0, camera_offset_y = 112.0;

    double pose_limit_scale = 1.0;
    double beta_range = 2.0;
    double map_noise_sigma = 0.0;
    OcclusionConfig occlusion;

    AugmentConfig augment;

    int train_epochs = 30;
    int train_batch = 128;
    double train_lr = 1e-3;
    double train_dropout = 0.1;
    int train_hidden = 256;
    int inpaint_blocks = 3;
    int gik_blocks = 4;
    double w_theta = 1.0, w_beta = 1.0, w_ji = 1.0, w_vi = 1.0;

    int min_texels = 1;
    int band_width = 2;

    uint64_t seed_data = 0, seed_train = 0, seed_occlusion = 0, seed_noise = 0;

    Camera camera() const {
        Camera c;
        c.scale = camera_scale;
        c.offset = Vec2(camera_offset_x, camera_offset_y);
        return c;
    }
    TrainConfig train_config() const {
        TrainConfig t;
        t.epochs = train_epochs;
        t.batch_size = train_batch;
        t.lr = train_lr;
        t.w_theta = w_theta;
        t.w_beta = w_beta;
        t.w_ji = w_ji;
        t.w_vi = w_vi;
        t.augment = augment;
        t.seed = seed_train;
        return t;
    }
    MlpSpec inpaint_spec() const {
        return MlpSpec{kInpaintInputDim, kInpaintOutputDim, train_hidden, inpaint_blocks,
                       train_dropout, true};
    }
    MlpSpec gik_spec() const {
        return MlpSpec{kGikInputDim, kGikOutputDim, train_hidden, gik_blocks, train_dropout, true};
    }
    void validate() const;
};

/// Parse "key = value" lines ('#' comments). Throws on unknown keys, bad
/// values, or missing seed.* entries.
RunConfig parse_run_config(const std::string& text);
RunConfig load_run_config(const std::string& path);

/// Canonical text form (round-trips exactly through parse_run_config).
std::string run_config_to_text(const RunConfig& config);

}  // namespace uvbody
