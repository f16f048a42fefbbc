#include "uvbody/pipeline.hpp"

#include <cstdio>
#include <filesystem>

namespace uvbody {

BodyAssets build_assets(const RunConfig& config) {
    config.validate();
    BodyAssets a;
    a.model = build_synthetic_model(ModelConfig{config.vertex_budget});
    a.atlas = build_atlas(a.model, config.atlas_height, config.atlas_width);
    a.part_seg = build_part_segmentation(a.model, a.atlas);
    a.flip = build_flip_map(a.atlas);
    return a;
}

SampleData generate_sample(const BodyAssets& assets, const RunConfig& config, int index) {
    SampleData s;
    s.theta = sample_pose(mix_seed(config.seed_data, 0x706f7365ULL, index),
                          default_pose_limits().scaled(config.pose_limit_scale));
    Rng rng(mix_seed(config.seed_data, 0x62657461ULL, index));
    for (int b = 0; b < kShapeDim; ++b) s.beta.beta[b] = rng.uniform(-config.beta_range, config.beta_range);
    s.camera = config.camera();

    s.mesh_gt = skin(assets.model, s.theta, s.beta);
    s.joints_gt = JointSet::all_visible(regress_joints(s.mesh_gt, assets.model.lsp_regressor));
    s.maps_clean = render_dense_maps(s.mesh_gt, assets.model, assets.atlas, assets.part_seg,
                                     s.joints_gt, s.camera, config.image_height, config.image_width);
    ImageMaps pred = apply_synthetic_occlusion(s.maps_clean, mix_seed(config.seed_occlusion, 0, index),
                                               config.occlusion);
    if (config.map_noise_sigma > 0.0)
        pred = add_prediction_noise(pred, config.map_noise_sigma, mix_seed(config.seed_noise, 1, index));
    s.maps_pred = std::move(pred);
    s.uv_gt = make_uv_ground_truth(s.mesh_gt, assets.model, assets.part_seg, s.joints_gt, assets.atlas);
    return s;
}

PipelineOutput run_pipeline_on_maps(const BodyAssets& assets, const MlpState& inpaint,
                                    const MlpState& gik, const ImageMaps& maps,
                                    const RunConfig& config, bool use_numerical_ik) {
    PipelineOutput out;
    out.dmp_maps = warp_image_to_uv(maps, assets.atlas, &out.uv_clamped);
    out.agg = aggregate_joints(out.dmp_maps, assets.part_seg, config.min_texels);
    out.j_refine = inpaint_refine_joints(inpaint, out.agg);

    if (use_numerical_ik) {
        IkSolveResult solved =
            numerical_ik(assets.model, out.j_refine, PoseParams::zero(), ShapeParams::zero());
        out.theta = solved.theta;
        out.beta = solved.beta;
    } else {
        IkOutput ik = gik_forward(gik, out.j_refine);
        out.theta = ik.theta;
        out.beta = ik.beta;
    }

    out.ik_maps = repose_uv_from_ik(assets.model, assets.atlas, assets.part_seg, out.theta, out.beta);
    Grid uv_jrefine = distribute_joints_to_uv(out.j_refine, assets.part_seg);
    out.fused = fuse_uv_maps(out.dmp_maps, out.ik_maps, uv_jrefine, config.band_width);
    out.joints_pred = infer_joints_from_uv(out.fused, assets.part_seg);
    Mesh ik_mesh = skin(assets.model, out.theta, out.beta);
    out.mesh_pred = infer_mesh_from_uv(out.fused, assets.atlas, assets.model, &ik_mesh,
                                       &out.mesh_fallbacks);
    return out;
}

TensorMap pose_to_tensors(const PoseParams& theta, const ShapeParams& beta) {
    TensorMap t;
    t["theta"] = Tensor::f64(MatX(theta.theta));
    t["beta"] = Tensor::f64(VecX(beta.beta));
    return t;
}

void pose_from_tensors(const TensorMap& t, PoseParams& theta, ShapeParams& beta) {
    theta.theta = require_tensor(t, "theta").as_matrix();
    beta.beta = require_tensor(t, "beta").as_vector();
}

TensorMap joints_to_tensors(const JointSet& joints) {
    TensorMap t;
    t["joints"] = Tensor::f64(MatX(joints.joints));
    std::vector<uint8_t> vis(kNumParts);
    for (int k = 0; k < kNumParts; ++k) vis[k] = joints.visible[k] ? 1 : 0;
    Tensor v;
    v.type = ElemType::boolean;
    v.dims = {kNumParts};
    v.raw = vis;
    t["visible"] = v;
    return t;
}

JointSet joints_from_tensors(const TensorMap& t) {
    JointSet j;
    j.joints = require_tensor(t, "joints").as_matrix();
    const Tensor& v = require_tensor(t, "visible");
    for (int k = 0; k < kNumParts; ++k) j.visible[k] = v.raw[k] != 0;
    return j;
}

TensorMap camera_to_tensors(const Camera& camera) {
    TensorMap t;
    VecX v(3);
    v << camera.scale, camera.offset.x(), camera.offset.y();
    t["camera"] = Tensor::f64(v);
    return t;
}

Camera camera_from_tensors(const TensorMap& t) {
    VecX v = require_tensor(t, "camera").as_vector();
    Camera c;
    c.scale = v[0];
    c.offset = Vec2(v[1], v[2]);
    return c;
}

namespace {

Tensor part_tensor(const std::vector<int>& part, int height, int width) {
    std::vector<uint8_t> bytes(part.size());
    for (size_t i = 0; i < part.size(); ++i)
        bytes[i] = part[i] < 0 ? 255 : static_cast<uint8_t>(part[i]);
    return Tensor::bytes({static_cast<uint64_t>(height), static_cast<uint64_t>(width)}, bytes);
}

std::vector<int> part_from_tensor(const Tensor& t) {
    std::vector<int> part(t.raw.size());
    for (size_t i = 0; i < t.raw.size(); ++i) part[i] = t.raw[i] == 255 ? -1 : t.raw[i];
    return part;
}

}  // namespace

TensorMap image_maps_to_tensors(const ImageMaps& maps) {
    TensorMap t;
    t["mask"] = Tensor::mask(maps.mask);
    t["uv"] = Tensor::grid(maps.uv);
    t["joint"] = Tensor::grid(maps.joint);
    t["location"] = Tensor::grid(maps.location);
    t["displacement"] = Tensor::grid(maps.displacement);
    t["part"] = part_tensor(maps.part, maps.height, maps.width);
    return t;
}

ImageMaps image_maps_from_tensors(const TensorMap& t) {
    ImageMaps m;
    m.mask = require_tensor(t, "mask").as_mask();
    m.height = m.mask.height;
    m.width = m.mask.width;
    m.uv = require_tensor(t, "uv").as_grid();
    m.joint = require_tensor(t, "joint").as_grid();
    m.location = require_tensor(t, "location").as_grid();
    m.displacement = require_tensor(t, "displacement").as_grid();
    m.part = part_from_tensor(require_tensor(t, "part"));
    return m;
}

TensorMap uv_maps_to_tensors(const UVMaps& maps) {
    TensorMap t;
    t["valid"] = Tensor::mask(maps.valid);
    t["joint"] = Tensor::grid(maps.joint);
    t["location"] = Tensor::grid(maps.location);
    t["displacement"] = Tensor::grid(maps.displacement);
    return t;
}

UVMaps uv_maps_from_tensors(const TensorMap& t) {
    UVMaps m;
    m.valid = require_tensor(t, "valid").as_mask();
    m.height = m.valid.height;
    m.width = m.valid.width;
    m.joint = require_tensor(t, "joint").as_grid();
    m.location = require_tensor(t, "location").as_grid();
    m.displacement = require_tensor(t, "displacement").as_grid();
    return m;
}

TensorMap fused_to_tensors(const FusedUVMaps& fused) {
    TensorMap t;
    t["inside"] = Tensor::mask(fused.inside);
    t["joint"] = Tensor::grid(fused.joint);
    t["location"] = Tensor::grid(fused.location);
    t["displacement"] = Tensor::grid(fused.displacement);
    std::vector<uint8_t> src(fused.source.size());
    for (size_t i = 0; i < src.size(); ++i) src[i] = static_cast<uint8_t>(fused.source[i]);
    t["source"] = Tensor::bytes(
        {static_cast<uint64_t>(fused.height), static_cast<uint64_t>(fused.width)}, src);
    return t;
}

void mlp_to_tensors(const std::string& prefix, const MlpState& state, TensorMap& out) {
    VecX meta(7);
    meta << state.spec.input_dim, state.spec.output_dim, state.spec.hidden_dim, state.spec.num_blocks,
        state.spec.dropout_rate, state.spec.use_batchnorm ? 1.0 : 0.0,
        static_cast<double>(state.step);
    out[prefix + ".spec"] = Tensor::f64(meta);
    out[prefix + ".seed"] = Tensor::f64(VecX(VecX::Constant(1, static_cast<double>(state.dropout_seed))));
    out[prefix + ".params"] = Tensor::f64(params_to_vector(state));

    auto bn_stats = [&](const std::string& name, const BatchNorm& bn) {
        out[prefix + name + ".mean"] = Tensor::f64(bn.running_mean);
        out[prefix + name + ".var"] = Tensor::f64(bn.running_var);
    };
    bn_stats(".bn_in", state.input_bn);
    for (size_t b = 0; b < state.blocks.size(); ++b) {
        bn_stats(".blk" + std::to_string(b) + ".bn1", state.blocks[b].bn1);
        bn_stats(".blk" + std::to_string(b) + ".bn2", state.blocks[b].bn2);
    }
}

MlpState mlp_from_tensors(const std::string& prefix, const TensorMap& t) {
    VecX meta = require_tensor(t, prefix + ".spec").as_vector();
    MlpSpec spec;
    spec.input_dim = static_cast<int>(meta[0]);
    spec.output_dim = static_cast<int>(meta[1]);
    spec.hidden_dim = static_cast<int>(meta[2]);
    spec.num_blocks = static_cast<int>(meta[3]);
    spec.dropout_rate = meta[4];
    spec.use_batchnorm = meta[5] != 0.0;
    MlpState state = mlp_init(spec, 0);
    state.step = static_cast<uint64_t>(meta[6]);
    state.dropout_seed =
        static_cast<uint64_t>(require_tensor(t, prefix + ".seed").as_vector()[0]);
    vector_to_params(state, require_tensor(t, prefix + ".params").as_vector());

    auto bn_stats = [&](const std::string& name, BatchNorm& bn) {
        bn.running_mean = require_tensor(t, prefix + name + ".mean").as_vector();
        bn.running_var = require_tensor(t, prefix + name + ".var").as_vector();
    };
    bn_stats(".bn_in", state.input_bn);
    for (size_t b = 0; b < state.blocks.size(); ++b) {
        bn_stats(".blk" + std::to_string(b) + ".bn1", state.blocks[b].bn1);
        bn_stats(".blk" + std::to_string(b) + ".bn2", state.blocks[b].bn2);
    }
    state.mode = MlpMode::eval;
    return state;
}

void save_checkpoint(const std::string& path, const RunConfig& config, const MlpState& inpaint,
                     const MlpState& gik) {
    TensorMap t;
    std::string cfg = run_config_to_text(config);
    t["config"] = Tensor::bytes({cfg.size()},
                                std::vector<uint8_t>(cfg.begin(), cfg.end()));
    mlp_to_tensors("inpaint", inpaint, t);
    mlp_to_tensors("gik", gik, t);
    save_archive(path, t);
}

Checkpoint load_checkpoint(const std::string& path) {
    TensorMap t = load_archive(path);
    const Tensor& cfg = require_tensor(t, "config");
    Checkpoint ck{parse_run_config(std::string(cfg.raw.begin(), cfg.raw.end())),
                  mlp_from_tensors("inpaint", t), mlp_from_tensors("gik", t)};
    return ck;
}

std::string sample_dir_name(int index) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "sample_%05d", index);
    return buf;
}

void save_sample_dir(const std::string& dir, const SampleData& sample, bool maps_included) {
    std::filesystem::create_directories(dir);
    save_archive(dir + "/pose.uvb", pose_to_tensors(sample.theta, sample.beta));
    save_archive(dir + "/camera.uvb", camera_to_tensors(sample.camera));
    save_archive(dir + "/joints_gt.uvb", joints_to_tensors(sample.joints_gt));
    if (maps_included) {
        save_archive(dir + "/image_maps.uvb", image_maps_to_tensors(sample.maps_clean));
        save_archive(dir + "/image_maps_pred.uvb", image_maps_to_tensors(sample.maps_pred));
        save_archive(dir + "/uv_gt.uvb", uv_maps_to_tensors(sample.uv_gt));
    }
}

SampleData load_sample_dir(const std::string& dir, bool maps_included) {
    SampleData s;
    pose_from_tensors(load_archive(dir + "/pose.uvb"), s.theta, s.beta);
    s.camera = camera_from_tensors(load_archive(dir + "/camera.uvb"));
    s.joints_gt = joints_from_tensors(load_archive(dir + "/joints_gt.uvb"));
    if (maps_included) {
        s.maps_clean = image_maps_from_tensors(load_archive(dir + "/image_maps.uvb"));
        s.maps_pred = image_maps_from_tensors(load_archive(dir + "/image_maps_pred.uvb"));
        s.uv_gt = uv_maps_from_tensors(load_archive(dir + "/uv_gt.uvb"));
    }
    return s;
}

void save_pipeline_dir(const std::string& dir, const PipelineOutput& out,
                       const Eigen::MatrixXi& faces) {
    std::filesystem::create_directories(dir);
    save_archive(dir + "/j_initial.uvb", joints_to_tensors(out.agg.j_initial));
    save_archive(dir + "/j_refine.uvb", joints_to_tensors(out.j_refine));
    save_archive(dir + "/joints_pred.uvb", joints_to_tensors(out.joints_pred));
    save_archive(dir + "/ik_params.uvb", pose_to_tensors(out.theta, out.beta));
    TensorMap mesh;
    mesh["vertices"] = Tensor::f64(out.mesh_pred.vertices);
    save_archive(dir + "/mesh_pred.uvb", mesh);
    save_archive(dir + "/fused.uvb", fused_to_tensors(out.fused));
    write_obj(dir + "/mesh.obj", out.mesh_pred.vertices, faces);
}

}  // namespace uvbody
