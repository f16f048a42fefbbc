#pragma once

#include "uvbody/body_model.hpp"
#include "uvbody/dense_maps.hpp"
#include "uvbody/ik.hpp"
#include "uvbody/run_config.hpp"
#include "uvbody/tensor_io.hpp"
#include "uvbody/uv_atlas.hpp"
#include "uvbody/uv_fusion.hpp"

namespace uvbody {

/// Everything derived deterministically from the run configuration.
struct BodyAssets {
    BodyModel model;
    UVAtlas atlas;
    PartSegmentation part_seg;
    FlipMap flip;
};

BodyAssets build_assets(const RunConfig& config);

/// One synthetic sample: pose, shape, ground truth, clean render, and the
/// occluded/noisy render standing in for a dense prediction.
struct SampleData {
    PoseParams theta;
    ShapeParams beta;
    Camera camera;
    Mesh mesh_gt;
    JointSet joints_gt;
    ImageMaps maps_clean;
    ImageMaps maps_pred;
    UVMaps uv_gt;
};

SampleData generate_sample(const BodyAssets& assets, const RunConfig& config, int index);

struct PipelineOutput {
    UVMaps dmp_maps;     // warped dense prediction
    AggregationResult agg;
    JointSet j_refine;
    PoseParams theta;
    ShapeParams beta;
    UVMaps ik_maps;      // reposed template
    FusedUVMaps fused;
    JointSet joints_pred;
    Mesh mesh_pred;
    size_t uv_clamped = 0;
    int mesh_fallbacks = 0;
};

/// warp -> aggregate -> inpaint -> pose regression (feed-forward or
/// iterative) -> repose -> fuse -> infer joints and mesh.
PipelineOutput run_pipeline_on_maps(const BodyAssets& assets, const MlpState& inpaint,
                                    const MlpState& gik, const ImageMaps& maps,
                                    const RunConfig& config, bool use_numerical_ik = false);

// ---- serialization schemas (fixed file names inside a sample directory) ----

TensorMap pose_to_tensors(const PoseParams& theta, const ShapeParams& beta);
void pose_from_tensors(const TensorMap& t, PoseParams& theta, ShapeParams& beta);

TensorMap joints_to_tensors(const JointSet& joints);
JointSet joints_from_tensors(const TensorMap& t);

TensorMap camera_to_tensors(const Camera& camera);
Camera camera_from_tensors(const TensorMap& t);

TensorMap image_maps_to_tensors(const ImageMaps& maps);
ImageMaps image_maps_from_tensors(const TensorMap& t);

TensorMap uv_maps_to_tensors(const UVMaps& maps);
UVMaps uv_maps_from_tensors(const TensorMap& t);

TensorMap fused_to_tensors(const FusedUVMaps& fused);

void mlp_to_tensors(const std::string& prefix, const MlpState& state, TensorMap& out);
MlpState mlp_from_tensors(const std::string& prefix, const TensorMap& t);

/// Checkpoint archive: the run configuration text plus both trained nets.
void save_checkpoint(const std::string& path, const RunConfig& config, const MlpState& inpaint,
                     const MlpState& gik);
struct Checkpoint {
    RunConfig config;
    MlpState inpaint;
    MlpState gik;
};
Checkpoint load_checkpoint(const std::string& path);

/// Sample directory layout used by the data-generation and pipeline commands.
void save_sample_dir(const std::string& dir, const SampleData& sample, bool maps_included);
SampleData load_sample_dir(const std::string& dir, bool maps_included);

void save_pipeline_dir(const std::string& dir, const PipelineOutput& out,
                       const Eigen::MatrixXi& faces);

std::string sample_dir_name(int index);

}  // namespace uvbody
