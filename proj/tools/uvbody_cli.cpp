// Command-line front end: sample generation, training, the full inference
// pipeline, evaluation, and inspection utilities.

#include "uvbody/losses_metrics.hpp"
#include "uvbody/pipeline.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>

namespace fs = std::filesystem;
using namespace uvbody;

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

int cmd_gen_data(const std::string& config_path, const std::string& out_dir, int count,
                 bool poses_only) {
    RunConfig config = load_run_config(config_path);
    BodyAssets assets = build_assets(config);
    fs::create_directories(out_dir);
    write_text_file(out_dir + "/config.cfg", run_config_to_text(config));
    for (int i = 0; i < count; ++i) {
        SampleData s = generate_sample(assets, config, i);
        save_sample_dir(out_dir + "/" + sample_dir_name(i), s, !poses_only);
    }
    std::cout << "wrote " << count << " samples to " << out_dir << "\n";
    return 0;
}

int cmd_train_ik(const std::string& config_path, const std::string& data_dir,
                 const std::string& out_path) {
    RunConfig config = load_run_config(config_path);
    BodyAssets assets = build_assets(config);

    std::vector<MocapSample> mocap;
    for (int i = 0;; ++i) {
        std::string dir = data_dir + "/" + sample_dir_name(i);
        if (!fs::exists(dir + "/pose.uvb")) break;
        MocapSample m;
        pose_from_tensors(load_archive(dir + "/pose.uvb"), m.theta, m.beta);
        mocap.push_back(m);
    }
    std::cout << "loaded " << mocap.size() << " mocap samples\n";

    IkTrainResult result = train_ik_stage(assets.model, mocap, config.train_config(),
                                          config.inpaint_spec(), config.gik_spec());
    save_checkpoint(out_path, config, result.inpaint, result.gik);

    std::string csv = "epoch,l_ji,l_theta,l_beta,l_vi\n";
    for (size_t e = 0; e < result.curve.size(); ++e) {
        const auto& r = result.curve[e];
        csv += std::to_string(e) + "," + fmt(r.l_ji) + "," + fmt(r.l_theta) + "," + fmt(r.l_beta) +
               "," + fmt(r.l_vi) + "\n";
    }
    write_text_file(out_path + ".losses.csv", csv);
    std::cout << "checkpoint written to " << out_path << "\n";
    return 0;
}

int cmd_run_pipeline(const std::string& ckpt_path, const std::string& sample_dir,
                     const std::string& out_dir, const std::string& ik_mode) {
    Checkpoint ck = load_checkpoint(ckpt_path);
    BodyAssets assets = build_assets(ck.config);
    ImageMaps maps = image_maps_from_tensors(load_archive(sample_dir + "/image_maps_pred.uvb"));
    PipelineOutput out = run_pipeline_on_maps(assets, ck.inpaint, ck.gik, maps, ck.config,
                                              ik_mode == "numerical");
    save_pipeline_dir(out_dir, out, assets.model.faces);
    std::cout << "pipeline output written to " << out_dir << "\n";
    return 0;
}

int cmd_eval(const std::string& config_path, const std::string& pred_dir, const std::string& gt_dir,
             const std::string& report_path) {
    RunConfig config = load_run_config(config_path);
    BodyAssets assets = build_assets(config);

    std::string csv = "sample,mpjpe_mm,pa_mpjpe_mm,mpve_mm\n";
    double sum_mpjpe = 0, sum_pa = 0, sum_mpve = 0;
    int n = 0;
    for (int i = 0;; ++i) {
        std::string name = sample_dir_name(i);
        std::string pdir = pred_dir + "/" + name;
        std::string gdir = gt_dir + "/" + name;
        if (!fs::exists(pdir + "/joints_pred.uvb") || !fs::exists(gdir + "/pose.uvb")) break;

        JointSet pred_joints = joints_from_tensors(load_archive(pdir + "/joints_pred.uvb"));
        Mesh pred_mesh;
        pred_mesh.vertices =
            require_tensor(load_archive(pdir + "/mesh_pred.uvb"), "vertices").as_matrix();

        PoseParams theta;
        ShapeParams beta;
        pose_from_tensors(load_archive(gdir + "/pose.uvb"), theta, beta);
        Mesh gt_mesh = skin(assets.model, theta, beta);
        JointSet gt_joints = JointSet::all_visible(regress_joints(gt_mesh, assets.model.lsp_regressor));

        double e1 = mpjpe(pred_joints, gt_joints);
        double e2 = pa_mpjpe(pred_joints, gt_joints);
        double e3 = mpve(pred_mesh, gt_mesh);
        csv += name + "," + fmt(e1) + "," + fmt(e2) + "," + fmt(e3) + "\n";
        sum_mpjpe += e1;
        sum_pa += e2;
        sum_mpve += e3;
        ++n;
    }
    if (n == 0) throw std::runtime_error("eval: no matching sample directories");
    csv += "mean," + fmt(sum_mpjpe / n) + "," + fmt(sum_pa / n) + "," + fmt(sum_mpve / n) + "\n";
    write_text_file(report_path, csv);
    std::cout << "evaluated " << n << " samples; mean MPJPE " << fmt(sum_mpjpe / n) << " mm\n";
    return 0;
}

int cmd_export_mesh(const std::string& config_path, const std::string& pose_path,
                    const std::string& out_path) {
    RunConfig config = load_run_config(config_path);
    BodyModel model = build_synthetic_model(ModelConfig{config.vertex_budget});
    PoseParams theta;
    ShapeParams beta;
    if (!pose_path.empty()) pose_from_tensors(load_archive(pose_path), theta, beta);
    Mesh mesh = skin(model, theta, beta);
    write_obj(out_path, mesh.vertices, model.faces);
    std::cout << "mesh written to " << out_path << "\n";
    return 0;
}

int cmd_inspect(const std::string& path, const std::string& part_image,
                const std::string& mask_image, const std::string& config_path) {
    if (!config_path.empty() && !part_image.empty()) {
        RunConfig config = load_run_config(config_path);
        BodyAssets assets = build_assets(config);
        write_ppm_indexed(part_image, assets.part_seg.assign, assets.part_seg.height,
                          assets.part_seg.width);
        std::cout << "part segmentation image written to " << part_image << "\n";
        if (path.empty()) return 0;
    }
    if (path.empty()) throw std::runtime_error("inspect: nothing to do (--in or --part-image)");
    TensorMap t = load_archive(path);
    for (const auto& [name, tensor] : t) {
        std::cout << name << ": type=" << static_cast<int>(tensor.type) << " dims=[";
        for (size_t i = 0; i < tensor.dims.size(); ++i)
            std::cout << (i ? "," : "") << tensor.dims[i];
        std::cout << "]";
        if (tensor.type == ElemType::f64 && tensor.element_count() > 0) {
            auto v = tensor.as_f64();
            double lo = v[0], hi = v[0], mean = 0;
            for (double x : v) {
                lo = std::min(lo, x);
                hi = std::max(hi, x);
                mean += x / v.size();
            }
            std::cout << " min=" << fmt(lo) << " max=" << fmt(hi) << " mean=" << fmt(mean);
        } else if (tensor.type == ElemType::boolean) {
            size_t on = 0;
            for (uint8_t b : tensor.raw) on += b != 0;
            std::cout << " true=" << on << "/" << tensor.raw.size();
        }
        std::cout << "\n";
        if (!mask_image.empty() && tensor.type == ElemType::boolean && tensor.dims.size() == 2 &&
            (name == "mask" || name == "valid" || name == "inside")) {
            MaskGrid m = tensor.as_mask();
            write_pgm(mask_image, m);
            std::cout << "  mask image written to " << mask_image << "\n";
        }
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Synthetic articulated-body pipeline: dense UV maps, joint aggregation, "
                 "learned and iterative inverse kinematics, and UV-space fusion"};
    app.require_subcommand(1);

    std::string config_path, out_dir, data_dir, ckpt_path, sample_dir, pred_dir, gt_dir,
        report_path, pose_path, out_path, archive_path, part_image, mask_image;
    std::string ik_mode = "gik";
    int count = 10;
    bool poses_only = false;

    auto* gen = app.add_subcommand("gen-data", "Generate synthetic samples");
    gen->add_option("--config", config_path)->required();
    gen->add_option("--out", out_dir)->required();
    gen->add_option("--count", count)->required();
    gen->add_flag("--poses-only", poses_only, "Skip the dense maps (mocap-style output)");

    auto* train = app.add_subcommand("train-ik", "Train the inpaint and pose-regression nets");
    train->add_option("--config", config_path)->required();
    train->add_option("--data", data_dir)->required();
    train->add_option("--out", ckpt_path)->required();

    auto* run = app.add_subcommand("run-pipeline", "Run inference on one sample directory");
    run->add_option("--ckpt", ckpt_path)->required();
    run->add_option("--sample", sample_dir)->required();
    run->add_option("--out", out_dir)->required();
    run->add_option("--ik", ik_mode)->check(CLI::IsMember({"gik", "numerical"}));

    auto* eval = app.add_subcommand("eval", "Score predictions against ground truth");
    eval->add_option("--config", config_path)->required();
    eval->add_option("--pred", pred_dir)->required();
    eval->add_option("--gt", gt_dir)->required();
    eval->add_option("--out", report_path)->required();

    auto* exp = app.add_subcommand("export-mesh", "Skin a pose and write an OBJ");
    exp->add_option("--config", config_path)->required();
    exp->add_option("--pose", pose_path, "pose archive; T-pose when omitted");
    exp->add_option("--out", out_path)->required();

    auto* ins = app.add_subcommand("inspect", "Dump archive statistics / export images");
    ins->add_option("--in", archive_path);
    ins->add_option("--part-image", part_image, "write the part segmentation as PPM");
    ins->add_option("--mask-image", mask_image, "write the first mask tensor as PGM");
    ins->add_option("--config", config_path, "needed for --part-image");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) return cmd_gen_data(config_path, out_dir, count, poses_only);
        if (train->parsed()) return cmd_train_ik(config_path, data_dir, ckpt_path);
        if (run->parsed()) return cmd_run_pipeline(ckpt_path, sample_dir, out_dir, ik_mode);
        if (eval->parsed()) return cmd_eval(config_path, pred_dir, gt_dir, report_path);
        if (exp->parsed()) return cmd_export_mesh(config_path, pose_path, out_path);
        if (ins->parsed()) return cmd_inspect(archive_path, part_image, mask_image, config_path);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
