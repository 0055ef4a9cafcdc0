// Pipeline driver: dataset generation, model training, diffusion-refined
// inference, evaluation and reporting, all from one JSON config.
//
// Exit codes: 0 success, 2 config validation failure, 3 missing dependency
// artifact, 1 anything else.

#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "drdc/config.hpp"
#include "drdc/pipeline.hpp"
#include "drdc/synthdata.hpp"

using namespace drdc;

namespace {

struct CommonOpts {
    std::string config_path;
    std::string out_override;
    int64_t seed_override = -1;
};

RunConfig load_config(const CommonOpts& opts) {
    RunConfig cfg = opts.config_path.empty() ? RunConfig{}
                                             : RunConfig::from_json_file(opts.config_path);
    if (!opts.out_override.empty()) cfg.out_dir = opts.out_override;
    if (opts.seed_override >= 0) cfg.seed = static_cast<uint64_t>(opts.seed_override);
    cfg.validate();
    return cfg;
}

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--config", opts.config_path, "JSON run configuration");
    cmd->add_option("--out", opts.out_override, "output directory override");
    cmd->add_option("--seed", opts.seed_override, "master seed override");
}

int run_stages(const CommonOpts& opts, const std::vector<Stage>& stages) {
    RunConfig cfg = load_config(opts);
    RunArtifacts art = run_pipeline(cfg, stages);
    std::printf("done; run manifest: %s\n", art.run_manifest_path.c_str());
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"drdc: multi-class anomaly detection with diffusion refinement"};
    app.require_subcommand(1);

    CommonOpts opts;
    std::string stages_csv = "data,train-base,train-diffusion,infer,evaluate,report";

    auto* c_gen = app.add_subcommand("generate", "generate the synthetic dataset");
    add_common(c_gen, opts);
    auto* c_tb = app.add_subcommand("train-base", "train the feature-reconstruction model");
    add_common(c_tb, opts);
    auto* c_td = app.add_subcommand("train-diffusion", "train the conditional denoiser");
    add_common(c_td, opts);
    auto* c_inf = app.add_subcommand("infer", "run diffusion-refined inference");
    add_common(c_inf, opts);
    auto* c_eval = app.add_subcommand("evaluate", "compute image/pixel AUROC metrics");
    add_common(c_eval, opts);
    auto* c_rep = app.add_subcommand("report", "write panels, histograms and tables");
    add_common(c_rep, opts);
    auto* c_all = app.add_subcommand("all", "run the full pipeline (or --stages subset)");
    add_common(c_all, opts);
    c_all->add_option("--stages", stages_csv, "comma-separated stage subset");

    auto* c_t1 = app.add_subcommand("table1", "scaled ground-truth mask study");
    std::string mvtec_root;
    int mask_count = 200;
    int resolution = 64;
    int64_t t1_seed = 7;
    std::string factors_csv = "1,2,4,8,16";
    c_t1->add_option("--mvtec", mvtec_root, "MVTec-style dataset root (optional)");
    c_t1->add_option("--masks", mask_count, "synthetic mask count");
    c_t1->add_option("--resolution", resolution, "mask resolution");
    c_t1->add_option("--seed", t1_seed, "mask generation seed");
    c_t1->add_option("--factors", factors_csv, "comma-separated scale divisors");

    CLI11_PARSE(app, argc, argv);

    try {
        if (c_gen->parsed()) return run_stages(opts, {Stage::data});
        if (c_tb->parsed()) return run_stages(opts, {Stage::train_base});
        if (c_td->parsed()) return run_stages(opts, {Stage::train_diffusion});
        if (c_inf->parsed()) return run_stages(opts, {Stage::infer});
        if (c_eval->parsed()) return run_stages(opts, {Stage::evaluate});
        if (c_rep->parsed()) return run_stages(opts, {Stage::report});
        if (c_all->parsed()) return run_stages(opts, parse_stages(stages_csv));

        if (c_t1->parsed()) {
            std::vector<int> factors;
            {
                std::string cur;
                for (char ch : factors_csv + ",") {
                    if (ch == ',') {
                        if (!cur.empty()) factors.push_back(std::stoi(cur));
                        cur.clear();
                    } else
                        cur += ch;
                }
            }
            std::vector<Tensor> masks;
            if (!mvtec_root.empty()) {
                resolution = resolution == 64 ? 224 : resolution;
                DatasetManifest data = load_directory_dataset(mvtec_root, resolution);
                for (const auto& r : data.records)
                    if (r.is_anomalous) masks.push_back(r.gt_mask);
                if (masks.empty()) throw std::runtime_error("table1: no anomalous masks found");
            } else {
                masks = table1_synthetic_masks(mask_count,resolution,
                                               static_cast<uint64_t>(t1_seed));
            }
            auto res = table1_experiment(masks, factors);
            std::printf("scaling factor | pixel-wise AUROC\n");
            for (int f : factors) std::printf("          1/%-3d| %.2f\n", f, res.at(f));
            return 0;
        }
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const MissingArtifactError& e) {
        std::fprintf(stderr, "missing artifact: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
