#include "drdc/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <omp.h>

#include <nlohmann/json.hpp>

#include "drdc/base_recon.hpp"
#include "drdc/checkpoint.hpp"
#include "drdc/evalkit.hpp"
#include "drdc/fusion.hpp"
#include "drdc/image_io.hpp"
#include "drdc/inpaint.hpp"
#include "drdc/kernels.hpp"
#include "drdc/unet.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace drdc {

const char* stage_name(Stage s) {
    switch (s) {
    case Stage::data: return "data";
    case Stage::train_base: return "train-base";
    case Stage::train_diffusion: return "train-diffusion";
    case Stage::infer: return "infer";
    case Stage::evaluate: return "evaluate";
    case Stage::report: return "report";
    }
    return "?";
}

Stage stage_from_name(const std::string& name) {
    for (Stage s : all_stages())
        if (name == stage_name(s)) return s;
    throw ConfigError("unknown stage: " + name);
}

std::vector<Stage> all_stages() {
    return {Stage::data, Stage::train_base, Stage::train_diffusion, Stage::infer,
            Stage::evaluate, Stage::report};
}

std::vector<Stage> parse_stages(const std::string& csv) {
    std::vector<Stage> out;
    std::string cur;
    for (char ch : csv + ",") {
        if (ch == ',') {
            if (!cur.empty()) out.push_back(stage_from_name(cur));
            cur.clear();
        } else {
            cur += ch;
        }
    }
    if (out.empty()) throw ConfigError("empty stage list");
    return out;
}

// ---------------------------------------------------------------------------
// dump helpers
// ---------------------------------------------------------------------------

void write_heatmap_raw(const std::string& path_base, const Tensor& hw,
                       const std::map<std::string, std::string>& sidecar_extra) {
    if (hw.ndim() != 2) throw std::invalid_argument("write_heatmap_raw: HW map expected");
    fs::create_directories(fs::path(path_base).parent_path());
    {
        std::ofstream raw(path_base + ".raw", std::ios::binary | std::ios::trunc);
        for (int64_t i = 0; i < hw.numel(); ++i) {
            const float v = static_cast<float>(hw[i]);
            raw.write(reinterpret_cast<const char*>(&v), 4);
        }
    }
    json side;
    side["shape"] = {hw.dim(0), hw.dim(1)};
    side["dtype"] = "float32le";
    for (const auto& [k, v] : sidecar_extra) side[k] = v;
    std::ofstream meta(path_base + ".json");
    meta << side.dump(2) << "\n";
}

Tensor read_heatmap_raw(const std::string& path_base) {
    std::ifstream meta(path_base + ".json");
    if (!meta) throw MissingArtifactError("missing heatmap sidecar: " + path_base + ".json");
    json side = json::parse(meta);
    const int h = side["shape"][0], w = side["shape"][1];
    Tensor out({h, w});
    std::ifstream raw(path_base + ".raw", std::ios::binary);
    if (!raw) throw MissingArtifactError("missing heatmap dump: " + path_base + ".raw");
    for (int64_t i = 0; i < out.numel(); ++i) {
        float v;
        raw.read(reinterpret_cast<char*>(&v), 4);
        if (!raw) throw std::runtime_error("truncated heatmap dump: " + path_base + ".raw");
        out[i] = static_cast<double>(v);
    }
    return out;
}

// ---------------------------------------------------------------------------
// shared paths and loading
// ---------------------------------------------------------------------------

namespace {

struct Paths {
    fs::path out;
    fs::path dataset() const { return out / "dataset"; }
    fs::path ckpt_dir() const { return out / "checkpoints"; }
    fs::path extractor_ckpt() const { return ckpt_dir() / "extractor.ckpt"; }
    fs::path base_ckpt() const { return ckpt_dir() / "base_model.ckpt"; }
    fs::path diffusion_ckpt() const { return ckpt_dir() / "diffusion.ckpt"; }
    fs::path heatmaps() const { return out / "heatmaps"; }
    fs::path metrics_dir() const { return out / "metrics"; }
    fs::path metrics_json() const { return metrics_dir() / "metrics.json"; }
    fs::path metrics_csv() const { return metrics_dir() / "metrics.csv"; }
    fs::path histograms_csv() const { return metrics_dir() / "histograms.csv"; }
    fs::path report_dir() const { return out / "report"; }
    fs::path run_manifest() const { return out / "run_manifest.json"; }
};

DatasetManifest load_dataset(const RunConfig& cfg, const Paths& p) {
    if (cfg.dataset_source == "directory")
        return load_directory_dataset(cfg.dataset_root, cfg.resolution);
    if (!fs::exists(p.dataset() / "manifest.json"))
        throw MissingArtifactError("dataset not generated yet: " +
                                   (p.dataset() / "manifest.json").string());
    return load_saved_dataset(p.dataset().string());
}

uint64_t derive_seed(uint64_t master, const std::string& name) {
    return RngStream::substream(master, name).next_u64();
}

FeatureExtractor build_extractor(const RunConfig& cfg) {
    ExtractorConfig ec = cfg.extractor;
    ec.seed = derive_seed(cfg.seed, "features");
    return FeatureExtractor(ec, 3, cfg.resolution, cfg.resolution);
}

void append_csv_log(const fs::path& path, const std::vector<TrainLogPoint>& log) {
    fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::trunc);
    out << "step,loss\n";
    char buf[64];
    for (const auto& pt : log) {
        std::snprintf(buf, sizeof(buf), "%d,%.9g\n", pt.step, pt.loss);
        out << buf;
    }
}

std::string format_auroc(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v * 100.0);
    return buf;
}

// ---------------------------------------------------------------------------
// stage: data
// ---------------------------------------------------------------------------

void stage_data(const RunConfig& cfg, const Paths& p, RunArtifacts& art) {
    if (cfg.dataset_source == "directory") {
        // read-only source; verify it loads and leave it in place
        DatasetManifest m = load_directory_dataset(cfg.dataset_root, cfg.resolution);
        std::printf("[data] directory dataset ok: %zu records, %zu categories\n",
                    m.records.size(), m.categories.size());
        return;
    }
    GenerationSpec spec = cfg.synth;
    spec.grid_sizes = cfg.grid_sizes;
    DatasetManifest m = generate_dataset(spec, derive_seed(cfg.seed, "data"));
    save_dataset(m, p.dataset().string());
    art.paths.push_back((p.dataset() / "manifest.json").string());
    std::printf("[data] wrote %zu records (%zu categories) to %s\n", m.records.size(),
                m.categories.size(), p.dataset().string().c_str());
}

// ---------------------------------------------------------------------------
// stage: train-base
// ---------------------------------------------------------------------------

void stage_train_base(const RunConfig& cfg, const Paths& p, RunArtifacts& art) {
    DatasetManifest data = load_dataset(cfg, p);
    FeatureExtractor extractor = build_extractor(cfg);

    BaseModel model(cfg.base, extractor.feat_channels(), extractor.feat_grid(),
                    derive_seed(cfg.seed, "base-init"));
    auto log = train_base(model, data, extractor, cfg.base, cfg.seed);

    Checkpoint ext_ck;
    json meta;
    meta["kind"] = "extractor";
    meta["stage_channels"] = cfg.extractor.stage_channels;
    meta["target_grid"] = cfg.extractor.target_grid;
    meta["seed"] = derive_seed(cfg.seed, "features");
    ext_ck.metadata_json = meta.dump();
    for (const auto& [name, tensor] : extractor.weights()) ext_ck.add(name, *tensor);
    ext_ck.save(p.extractor_ckpt().string());
    art.paths.push_back(p.extractor_ckpt().string());

    Checkpoint base_ck;
    json bmeta;
    bmeta["kind"] = "base_model";
    bmeta["d_model"] = cfg.base.d_model;
    bmeta["enc_layers"] = cfg.base.enc_layers;
    bmeta["dec_layers"] = cfg.base.dec_layers;
    bmeta["seed"] = cfg.seed;
    bmeta["epochs"] = cfg.base.epochs;
    bmeta["final_loss"] = log.empty() ? 0.0 : log.back().loss;
    base_ck.metadata_json = bmeta.dump();
    base_ck.add_params(model.net().params());
    base_ck.save(p.base_ckpt().string());
    art.paths.push_back(p.base_ckpt().string());

    append_csv_log(p.metrics_dir() / "base_train_log.csv", log);
    art.paths.push_back((p.metrics_dir() / "base_train_log.csv").string());
    std::printf("[train-base] %zu steps, final loss %.6f\n", log.size(),
                log.empty() ? 0.0 : log.back().loss);
}

// ---------------------------------------------------------------------------
// stage: train-diffusion
// ---------------------------------------------------------------------------

ConditionSampler make_condition_sampler(const RunConfig& cfg) {
    // fresh grid size, partition and set index per training sample
    std::vector<int> grid_sizes = cfg.grid_sizes;
    const int n_s = cfg.num_sets;
    return [grid_sizes, n_s](const Tensor& x0, RngStream& rng) {
        const int c = grid_sizes[static_cast<size_t>(
            rng.uniform_int(0, static_cast<int64_t>(grid_sizes.size()) - 1))];
        GridPartition part = make_partition(x0.dim(1), x0.dim(2), c, n_s, rng);
        const int set = static_cast<int>(rng.uniform_int(0, n_s - 1));
        return apply_mask_noise(x0, part.masks[static_cast<size_t>(set)], rng);
    };
}

void stage_train_diffusion(const RunConfig& cfg, const Paths& p, RunArtifacts& art) {
    DatasetManifest data = load_dataset(cfg, p);
    NoiseSchedule schedule = make_schedule(cfg.diffusion_steps_total, cfg.beta_start,
                                           cfg.beta_end);
    UNet net(cfg.unet, derive_seed(cfg.seed, "diff-init"));
    auto log = train_diffusion(net, data, make_condition_sampler(cfg), schedule,
                               cfg.diffusion_train, cfg.seed);

    Checkpoint ck;
    json meta;
    meta["kind"] = "diffusion";
    meta["T"] = cfg.diffusion_steps_total;
    meta["beta_start"] = cfg.beta_start;
    meta["beta_end"] = cfg.beta_end;
    meta["base_width"] = cfg.unet.base_width;
    meta["channel_mults"] = cfg.unet.channel_mults;
    meta["res_blocks"] = cfg.unet.res_blocks;
    meta["seed"] = cfg.seed;
    meta["steps"] = cfg.diffusion_train.steps;
    meta["final_loss"] = log.empty() ? 0.0 : log.back().loss;
    ck.metadata_json = meta.dump();
    ck.add_params(net.params());
    ck.save(p.diffusion_ckpt().string());
    art.paths.push_back(p.diffusion_ckpt().string());

    append_csv_log(p.metrics_dir() / "diffusion_train_log.csv", log);
    art.paths.push_back((p.metrics_dir() / "diffusion_train_log.csv").string());
    std::printf("[train-diffusion] %zu steps, final loss %.3f\n", log.size(),
                log.empty() ? 0.0 : log.back().loss);
}

// ---------------------------------------------------------------------------
// stage: infer
// ---------------------------------------------------------------------------

struct InferResult {
    std::string id;
    Tensor h_base; // feature resolution
    Tensor h_sst;  // image resolution
    Tensor h_out;  // blended at the configured gamma
    Tensor h_diff_plot;
    std::map<std::string, Tensor> extra_heatmaps; // name -> map (dump_all)
};

void stage_infer(const RunConfig& cfg, const Paths& p, RunArtifacts& art) {
    DatasetManifest data = load_dataset(cfg, p);
    for (const fs::path& ck : {p.extractor_ckpt(), p.base_ckpt(), p.diffusion_ckpt()})
        if (!fs::exists(ck))
            throw MissingArtifactError("missing checkpoint: " + ck.string());

    FeatureExtractor extractor = build_extractor(cfg);
    {
        Checkpoint ck = Checkpoint::load(p.extractor_ckpt().string());
        std::vector<std::pair<std::string, Tensor>> arrays(ck.arrays().begin(),
                                                           ck.arrays().end());
        extractor.load_weights(arrays);
    }
    BaseModel base(cfg.base, extractor.feat_channels(), extractor.feat_grid(),
                   derive_seed(cfg.seed, "base-init"));
    Checkpoint::load(p.base_ckpt().string()).load_params(base.net().params());

    NoiseSchedule schedule = make_schedule(cfg.diffusion_steps_total, cfg.beta_start,
                                           cfg.beta_end);
    UNet unet(cfg.unet, derive_seed(cfg.seed, "diff-init"));
    Checkpoint::load(p.diffusion_ckpt().string()).load_params(unet.params());

    const std::vector<int> test_idx = data.split_indices("test");
    if (test_idx.empty()) throw std::runtime_error("infer: no test records");
    const int m = cfg.derived_smooth_kernel();
    const int plot_c = cfg.grid_sizes[cfg.grid_sizes.size() / 2];

    // base heatmaps first (cheap, stateful model used serially)
    std::vector<InferResult> results(test_idx.size());
    for (size_t k = 0; k < test_idx.size(); ++k) {
        const SampleRecord& r = data.records[static_cast<size_t>(test_idx[k])];
        results[k].id = r.id;
        Tensor f_in = extractor.extract(r.image);
        results[k].h_base = base_heatmap(f_in, base.reconstruct(f_in));
    }

    // diffusion refinement, parallel over images with per-thread nets
#pragma omp parallel
    {
        UNet local_net = unet;
        DenoiseFn denoise = local_net.as_denoiser();
#pragma omp for schedule(dynamic)
        for (int64_t k = 0; k < static_cast<int64_t>(test_idx.size()); ++k) {
            const SampleRecord& r = data.records[static_cast<size_t>(test_idx[k])];
            HeatmapStack stack;
            stack.timesteps = cfg.timesteps;
            stack.grid_sizes = cfg.grid_sizes;
            stack.scales = cfg.scales;

            for (int c : cfg.grid_sizes) {
                RngStream part_rng = RngStream::substream(
                    cfg.seed, "infer/" + r.id + "/c" + std::to_string(c) + "/partition");
                GridPartition part =
                    make_partition(data.height, data.width, c, cfg.num_sets, part_rng);

                // one trajectory per set; harvest x0 predictions at each t
                std::vector<std::map<int, Tensor>> preds(
                    static_cast<size_t>(cfg.num_sets));
                for (int set = 0; set < cfg.num_sets; ++set) {
                    RngStream traj_rng = RngStream::substream(
                        cfg.seed, "infer/" + r.id + "/c" + std::to_string(c) + "/set" +
                                      std::to_string(set));
                    preds[static_cast<size_t>(set)] = conditioned_reverse(
                        denoise, schedule, r.image, part.masks[static_cast<size_t>(set)],
                        cfg.timesteps, traj_rng, cfg.known_region_deterministic);
                }
                for (int t : cfg.timesteps) {
                    std::vector<Tensor> at_t;
                    for (int set = 0; set < cfg.num_sets; ++set)
                        at_t.push_back(preds[static_cast<size_t>(set)].at(t));
                    Tensor i_out = assemble_output(part, at_t);
                    for (int l : cfg.scales)
                        stack.insert(t, c, l, multiscale_heatmap(r.image, i_out, l));
                    if (cfg.dump_all_heatmaps || (t == cfg.plot_timestep && c == plot_c)) {
                        Tensor h = diff_heatmap(r.image, i_out);
                        const std::string name =
                            "h_diff_t" + std::to_string(t) + "_c" + std::to_string(c);
                        if (t == cfg.plot_timestep && c == plot_c)
                            results[k].h_diff_plot = h;
                        if (cfg.dump_all_heatmaps) results[k].extra_heatmaps[name] = h;
                    }
                }
            }
            Tensor h_st = st_average(stack);
            results[k].h_sst = smooth(h_st, m);
            results[k].h_out = blend(results[k].h_base, results[k].h_sst, cfg.gamma,
                                     extractor.feat_channels(), data.channels);
        }
    }

    // serial dump for a stable artifact set
    for (size_t k = 0; k < results.size(); ++k) {
        const SampleRecord& r = data.records[static_cast<size_t>(test_idx[k])];
        const fs::path dir = p.heatmaps() / results[k].id;
        const std::map<std::string, std::string> common = {{"sample", results[k].id},
                                                           {"category",
                                                            data.categories[static_cast<size_t>(
                                                                r.category)]}};
        write_heatmap_raw((dir / "h_base").string(), results[k].h_base, common);
        write_heatmap_raw((dir / "h_sst").string(), results[k].h_sst, common);
        write_heatmap_raw((dir / "h_out").string(), results[k].h_out, common);
        if (results[k].h_diff_plot.numel() > 0) {
            auto extra = common;
            extra["t"] = std::to_string(cfg.plot_timestep);
            extra["c"] = std::to_string(plot_c);
            write_heatmap_raw((dir / "h_diff_plot").string(), results[k].h_diff_plot, extra);
        }
        for (const auto& [name, map] : results[k].extra_heatmaps)
            write_heatmap_raw((dir / name).string(), map, common);
        art.paths.push_back((dir / "h_out.raw").string());
    }
    std::printf("[infer] wrote heatmaps for %zu test images\n", results.size());
}

// ---------------------------------------------------------------------------
// stage: evaluate
// ---------------------------------------------------------------------------

struct EvalRow {
    std::string category;
    double image_auroc = 0.0, pixel_auroc = 0.0;
    double image_auroc_base = 0.0, pixel_auroc_base = 0.0;
    double overlap = 0.0;
};

void stage_evaluate(const RunConfig& cfg, const Paths& p, RunArtifacts& art) {
    DatasetManifest data = load_dataset(cfg, p);
    const std::vector<int> test_idx = data.split_indices("test");
    const int pool = cfg.derived_pool_window();

    struct PerImage {
        int record = -1;
        Tensor h_out, h_out_base;
        double score = 0.0, score_base = 0.0;
    };
    std::vector<PerImage> per_image(test_idx.size());
    for (size_t k = 0; k < test_idx.size(); ++k) {
        const SampleRecord& r = data.records[static_cast<size_t>(test_idx[k])];
        const fs::path dir = p.heatmaps() / r.id;
        if (!fs::exists(dir / "h_out.raw"))
            throw MissingArtifactError("missing inference dump: " +
                                       (dir / "h_out.raw").string());
        Tensor h_base = read_heatmap_raw((dir / "h_base").string());
        Tensor h_sst = read_heatmap_raw((dir / "h_sst").string());
        PerImage& pi = per_image[k];
        pi.record = test_idx[k];
        const int c_feat = std::accumulate(cfg.extractor.stage_channels.begin(),
                                           cfg.extractor.stage_channels.end(), 0);
        pi.h_out = blend(h_base, h_sst, cfg.gamma, c_feat, data.channels);
        pi.h_out_base = blend(h_base, h_sst, 0.0, c_feat, data.channels);
        pi.score = image_score(pi.h_out, pool);
        pi.score_base = image_score(pi.h_out_base, pool);
    }

    json metrics;
    metrics["config_hash"] = cfg.config_hash();
    metrics["gamma"] = cfg.gamma;
    metrics["pool_window"] = pool;

    std::vector<EvalRow> rows;
    std::map<std::string, ScoredSet> hist_input;
    double mean_img = 0.0, mean_pix = 0.0, mean_img_base = 0.0, mean_pix_base = 0.0;

    for (size_t ci = 0; ci < data.categories.size(); ++ci) {
        EvalRow row;
        row.category = data.categories[ci];
        ScoredSet img_set, img_set_base;
        std::vector<Tensor> heatmaps, heatmaps_base, masks;
        for (const PerImage& pi : per_image) {
            const SampleRecord& r = data.records[static_cast<size_t>(pi.record)];
            if (r.category != static_cast<int>(ci)) continue;
            img_set.scores.push_back(pi.score);
            img_set.labels.push_back(r.is_anomalous ? 1 : 0);
            img_set_base.scores.push_back(pi.score_base);
            img_set_base.labels.push_back(r.is_anomalous ? 1 : 0);
            heatmaps.push_back(pi.h_out);
            heatmaps_base.push_back(pi.h_out_base);
            masks.push_back(r.gt_mask);
        }
        row.image_auroc = auroc(img_set);
        row.image_auroc_base = auroc(img_set_base);
        row.pixel_auroc = pixel_auroc(heatmaps, masks);
        row.pixel_auroc_base = pixel_auroc(heatmaps_base, masks);
        hist_input[row.category] = img_set;
        rows.push_back(row);
        mean_img += row.image_auroc;
        mean_pix += row.pixel_auroc;
        mean_img_base += row.image_auroc_base;
        mean_pix_base += row.pixel_auroc_base;
    }
    const double nc = static_cast<double>(rows.size());

    // defect-kind subsets: anomalous images of one kind plus all normal
    // test images (their pixels supply the negatives)
    json subsets;
    for (DefectKind kind :
         {DefectKind::thin_line, DefectKind::blob, DefectKind::color_shift}) {
        std::vector<Tensor> hm, hm_base, msk;
        for (const PerImage& pi : per_image) {
            const SampleRecord& r = data.records[static_cast<size_t>(pi.record)];
            const bool in_subset =
                !r.is_anomalous || (r.defect.has_value() && *r.defect == kind);
            if (!in_subset) continue;
            hm.push_back(pi.h_out);
            hm_base.push_back(pi.h_out_base);
            msk.push_back(r.gt_mask);
        }
        bool any_anom = false;
        for (const Tensor& t : msk)
            for (int64_t i = 0; i < t.numel(); ++i)
                if (t[i] > 0.5) any_anom = true;
        if (!any_anom) continue;
        json s;
        s["pixel_auroc"] = pixel_auroc(hm, msk);
        s["pixel_auroc_base"] = pixel_auroc(hm_base, msk);
        subsets[defect_kind_name(kind)] = s;
    }
    metrics["defect_subsets"] = subsets;

    auto hist = histogram_report(hist_input);
    json per_cat = json::array();
    for (EvalRow& row : rows) {
        row.overlap = hist.at(row.category).overlap;
        json jr;
        jr["category"] = row.category;
        jr["image_auroc"] = row.image_auroc;
        jr["pixel_auroc"] = row.pixel_auroc;
        jr["image_auroc_base_only"] = row.image_auroc_base;
        jr["pixel_auroc_base_only"] = row.pixel_auroc_base;
        jr["histogram_overlap"] = row.overlap;
        per_cat.push_back(jr);
    }
    metrics["per_category"] = per_cat;
    metrics["mean_image_auroc"] = mean_img / nc;
    metrics["mean_pixel_auroc"] = mean_pix / nc;
    metrics["mean_image_auroc_base_only"] = mean_img_base / nc;
    metrics["mean_pixel_auroc_base_only"] = mean_pix_base / nc;

    fs::create_directories(p.metrics_dir());
    {
        std::ofstream out(p.metrics_json());
        out << metrics.dump(2) << "\n";
    }
    art.paths.push_back(p.metrics_json().string());

    {
        std::ofstream csv(p.metrics_csv());
        csv << "category,image_auroc,pixel_auroc,image_auroc_base_only,pixel_auroc_base_only,"
               "histogram_overlap\n";
        for (const EvalRow& row : rows)
            csv << row.category << "," << format_auroc(row.image_auroc) << ","
                << format_auroc(row.pixel_auroc) << "," << format_auroc(row.image_auroc_base)
                << "," << format_auroc(row.pixel_auroc_base) << "," << row.overlap << "\n";
        csv << "mean," << format_auroc(mean_img / nc) << "," << format_auroc(mean_pix / nc)
            << "," << format_auroc(mean_img_base / nc) << ","
            << format_auroc(mean_pix_base / nc) << ",\n";
    }
    art.paths.push_back(p.metrics_csv().string());

    {
        std::ofstream csv(p.histograms_csv());
        csv << "category,label,bin,value\n";
        for (const auto& [cat, h] : hist) {
            for (size_t b = 0; b < h.normal_bins.size(); ++b)
                csv << cat << ",normal," << b << "," << h.normal_bins[b] << "\n";
            for (size_t b = 0; b < h.anomalous_bins.size(); ++b)
                csv << cat << ",anomalous," << b << "," << h.anomalous_bins[b] << "\n";
        }
    }
    art.paths.push_back(p.histograms_csv().string());

    std::printf("[evaluate] image AUROC %.2f%% / pixel AUROC %.2f%% "
                "(base-only %.2f%% / %.2f%%)\n",
                100.0 * mean_img / nc, 100.0 * mean_pix / nc, 100.0 * mean_img_base / nc,
                100.0 * mean_pix_base / nc);
}

} // namespace

// ---------------------------------------------------------------------------
// table 1
// ---------------------------------------------------------------------------

std::map<int, double> table1_experiment(const std::vector<Tensor>& masks,
                                        const std::vector<int>& factors) {
    std::map<int, double> res = mask_degradation_experiment(masks, factors);
    for (auto& [f, v] : res) v *= 100.0;
    return res;
}

std::vector<Tensor> table1_synthetic_masks(int count, int resolution, uint64_t seed) {
    std::vector<Tensor> masks;
    RngStream rng(seed);
    for (int i = 0; i < count; ++i) {
        DefectSpec d;
        d.kind = DefectKind::thin_line;
        d.size = static_cast<int>(rng.uniform_int(resolution / 4, resolution / 2));
        d.line_width = static_cast<int>(rng.uniform_int(1, 2));
        masks.push_back(defect_mask(resolution, resolution, d, rng));
    }
    return masks;
}

// ---------------------------------------------------------------------------
// run_pipeline
// ---------------------------------------------------------------------------

RunArtifacts run_pipeline(const RunConfig& cfg, const std::vector<Stage>& stages) {
    cfg.validate();
    Paths p{fs::path(cfg.out_dir)};
    fs::create_directories(p.out);

    RunArtifacts art;
    art.out_dir = cfg.out_dir;

    // fixed pipeline order regardless of the order given
    std::vector<Stage> ordered;
    for (Stage s : all_stages())
        if (std::find(stages.begin(), stages.end(), s) != stages.end()) ordered.push_back(s);

    for (Stage s : ordered) {
        switch (s) {
        case Stage::data: stage_data(cfg, p, art); break;
        case Stage::train_base: stage_train_base(cfg, p, art); break;
        case Stage::train_diffusion: stage_train_diffusion(cfg, p, art); break;
        case Stage::infer: stage_infer(cfg, p, art); break;
        case Stage::evaluate: stage_evaluate(cfg, p, art); break;
        case Stage::report: write_report(cfg, art); break;
        }
    }

    // reproducibility manifest
    json man;
    man["config"] = json::parse(cfg.to_canonical_json());
    man["config_hash"] = cfg.config_hash();
    man["seed"] = cfg.seed;
    man["code_version"] = "drdc 0.1.0";
    {
        json done = json::array();
        for (Stage s : ordered) done.push_back(stage_name(s));
        man["stages"] = done;
    }
    for (const std::string& path : art.paths)
        if (!fs::exists(path))
            throw std::runtime_error("artifact recorded but missing on disk: " + path);
    man["artifacts"] = art.paths;
    {
        const fs::path tmp = p.run_manifest().string() + ".tmp";
        std::ofstream out(tmp);
        out << man.dump(2) << "\n";
        out.close();
        fs::rename(tmp, p.run_manifest());
    }
    art.run_manifest_path = p.run_manifest().string();
    return art;
}

} // namespace drdc
