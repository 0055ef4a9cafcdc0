#include "drdc/config.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

using json = nlohmann::json;

namespace drdc {

int RunConfig::derived_smooth_kernel() const {
    if (smooth_kernel > 0) return smooth_kernel;
    // scale the paper-resolution filter with the working resolution,
    // nearest odd value, at least 3
    const double scaled = 41.0 * resolution / 224.0;
    int m = static_cast<int>(std::lround(scaled));
    if (m % 2 == 0) m += (scaled > m) ? 1 : -1;
    return std::max(3, m);
}

int RunConfig::derived_pool_window() const {
    if (pool_window > 0) return pool_window;
    return std::max(1, static_cast<int>(std::lround(resolution / 14.0)));
}

void RunConfig::validate() const {
    if (dataset_source != "synthetic" && dataset_source != "directory")
        throw ConfigError("dataset.source must be 'synthetic' or 'directory'");
    if (dataset_source == "directory" && dataset_root.empty())
        throw ConfigError("dataset.root required for directory datasets");
    if (resolution < 8) throw ConfigError("resolution too small");
    if (dataset_source == "synthetic" &&
        (synth.height != resolution || synth.width != resolution))
        throw ConfigError("synthetic image size must match the working resolution");

    for (int c : grid_sizes)
        if (c < 1 || resolution % c != 0)
            throw ConfigError("grid size " + std::to_string(c) +
                              " does not divide the resolution");
    if (grid_sizes.empty()) throw ConfigError("at least one grid size required");
    for (int c : grid_sizes) {
        const int g = (resolution / c) * (resolution / c);
        if (num_sets < 1 || g % num_sets != 0)
            throw ConfigError("n_s=" + std::to_string(num_sets) +
                              " does not divide the grid count of c=" + std::to_string(c));
    }
    for (int l : scales)
        if (l < 1 || resolution % l != 0)
            throw ConfigError("scale " + std::to_string(l) + " does not divide the resolution");
    if (scales.empty()) throw ConfigError("at least one scale required");

    if (timesteps.empty() || timesteps.back() != 0)
        throw ConfigError("inference timesteps must end at 0");
    for (size_t i = 0; i + 1 < timesteps.size(); ++i)
        if (timesteps[i] <= timesteps[i + 1])
            throw ConfigError("inference timesteps must be strictly descending");
    if (timesteps.front() > diffusion_steps_total)
        throw ConfigError("first inference timestep exceeds T");

    if (!(gamma >= 0.0 && gamma <= 1.0)) throw ConfigError("gamma must lie in [0,1]");
    const int m = derived_smooth_kernel();
    if (m % 2 == 0 || m >= resolution)
        throw ConfigError("smooth kernel must be odd and smaller than the image");
    const int p = derived_pool_window();
    if (p < 1 || p > resolution) throw ConfigError("pool window out of range");
    if (plot_timestep != 0 &&
        std::find(timesteps.begin(), timesteps.end(), plot_timestep) == timesteps.end())
        throw ConfigError("plot timestep must be one of the inference timesteps");

    if (diffusion_steps_total < 1 || !(beta_start > 0.0) || !(beta_start <= beta_end) ||
        !(beta_end < 1.0))
        throw ConfigError("invalid diffusion schedule parameters");

    try {
        unet.validate();
    } catch (const std::exception& e) {
        throw ConfigError(std::string("unet: ") + e.what());
    }
    const int down_factor = 1 << (unet.levels() - 1);
    if (resolution % down_factor != 0)
        throw ConfigError("resolution must divide by 2^(unet levels - 1)");

    if (base.epochs < 1 || base.batch_size < 1 || diffusion_train.steps < 1 ||
        diffusion_train.batch_size < 1)
        throw ConfigError("training sections need positive step/batch counts");
    if (extractor.target_grid < 1) throw ConfigError("extractor target grid must be >= 1");
}

namespace {

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!allowed.count(it.key()))
            throw ConfigError("unknown key '" + it.key() + "' in " + where);
}

template <typename T>
void maybe(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

} // namespace

RunConfig RunConfig::from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const std::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }

    RunConfig c;
    check_keys(j, {"seed", "out_dir", "dataset", "features", "base_model", "diffusion",
                   "inference"},
               "config");
    maybe(j, "seed", c.seed);
    maybe(j, "out_dir", c.out_dir);

    if (j.contains("dataset")) {
        const json& d = j["dataset"];
        check_keys(d,
                   {"source", "root", "resolution", "categories", "train_per_category",
                    "test_normal_per_category", "test_anomalous_per_category", "defect_kinds"},
                   "dataset");
        maybe(d, "source", c.dataset_source);
        maybe(d, "root", c.dataset_root);
        maybe(d, "resolution", c.resolution);
        maybe(d, "categories", c.synth.categories);
        maybe(d, "train_per_category", c.synth.train_per_category);
        maybe(d, "test_normal_per_category", c.synth.test_normal_per_category);
        maybe(d, "test_anomalous_per_category", c.synth.test_anomalous_per_category);
        if (d.contains("defect_kinds")) {
            c.synth.defect_kinds.clear();
            for (const auto& k : d["defect_kinds"])
                c.synth.defect_kinds.push_back(defect_kind_from_name(k.get<std::string>()));
        }
    }
    c.synth.height = c.synth.width = c.resolution;

    if (j.contains("features")) {
        const json& f = j["features"];
        check_keys(f, {"stage_channels", "target_grid"}, "features");
        maybe(f, "stage_channels", c.extractor.stage_channels);
        maybe(f, "target_grid", c.extractor.target_grid);
    }

    if (j.contains("base_model")) {
        const json& b = j["base_model"];
        check_keys(b,
                   {"d_model", "heads", "enc_layers", "dec_layers", "ffn_dim", "dropout",
                    "epochs", "batch_size", "lr", "weight_decay"},
                   "base_model");
        maybe(b, "d_model", c.base.d_model);
        maybe(b, "heads", c.base.heads);
        maybe(b, "enc_layers", c.base.enc_layers);
        maybe(b, "dec_layers", c.base.dec_layers);
        maybe(b, "ffn_dim", c.base.ffn_dim);
        maybe(b, "dropout", c.base.dropout);
        maybe(b, "epochs", c.base.epochs);
        maybe(b, "batch_size", c.base.batch_size);
        maybe(b, "lr", c.base.lr);
        maybe(b, "weight_decay", c.base.weight_decay);
    }

    if (j.contains("diffusion")) {
        const json& d = j["diffusion"];
        check_keys(d,
                   {"timesteps_total", "beta_start", "beta_end", "base_width", "channel_mults",
                    "res_blocks", "train_steps", "batch_size", "lr", "weight_decay"},
                   "diffusion");
        maybe(d, "timesteps_total", c.diffusion_steps_total);
        maybe(d, "beta_start", c.beta_start);
        maybe(d, "beta_end", c.beta_end);
        maybe(d, "base_width", c.unet.base_width);
        maybe(d, "channel_mults", c.unet.channel_mults);
        maybe(d, "res_blocks", c.unet.res_blocks);
        maybe(d, "train_steps", c.diffusion_train.steps);
        maybe(d, "batch_size", c.diffusion_train.batch_size);
        maybe(d, "lr", c.diffusion_train.lr);
        maybe(d, "weight_decay", c.diffusion_train.weight_decay);
    }

    if (j.contains("inference")) {
        const json& i = j["inference"];
        check_keys(i,
                   {"timesteps", "grid_sizes", "num_sets", "scales", "gamma", "smooth_kernel",
                    "pool_window", "known_region_deterministic", "dump_all_heatmaps",
                    "plot_timestep"},
                   "inference");
        maybe(i, "timesteps", c.timesteps);
        maybe(i, "grid_sizes", c.grid_sizes);
        maybe(i, "num_sets", c.num_sets);
        maybe(i, "scales", c.scales);
        maybe(i, "gamma", c.gamma);
        maybe(i, "smooth_kernel", c.smooth_kernel);
        maybe(i, "pool_window", c.pool_window);
        maybe(i, "known_region_deterministic", c.known_region_deterministic);
        maybe(i, "dump_all_heatmaps", c.dump_all_heatmaps);
        maybe(i, "plot_timestep", c.plot_timestep);
    }

    c.validate();
    return c;
}

RunConfig RunConfig::from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return from_json_text(text);
}

std::string RunConfig::to_canonical_json() const {
    json j;
    j["seed"] = seed;
    j["out_dir"] = out_dir;
    json& d = j["dataset"];
    d["source"] = dataset_source;
    d["root"] = dataset_root;
    d["resolution"] = resolution;
    d["categories"] = synth.categories;
    d["train_per_category"] = synth.train_per_category;
    d["test_normal_per_category"] = synth.test_normal_per_category;
    d["test_anomalous_per_category"] = synth.test_anomalous_per_category;
    {
        std::vector<std::string> kinds;
        for (DefectKind k : synth.defect_kinds) kinds.push_back(defect_kind_name(k));
        d["defect_kinds"] = kinds;
    }
    json& f = j["features"];
    f["stage_channels"] = extractor.stage_channels;
    f["target_grid"] = extractor.target_grid;
    json& b = j["base_model"];
    b["d_model"] = base.d_model;
    b["heads"] = base.heads;
    b["enc_layers"] = base.enc_layers;
    b["dec_layers"] = base.dec_layers;
    b["ffn_dim"] = base.ffn_dim;
    b["dropout"] = base.dropout;
    b["epochs"] = base.epochs;
    b["batch_size"] = base.batch_size;
    b["lr"] = base.lr;
    b["weight_decay"] = base.weight_decay;
    json& di = j["diffusion"];
    di["timesteps_total"] = diffusion_steps_total;
    di["beta_start"] = beta_start;
    di["beta_end"] = beta_end;
    di["base_width"] = unet.base_width;
    di["channel_mults"] = unet.channel_mults;
    di["res_blocks"] = unet.res_blocks;
    di["train_steps"] = diffusion_train.steps;
    di["batch_size"] = diffusion_train.batch_size;
    di["lr"] = diffusion_train.lr;
    di["weight_decay"] = diffusion_train.weight_decay;
    json& inf = j["inference"];
    inf["timesteps"] = timesteps;
    inf["grid_sizes"] = grid_sizes;
    inf["num_sets"] = num_sets;
    inf["scales"] = scales;
    inf["gamma"] = gamma;
    inf["smooth_kernel"] = derived_smooth_kernel();
    inf["pool_window"] = derived_pool_window();
    inf["known_region_deterministic"] = known_region_deterministic;
    inf["dump_all_heatmaps"] = dump_all_heatmaps;
    inf["plot_timestep"] = plot_timestep;
    return j.dump(2);
}

std::string RunConfig::config_hash() const {
    const std::string text = to_canonical_json();
    uint64_t h = 14695981039346656037ull;
    for (char ch : text) {
        h ^= static_cast<uint8_t>(ch);
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

} // namespace drdc
