#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "drdc/base_recon.hpp"
#include "drdc/diffusion.hpp"
#include "drdc/features.hpp"
#include "drdc/synthdata.hpp"
#include "drdc/unet.hpp"

namespace drdc {

/// Configuration problems abort before any work (CLI exit code 2).
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// A stage was asked to run before its inputs exist (CLI exit code 3).
struct MissingArtifactError : std::runtime_error {
    explicit MissingArtifactError(const std::string& what) : std::runtime_error(what) {}
};

struct RunConfig {
    uint64_t seed = 7;
    std::string out_dir = "runs/out";

    // dataset
    std::string dataset_source = "synthetic"; // "synthetic" | "directory"
    std::string dataset_root;                 // MVTec-style tree for "directory"
    int resolution = 64;                      // working resolution (square)
    GenerationSpec synth;                     // synthetic generation knobs

    // features
    ExtractorConfig extractor; // seed is derived from the master seed

    // base model
    BaseTrainConfig base;

    // diffusion
    int diffusion_steps_total = 1000; // T
    double beta_start = 1e-4;
    double beta_end = 0.02;
    UNetConfig unet;
    DiffusionTrainConfig diffusion_train;

    // inference + fusion
    std::vector<int> timesteps = {250, 200, 150, 100, 50, 0};
    std::vector<int> grid_sizes = {1, 8, 16};
    int num_sets = 2;                   // n_s
    std::vector<int> scales = {1, 2, 4, 8};
    double gamma = 0.9;
    int smooth_kernel = 0;              // 0 = derive from resolution (41 at 224)
    int pool_window = 0;                // 0 = derive (resolution / 14, rounded)
    bool known_region_deterministic = false;
    bool dump_all_heatmaps = false;
    int plot_timestep = 50;

    int derived_smooth_kernel() const;
    int derived_pool_window() const;

    void validate() const; // throws ConfigError
    static RunConfig from_json_file(const std::string& path);
    static RunConfig from_json_text(const std::string& text);
    std::string to_canonical_json() const;
    /// FNV-1a over the canonical serialization; changes iff a field changes.
    std::string config_hash() const;
};

} // namespace drdc
