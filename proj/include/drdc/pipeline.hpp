#pragma once

#include <map>
#include <string>
#include <vector>

#include "drdc/config.hpp"
#include "drdc/tensor.hpp"

namespace drdc {

enum class Stage { data, train_base, train_diffusion, infer, evaluate, report };

const char* stage_name(Stage s);
Stage stage_from_name(const std::string& name);
std::vector<Stage> parse_stages(const std::string& csv);
std::vector<Stage> all_stages();

struct RunArtifacts {
    std::string out_dir;
    std::string run_manifest_path;
    std::vector<std::string> paths; // everything written this invocation
};

/// Execute the requested stages in pipeline order. Each stage reads its
/// inputs from the output directory (or the configured dataset root) and
/// fails with MissingArtifactError when a dependency has not been produced.
RunArtifacts run_pipeline(const RunConfig& cfg, const std::vector<Stage>& stages);

/// Raw heatmap dumps: 32-bit little-endian floats plus a JSON sidecar.
void write_heatmap_raw(const std::string& path_base, const Tensor& hw,
                       const std::map<std::string, std::string>& sidecar_extra);
Tensor read_heatmap_raw(const std::string& path_base);

/// The scaled-ground-truth-mask study on arbitrary masks; prints nothing.
/// Factors map to AUROC percentages in [0,100].
std::map<int, double> table1_experiment(const std::vector<Tensor>& masks,
                                        const std::vector<int>& factors);

/// Synthetic masks for the study: thin-line defects (width <= 2).
std::vector<Tensor> table1_synthetic_masks(int count, int resolution, uint64_t seed);

// report stage internals reused by the CLI
void write_report(const RunConfig& cfg, RunArtifacts& artifacts);

} // namespace drdc
