#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "drdc/rng.hpp"
#include "drdc/tensor.hpp"

namespace drdc {

enum class DefectKind { thin_line, blob, color_shift };

const char* defect_kind_name(DefectKind k);
DefectKind defect_kind_from_name(const std::string& name);

struct DefectSpec {
    DefectKind kind = DefectKind::blob;
    int size = 3;           // line length / blob radius / patch side
    int line_width = 1;     // thin_line only, <= 2
    double intensity = 0.4; // contrast of the injected change, > 0
};

struct SampleRecord {
    std::string id;
    Tensor image;  // [C,H,W], values in [0,1]
    int category = 0;
    bool is_anomalous = false;
    Tensor gt_mask; // [H,W], values in {0,1}; all-zero iff normal
    std::string split; // "train" or "test"
    std::optional<DefectKind> defect;
};

struct DatasetManifest {
    std::vector<SampleRecord> records;
    std::vector<std::string> categories;
    int height = 0, width = 0, channels = 0;
    std::string source; // "synthetic" or "directory"

    std::vector<int> split_indices(const std::string& split) const;
    void validate() const;
};

/// Procedural texture families available to the generator. Each category
/// name must be one of: stripes, checker, blobs, noise (optionally suffixed,
/// e.g. "stripes2", to reuse a family with a different palette).
struct GenerationSpec {
    std::vector<std::string> categories = {"stripes", "checker"};
    int train_per_category = 64;
    int test_normal_per_category = 12;
    int test_anomalous_per_category = 12;
    int height = 64, width = 64, channels = 3;
    std::vector<int> grid_sizes = {1, 8, 16}; // must divide height and width
    std::vector<DefectKind> defect_kinds = {DefectKind::thin_line, DefectKind::blob,
                                            DefectKind::color_shift};
};

/// Deterministic multi-category dataset: normal train split, mixed test
/// split with pixel-accurate defect masks.
DatasetManifest generate_dataset(const GenerationSpec& spec, uint64_t seed);

/// Rasterize a defect mask for the given spec at a random location.
Tensor defect_mask(int height, int width, const DefectSpec& spec, RngStream& rng);

/// Apply a defect to a clean image. The returned image differs from the
/// input exactly on the mask support.
std::pair<Tensor, Tensor> inject_defect(const Tensor& image, const DefectSpec& spec,
                                        RngStream& rng);

/// One procedural normal sample of the given category (exposed for tests).
Tensor procedural_texture(const std::string& category, int cat_index, int height, int width,
                          RngStream& rng);

/// MVTec directory layout reader:
///   root/<category>/train/good/*.png
///   root/<category>/test/<defect-or-good>/*.png
///   root/<category>/ground_truth/<defect>/<stem>_mask.png
/// Images are resized bilinearly to resolution x resolution; masks use
/// nearest neighbor and are re-binarized.
DatasetManifest load_directory_dataset(const std::string& root, int resolution);

/// Persist as PNGs plus manifest.json; load reads the same layout back.
void save_dataset(const DatasetManifest& m, const std::string& dir);
DatasetManifest load_saved_dataset(const std::string& dir);

} // namespace drdc
