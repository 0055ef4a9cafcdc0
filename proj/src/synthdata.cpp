#include "drdc/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "drdc/image_io.hpp"
#include "drdc/kernels.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace drdc {

const char* defect_kind_name(DefectKind k) {
    switch (k) {
    case DefectKind::thin_line: return "thin_line";
    case DefectKind::blob: return "blob";
    case DefectKind::color_shift: return "color_shift";
    }
    return "?";
}

DefectKind defect_kind_from_name(const std::string& name) {
    if (name == "thin_line") return DefectKind::thin_line;
    if (name == "blob") return DefectKind::blob;
    if (name == "color_shift") return DefectKind::color_shift;
    throw std::invalid_argument("unknown defect kind: " + name);
}

std::vector<int> DatasetManifest::split_indices(const std::string& split) const {
    std::vector<int> out;
    for (size_t i = 0; i < records.size(); ++i)
        if (records[i].split == split) out.push_back(static_cast<int>(i));
    return out;
}

void DatasetManifest::validate() const {
    for (const auto& r : records) {
        if (r.split == "train" && r.is_anomalous)
            throw std::runtime_error("manifest: anomalous record in train split: " + r.id);
        if (r.image.ndim() != 3 || r.image.dim(0) != channels || r.image.dim(1) != height ||
            r.image.dim(2) != width)
            throw std::runtime_error("manifest: image shape mismatch: " + r.id);
        double mask_sum = 0.0;
        for (int64_t i = 0; i < r.gt_mask.numel(); ++i) mask_sum += r.gt_mask[i];
        if (r.is_anomalous != (mask_sum > 0.0))
            throw std::runtime_error("manifest: mask/label inconsistency: " + r.id);
    }
    if (source == "synthetic" && categories.size() < 2)
        throw std::runtime_error("manifest: synthetic datasets need >= 2 categories");
}

// ---------------------------------------------------------------------------
// Procedural textures
// ---------------------------------------------------------------------------

namespace {

struct Palette {
    double c0[3];
    double c1[3];
};

// Distinct base palettes, cycled by category index.
const Palette kPalettes[] = {
    {{0.15, 0.25, 0.55}, {0.80, 0.85, 0.95}},
    {{0.55, 0.30, 0.10}, {0.95, 0.85, 0.60}},
    {{0.10, 0.45, 0.25}, {0.75, 0.95, 0.80}},
    {{0.45, 0.15, 0.45}, {0.95, 0.80, 0.95}},
    {{0.20, 0.20, 0.20}, {0.90, 0.90, 0.90}},
    {{0.05, 0.40, 0.50}, {0.70, 0.95, 1.00}},
};

std::string family_of(const std::string& category) {
    for (const char* fam : {"stripes", "checker", "blobs", "noise"})
        if (category.rfind(fam, 0) == 0) return fam;
    throw std::invalid_argument("unknown texture family for category '" + category +
                                "' (expected stripes*/checker*/blobs*/noise*)");
}

Tensor blend_two_tone(const Tensor& field, const Palette& pal, int channels) {
    const int H = field.dim(0), W = field.dim(1);
    Tensor img({channels, H, W});
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
            const double a = field.at2(y, x);
            for (int c = 0; c < channels; ++c) {
                const int cc = std::min(c, 2);
                img.at3(c, y, x) = (1.0 - a) * pal.c0[cc] + a * pal.c1[cc];
            }
        }
    return img;
}

Tensor stripes_field(int H, int W, RngStream& rng, int cat_index) {
    // fixed orientation per category, random phase per image
    const double angle = (cat_index % 2 == 0) ? 0.35 : 1.15;
    const double period = 9.0 + 2.0 * (cat_index % 3);
    const double phase = rng.uniform(0.0, 2.0 * M_PI);
    const double kx = std::cos(angle) * 2.0 * M_PI / period;
    const double ky = std::sin(angle) * 2.0 * M_PI / period;
    Tensor f({H, W});
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x)
            f.at2(y, x) = 0.5 + 0.5 * std::sin(kx * x + ky * y + phase);
    return f;
}

Tensor checker_field(int H, int W, RngStream& rng, int cat_index) {
    const int cell = 6 + 2 * (cat_index % 3);
    const int ox = static_cast<int>(rng.uniform_int(0, cell - 1));
    const int oy = static_cast<int>(rng.uniform_int(0, cell - 1));
    Tensor f({H, W});
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x)
            f.at2(y, x) = (((x + ox) / cell + (y + oy) / cell) % 2 == 0) ? 0.08 : 0.92;
    return f;
}

Tensor blobs_field(int H, int W, RngStream& rng, int) {
    // low-resolution noise grid, bilinear upsampling, soft threshold
    const int gh = std::max(2, H / 8), gw = std::max(2, W / 8);
    Tensor grid({1, gh, gw});
    for (int64_t i = 0; i < grid.numel(); ++i) grid[i] = rng.uniform();
    Tensor up = kernels::resize_bilinear(grid, H, W);
    Tensor f({H, W});
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x)
            f.at2(y, x) = 1.0 / (1.0 + std::exp(-10.0 * (up.at3(0, y, x) - 0.5)));
    return f;
}

Tensor noise_field(int H, int W, RngStream& rng, int) {
    Tensor raw({H, W});
    for (int64_t i = 0; i < raw.numel(); ++i) raw[i] = rng.uniform();
    Tensor sm = kernels::box_mean(raw, 5);
    double lo = 1e30, hi = -1e30;
    for (int64_t i = 0; i < sm.numel(); ++i) {
        lo = std::min(lo, sm[i]);
        hi = std::max(hi, sm[i]);
    }
    const double span = hi > lo ? hi - lo : 1.0;
    Tensor f({H, W});
    for (int64_t i = 0; i < f.numel(); ++i) f[i] = (sm[i] - lo) / span;
    return f;
}

} // namespace

Tensor procedural_texture(const std::string& category, int cat_index, int height, int width,
                          RngStream& rng) {
    const std::string fam = family_of(category);
    Tensor field;
    if (fam == "stripes") field = stripes_field(height, width, rng, cat_index);
    else if (fam == "checker") field = checker_field(height, width, rng, cat_index);
    else if (fam == "blobs") field = blobs_field(height, width, rng, cat_index);
    else field = noise_field(height, width, rng, cat_index);

    const Palette& pal = kPalettes[static_cast<size_t>(cat_index) % std::size(kPalettes)];
    return blend_two_tone(field, pal, 3);
}

// ---------------------------------------------------------------------------
// Defects
// ---------------------------------------------------------------------------

Tensor defect_mask(int height, int width, const DefectSpec& spec, RngStream& rng) {
    Tensor mask({height, width});
    switch (spec.kind) {
    case DefectKind::thin_line: {
        const int len = spec.size;
        const int lw = spec.line_width;
        if (len < 1 || lw < 1 || lw > 2)
            throw std::invalid_argument("thin_line: need length >= 1 and width in {1,2}");
        if (len > std::max(height, width))
            throw std::invalid_argument("thin_line: defect larger than image");
        const bool horizontal = len <= width && (len > height || rng.uniform() < 0.5);
        if (horizontal) {
            if (lw > height) throw std::invalid_argument("thin_line: defect larger than image");
            const int y = static_cast<int>(rng.uniform_int(0, height - lw));
            const int x = static_cast<int>(rng.uniform_int(0, width - len));
            for (int dy = 0; dy < lw; ++dy)
                for (int dx = 0; dx < len; ++dx) mask.at2(y + dy, x + dx) = 1.0;
        } else {
            if (lw > width) throw std::invalid_argument("thin_line: defect larger than image");
            const int y = static_cast<int>(rng.uniform_int(0, height - len));
            const int x = static_cast<int>(rng.uniform_int(0, width - lw));
            for (int dy = 0; dy < len; ++dy)
                for (int dx = 0; dx < lw; ++dx) mask.at2(y + dy, x + dx) = 1.0;
        }
        break;
    }
    case DefectKind::blob: {
        const int r = spec.size;
        if (r < 1) throw std::invalid_argument("blob: radius must be >= 1");
        if (2 * r + 1 > std::min(height, width))
            throw std::invalid_argument("blob: defect larger than image");
        const int cy = static_cast<int>(rng.uniform_int(r, height - 1 - r));
        const int cx = static_cast<int>(rng.uniform_int(r, width - 1 - r));
        for (int y = cy - r; y <= cy + r; ++y)
            for (int x = cx - r; x <= cx + r; ++x)
                if ((y - cy) * (y - cy) + (x - cx) * (x - cx) <= r * r) mask.at2(y, x) = 1.0;
        break;
    }
    case DefectKind::color_shift: {
        const int s = spec.size;
        if (s < 1) throw std::invalid_argument("color_shift: patch side must be >= 1");
        if (s > std::min(height, width))
            throw std::invalid_argument("color_shift: defect larger than image");
        const int y = static_cast<int>(rng.uniform_int(0, height - s));
        const int x = static_cast<int>(rng.uniform_int(0, width - s));
        for (int dy = 0; dy < s; ++dy)
            for (int dx = 0; dx < s; ++dx) mask.at2(y + dy, x + dx) = 1.0;
        break;
    }
    }
    return mask;
}

std::pair<Tensor, Tensor> inject_defect(const Tensor& image, const DefectSpec& spec,
                                        RngStream& rng) {
    if (image.ndim() != 3) throw std::invalid_argument("inject_defect: CHW image expected");
    if (!(spec.intensity > 0.0))
        throw std::invalid_argument("inject_defect: intensity must be positive");
    const int C = image.dim(0), H = image.dim(1), W = image.dim(2);
    Tensor mask = defect_mask(H, W, spec, rng);
    Tensor out = image;
    // channels affected: all for geometric defects, one for color_shift
    const int only_channel =
        spec.kind == DefectKind::color_shift ? static_cast<int>(rng.uniform_int(0, C - 1)) : -1;
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
            if (mask.at2(y, x) == 0.0) continue;
            for (int c = 0; c < C; ++c) {
                if (only_channel >= 0 && c != only_channel) continue;
                const double v = image.at3(c, y, x);
                // push away from the current value; stays in [0,1] and always
                // differs on the mask for any positive intensity
                const double moved = v <= 0.5 ? std::min(1.0, v + spec.intensity)
                                              : std::max(0.0, v - spec.intensity);
                out.at3(c, y, x) = moved;
            }
        }
    return {out, mask};
}

// ---------------------------------------------------------------------------
// Generation
// ---------------------------------------------------------------------------

namespace {

DefectSpec random_defect(DefectKind kind, int H, int W, RngStream& rng) {
    DefectSpec d;
    d.kind = kind;
    switch (kind) {
    case DefectKind::thin_line:
        d.size = static_cast<int>(rng.uniform_int(std::min(H, W) / 4, std::min(H, W) / 2));
        d.line_width = static_cast<int>(rng.uniform_int(1, 2));
        d.intensity = rng.uniform(0.35, 0.6);
        break;
    case DefectKind::blob:
        d.size = static_cast<int>(rng.uniform_int(2, std::max(2, std::min(H, W) / 12)));
        d.intensity = rng.uniform(0.35, 0.6);
        break;
    case DefectKind::color_shift:
        d.size = static_cast<int>(rng.uniform_int(4, std::max(4, std::min(H, W) / 6)));
        d.intensity = rng.uniform(0.25, 0.45);
        break;
    }
    return d;
}

} // namespace

DatasetManifest generate_dataset(const GenerationSpec& spec, uint64_t seed) {
    if (spec.categories.size() < 2)
        throw std::invalid_argument("generate_dataset: at least 2 categories required");
    for (int c : spec.grid_sizes)
        if (c < 1 || spec.height % c != 0 || spec.width % c != 0)
            throw std::invalid_argument(
                "generate_dataset: image shape not divisible by grid size " + std::to_string(c));
    if (spec.test_anomalous_per_category < 1)
        throw std::invalid_argument("generate_dataset: need at least one test anomaly");
    if (spec.defect_kinds.empty())
        throw std::invalid_argument("generate_dataset: no defect kinds configured");
    if (spec.channels != 3)
        throw std::invalid_argument("generate_dataset: 3-channel images only");

    DatasetManifest m;
    m.categories = spec.categories;
    m.height = spec.height;
    m.width = spec.width;
    m.channels = spec.channels;
    m.source = "synthetic";

    for (size_t ci = 0; ci < spec.categories.size(); ++ci) {
        const std::string& cat = spec.categories[ci];
        auto make_record = [&](const std::string& split, int idx, bool anomalous,
                               DefectKind kind) {
            SampleRecord r;
            r.id = cat + "_" + split + (anomalous ? "_anom_" : "_good_") + std::to_string(idx);
            RngStream rng = RngStream::substream(seed, "data/" + r.id);
            r.image = procedural_texture(cat, static_cast<int>(ci), spec.height, spec.width, rng);
            r.category = static_cast<int>(ci);
            r.split = split;
            r.gt_mask = Tensor({spec.height, spec.width});
            if (anomalous) {
                const DefectSpec d = random_defect(kind, spec.height, spec.width, rng);
                auto [img, mask] = inject_defect(r.image, d, rng);
                r.image = img;
                r.gt_mask = mask;
                r.is_anomalous = true;
                r.defect = kind;
            }
            m.records.push_back(std::move(r));
        };

        for (int i = 0; i < spec.train_per_category; ++i)
            make_record("train", i, false, DefectKind::blob);
        for (int i = 0; i < spec.test_normal_per_category; ++i)
            make_record("test", i, false, DefectKind::blob);
        for (int i = 0; i < spec.test_anomalous_per_category; ++i) {
            const DefectKind kind =
                spec.defect_kinds[static_cast<size_t>(i) % spec.defect_kinds.size()];
            make_record("test", i, true, kind);
        }
    }
    m.validate();
    return m;
}

// ---------------------------------------------------------------------------
// Persistence
// ---------------------------------------------------------------------------

void save_dataset(const DatasetManifest& m, const std::string& dir) {
    fs::create_directories(fs::path(dir) / "images");
    fs::create_directories(fs::path(dir) / "masks");
    json man;
    man["image_shape"] = {m.height, m.width, m.channels};
    man["categories"] = m.categories;
    man["source"] = m.source;
    man["records"] = json::array();
    for (const auto& r : m.records) {
        const std::string img_rel = "images/" + r.id + ".png";
        write_png((fs::path(dir) / img_rel).string(), to_u8(r.image));
        json jr;
        jr["id"] = r.id;
        jr["image"] = img_rel;
        jr["category"] = r.category;
        jr["split"] = r.split;
        jr["is_anomalous"] = r.is_anomalous;
        if (r.defect) jr["defect"] = defect_kind_name(*r.defect);
        if (r.is_anomalous) {
            const std::string mask_rel = "masks/" + r.id + ".png";
            write_png((fs::path(dir) / mask_rel).string(), mask_to_u8(r.gt_mask));
            jr["mask"] = mask_rel;
        }
        man["records"].push_back(jr);
    }
    std::ofstream out(fs::path(dir) / "manifest.json");
    out << man.dump(2) << "\n";
}

DatasetManifest load_saved_dataset(const std::string& dir) {
    std::ifstream in(fs::path(dir) / "manifest.json");
    if (!in) throw std::runtime_error("missing dataset manifest in " + dir);
    json man = json::parse(in);

    DatasetManifest m;
    m.height = man["image_shape"][0];
    m.width = man["image_shape"][1];
    m.channels = man["image_shape"][2];
    m.categories = man["categories"].get<std::vector<std::string>>();
    m.source = man["source"];
    for (const auto& jr : man["records"]) {
        SampleRecord r;
        r.id = jr["id"];
        r.category = jr["category"];
        r.split = jr["split"];
        r.is_anomalous = jr["is_anomalous"];
        if (jr.contains("defect")) r.defect = defect_kind_from_name(jr["defect"]);
        r.image = to_tensor(read_png((fs::path(dir) / jr["image"].get<std::string>()).string()),
                            m.channels);
        if (jr.contains("mask"))
            r.gt_mask =
                mask_from_u8(read_png((fs::path(dir) / jr["mask"].get<std::string>()).string()));
        else
            r.gt_mask = Tensor({m.height, m.width});
        m.records.push_back(std::move(r));
    }
    m.validate();
    return m;
}

// ---------------------------------------------------------------------------
// MVTec layout
// ---------------------------------------------------------------------------

namespace {

Tensor resize_mask_nearest(const Tensor& mask, int out_h, int out_w) {
    const int H = mask.dim(0), W = mask.dim(1);
    Tensor out({out_h, out_w});
    for (int y = 0; y < out_h; ++y)
        for (int x = 0; x < out_w; ++x) {
            const int sy = std::min(H - 1, static_cast<int>((y + 0.5) * H / out_h));
            const int sx = std::min(W - 1, static_cast<int>((x + 0.5) * W / out_w));
            out.at2(y, x) = mask.at2(sy, sx) > 0.5 ? 1.0 : 0.0;
        }
    return out;
}

std::vector<fs::path> sorted_files(const fs::path& dir) {
    std::vector<fs::path> out;
    if (!fs::exists(dir)) return out;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_regular_file()) out.push_back(e.path());
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<std::string> sorted_subdirs(const fs::path& dir) {
    std::vector<std::string> out;
    if (!fs::exists(dir)) return out;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_directory()) out.push_back(e.path().filename().string());
    std::sort(out.begin(), out.end());
    return out;
}

} // namespace

DatasetManifest load_directory_dataset(const std::string& root, int resolution) {
    if (!fs::exists(root)) throw std::runtime_error("dataset root not found: " + root);
    DatasetManifest m;
    m.height = m.width = resolution;
    m.channels = 3;
    m.source = "directory";
    m.categories = sorted_subdirs(root);
    if (m.categories.empty()) throw std::runtime_error("no categories under " + root);

    for (size_t ci = 0; ci < m.categories.size(); ++ci) {
        const fs::path cat_dir = fs::path(root) / m.categories[ci];
        for (const auto& f : sorted_files(cat_dir / "train" / "good")) {
            SampleRecord r;
            r.id = m.categories[ci] + "_train_" + f.stem().string();
            r.image = kernels::resize_bilinear(to_tensor(read_png(f.string()), 3), resolution,
                                               resolution);
            r.category = static_cast<int>(ci);
            r.split = "train";
            r.gt_mask = Tensor({resolution, resolution});
            m.records.push_back(std::move(r));
        }
        for (const std::string& defect : sorted_subdirs(cat_dir / "test")) {
            for (const auto& f : sorted_files(cat_dir / "test" / defect)) {
                SampleRecord r;
                r.id = m.categories[ci] + "_test_" + defect + "_" + f.stem().string();
                r.image = kernels::resize_bilinear(to_tensor(read_png(f.string()), 3),
                                                   resolution, resolution);
                r.category = static_cast<int>(ci);
                r.split = "test";
                if (defect == "good") {
                    r.gt_mask = Tensor({resolution, resolution});
                } else {
                    const fs::path mask_path = cat_dir / "ground_truth" / defect /
                                               (f.stem().string() + "_mask.png");
                    if (!fs::exists(mask_path))
                        throw std::runtime_error("missing ground-truth mask: " +
                                                 mask_path.string());
                    r.gt_mask =
                        resize_mask_nearest(mask_from_u8(read_png(mask_path.string())),
                                            resolution, resolution);
                    r.is_anomalous = true;
                }
                m.records.push_back(std::move(r));
            }
        }
    }
    m.validate();
    return m;
}

} // namespace drdc
