#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "drdc/config.hpp"
#include "drdc/image_io.hpp"
#include "drdc/kernels.hpp"
#include "drdc/pipeline.hpp"
#include "drdc/synthdata.hpp"

namespace fs = std::filesystem;

namespace drdc {

namespace {

// small blue->green->red map for heatmap tiles
void heat_color(double v, uint8_t rgb[3]) {
    v = std::clamp(v, 0.0, 1.0);
    const double r = std::clamp(1.5 * v - 0.3, 0.0, 1.0);
    const double g = std::clamp(1.5 - std::abs(2.5 * v - 1.4), 0.0, 1.0);
    const double b = std::clamp(1.1 - 1.8 * v, 0.0, 1.0);
    rgb[0] = static_cast<uint8_t>(std::lround(255 * r));
    rgb[1] = static_cast<uint8_t>(std::lround(255 * g));
    rgb[2] = static_cast<uint8_t>(std::lround(255 * b));
}

Tensor normalize01(const Tensor& hw) {
    double lo = hw[0], hi = hw[0];
    for (int64_t i = 0; i < hw.numel(); ++i) {
        lo = std::min(lo, hw[i]);
        hi = std::max(hi, hw[i]);
    }
    const double span = hi > lo ? hi - lo : 1.0;
    Tensor out(hw.shape());
    for (int64_t i = 0; i < hw.numel(); ++i) out[i] = (hw[i] - lo) / span;
    return out;
}

void paste_rgb(ImageU8& canvas, int x0, const ImageU8& tile) {
    for (int y = 0; y < tile.height; ++y)
        for (int x = 0; x < tile.width; ++x)
            for (int c = 0; c < 3; ++c)
                canvas.pixels[canvas.idx(y, x0 + x, c)] = tile.pixels[tile.idx(y, x, c)];
}

ImageU8 colormap_tile(const Tensor& hw) {
    ImageU8 img;
    img.height = hw.dim(0);
    img.width = hw.dim(1);
    img.channels = 3;
    img.pixels.resize(static_cast<size_t>(img.height) * img.width * 3);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            uint8_t rgb[3];
            heat_color(hw.at2(y, x), rgb);
            for (int c = 0; c < 3; ++c) img.pixels[img.idx(y, x, c)] = rgb[c];
        }
    return img;
}

ImageU8 overlay_tile(const Tensor& image, const Tensor& heat01) {
    ImageU8 img = to_u8(image);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            uint8_t rgb[3];
            heat_color(heat01.at2(y, x), rgb);
            const double a = 0.45;
            for (int c = 0; c < 3; ++c) {
                const double mixed = (1.0 - a) * img.pixels[img.idx(y, x, c)] + a * rgb[c];
                img.pixels[img.idx(y, x, c)] = static_cast<uint8_t>(std::lround(mixed));
            }
        }
    return img;
}

ImageU8 mask_tile(const Tensor& mask) {
    ImageU8 img;
    img.height = mask.dim(0);
    img.width = mask.dim(1);
    img.channels = 3;
    img.pixels.resize(static_cast<size_t>(img.height) * img.width * 3);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            const uint8_t v = mask.at2(y, x) > 0.5 ? 255 : 0;
            for (int c = 0; c < 3; ++c) img.pixels[img.idx(y, x, c)] = v;
        }
    return img;
}

Tensor upsample_map(const Tensor& hw, int H, int W) {
    if (hw.dim(0) == H && hw.dim(1) == W) return hw;
    Tensor chw = Tensor::from({1, hw.dim(0), hw.dim(1)},
                              std::vector<double>(hw.data(), hw.data() + hw.numel()));
    Tensor up = kernels::resize_bilinear(chw, H, W);
    return Tensor::from({H, W}, std::vector<double>(up.data(), up.data() + up.numel()));
}

void draw_histogram_png(const std::string& path,
                        const std::vector<std::pair<double, double>>& bins) {
    const int bar_w = 5, margin = 12, plot_h = 260;
    const int width = margin * 2 + static_cast<int>(bins.size()) * bar_w * 2;
    const int height = plot_h + 2 * margin;
    ImageU8 img;
    img.height = height;
    img.width = width;
    img.channels = 3;
    img.pixels.assign(static_cast<size_t>(width) * height * 3, 255);

    double peak = 1e-12;
    for (const auto& [n, a] : bins) peak = std::max({peak, n, a});

    auto bar = [&](int x0, int w, double v, uint8_t r, uint8_t g, uint8_t b) {
        const int h = static_cast<int>(std::lround(plot_h * v / peak));
        for (int y = height - margin - h; y < height - margin; ++y)
            for (int x = x0; x < x0 + w; ++x) {
                img.pixels[img.idx(y, x, 0)] = r;
                img.pixels[img.idx(y, x, 1)] = g;
                img.pixels[img.idx(y, x, 2)] = b;
            }
    };
    for (size_t i = 0; i < bins.size(); ++i) {
        const int x0 = margin + static_cast<int>(i) * bar_w * 2;
        bar(x0, bar_w, bins[i].first, 70, 110, 220);       // normal
        bar(x0 + bar_w, bar_w, bins[i].second, 235, 140, 50); // anomalous
    }
    // baseline
    for (int x = margin; x < width - margin; ++x) {
        img.pixels[img.idx(height - margin, x, 0)] = 0;
        img.pixels[img.idx(height - margin, x, 1)] = 0;
        img.pixels[img.idx(height - margin, x, 2)] = 0;
    }
    write_png(path, img);
}

} // namespace

void write_report(const RunConfig& cfg, RunArtifacts& artifacts) {
    const fs::path out(cfg.out_dir);
    const fs::path report_dir = out / "report";
    const fs::path heat_dir = out / "heatmaps";
    fs::create_directories(report_dir);

    DatasetManifest data;
    if (cfg.dataset_source == "directory")
        data = load_directory_dataset(cfg.dataset_root, cfg.resolution);
    else {
        if (!fs::exists(out / "dataset" / "manifest.json"))
            throw MissingArtifactError("report: dataset missing under " + cfg.out_dir);
        data = load_saved_dataset((out / "dataset").string());
    }

    int panels = 0;
    for (int idx : data.split_indices("test")) {
        const SampleRecord& r = data.records[static_cast<size_t>(idx)];
        const fs::path dir = heat_dir / r.id;
        if (!fs::exists(dir / "h_out.raw"))
            throw MissingArtifactError("report: missing heatmap dump " +
                                       (dir / "h_out.raw").string());
        Tensor h_base = upsample_map(normalize01(read_heatmap_raw((dir / "h_base").string())),
                                     data.height, data.width);
        Tensor h_out = normalize01(read_heatmap_raw((dir / "h_out").string()));
        Tensor h_diff = fs::exists(dir / "h_diff_plot.raw")
                            ? normalize01(read_heatmap_raw((dir / "h_diff_plot").string()))
                            : h_out;

        const int W = data.width, gap = 2;
        ImageU8 canvas;
        canvas.height = data.height;
        canvas.width = 5 * W + 4 * gap;
        canvas.channels = 3;
        canvas.pixels.assign(static_cast<size_t>(canvas.height) * canvas.width * 3, 255);
        paste_rgb(canvas, 0, to_u8(r.image));
        paste_rgb(canvas, W + gap, colormap_tile(h_base));
        paste_rgb(canvas, 2 * (W + gap), colormap_tile(h_diff));
        paste_rgb(canvas, 3 * (W + gap), overlay_tile(r.image, h_out));
        paste_rgb(canvas, 4 * (W + gap), mask_tile(r.gt_mask));

        const std::string panel_path = (report_dir / (r.id + "_panel.png")).string();
        write_png(panel_path, canvas);
        artifacts.paths.push_back(panel_path);
        ++panels;
    }

    // per-category histograms from the evaluate stage
    const fs::path hist_csv = out / "metrics" / "histograms.csv";
    if (!fs::exists(hist_csv))
        throw MissingArtifactError("report: run evaluate first (missing " + hist_csv.string() +
                                   ")");
    std::map<std::string, std::vector<std::pair<double, double>>> per_cat;
    {
        std::ifstream in(hist_csv);
        std::string line;
        std::getline(in, line); // header
        while (std::getline(in, line)) {
            std::stringstream ss(line);
            std::string cat, label, bin_s, val_s;
            std::getline(ss, cat, ',');
            std::getline(ss, label, ',');
            std::getline(ss, bin_s, ',');
            std::getline(ss, val_s, ',');
            auto& bins = per_cat[cat];
            const size_t bin = static_cast<size_t>(std::stoul(bin_s));
            if (bins.size() <= bin) bins.resize(bin + 1, {0.0, 0.0});
            if (label == "normal")
                bins[bin].first = std::stod(val_s);
            else
                bins[bin].second = std::stod(val_s);
        }
    }
    for (const auto& [cat, bins] : per_cat) {
        const std::string path = (report_dir / ("hist_" + cat + ".png")).string();
        draw_histogram_png(path, bins);
        artifacts.paths.push_back(path);
    }

    // summary table alongside the plots
    const fs::path metrics_csv = out / "metrics" / "metrics.csv";
    if (fs::exists(metrics_csv)) {
        fs::copy_file(metrics_csv, report_dir / "summary.csv",
                      fs::copy_options::overwrite_existing);
        artifacts.paths.push_back((report_dir / "summary.csv").string());
    }
    std::printf("[report] wrote %d panels and %zu histograms to %s\n", panels, per_cat.size(),
                report_dir.string().c_str());
}

} // namespace drdc
