// Acceptance suite: one pass/fail line per criterion. Exit code 0 only when
// every executed criterion passes (optional data-dependent checks report
// SKIP). Run with --only to select criteria, --mvtec to enable the real-data
// table check (also honored via DRDC_MVTEC_ROOT).

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "drdc/base_recon.hpp"
#include "drdc/config.hpp"
#include "drdc/diffusion.hpp"
#include "drdc/evalkit.hpp"
#include "drdc/fusion.hpp"
#include "drdc/inpaint.hpp"
#include "drdc/kernels.hpp"
#include "drdc/pipeline.hpp"
#include "drdc/rng.hpp"
#include "drdc/schedule.hpp"
#include "toy_denoiser.hpp"

using namespace drdc;
namespace fs = std::filesystem;

namespace {

int g_pass = 0, g_fail = 0, g_skip = 0;

struct Timer {
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
};

void report(int criterion, bool ok, const std::string& detail) {
    std::printf("[%s] C%-2d %s\n", ok ? "PASS" : "FAIL", criterion, detail.c_str());
    std::fflush(stdout);
    (ok ? g_pass : g_fail)++;
}

void report_skip(int criterion, const std::string& detail) {
    std::printf("[SKIP] C%-2d %s\n", criterion, detail.c_str());
    std::fflush(stdout);
    ++g_skip;
}

std::string fmt(const char* f, ...) {
    char buf[512];
    va_list ap;
    va_start(ap, f);
    std::vsnprintf(buf, sizeof(buf), f, ap);
    va_end(ap);
    return buf;
}

// --- C1: algebraic round trip --------------------------------------------

void criterion1() {
    Timer timer;
    NoiseSchedule s = make_schedule(1000, 1e-4, 0.02);
    RngStream rng(101);
    double max_err = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        Tensor x0 = rng.normal_tensor({3, 8, 8});
        Tensor eps = rng.normal_tensor({3, 8, 8});
        const int t = static_cast<int>(rng.uniform_int(1, 1000));
        Tensor rec = predict_x0(forward_sample(x0, t, eps, s), eps, t, s);
        for (int64_t i = 0; i < x0.numel(); ++i)
            max_err = std::max(max_err, std::abs(rec[i] - x0[i]));
    }
    const double sec = timer.seconds();
    report(1, max_err < 1e-5 && sec < 5.0,
           fmt("algebraic round-trip: 1000 triples, max |predict_x0-x0| = %.3e "
               "(tol 1e-5), %.2fs (limit 5s)",
               max_err, sec));
}

// --- C2: deterministic sampler oracle ------------------------------------

void criterion2() {
    Timer timer;
    NoiseSchedule s = make_schedule(1000, 1e-4, 0.02);
    RngStream rng(202);
    const std::vector<int> ts = {250, 200, 150, 100, 50, 0};
    double max_err = 0.0;
    for (int img = 0; img < 100; ++img) {
        Tensor x0 = rng.normal_tensor({3, 16, 16});
        Tensor eps = rng.normal_tensor({3, 16, 16});
        DenoiseFn oracle = [&](const Tensor&, const Tensor&, int) { return eps; };
        Tensor cond({3, 16, 16});
        Tensor x = forward_sample(x0, 250, eps, s);
        for (size_t k = 0; k + 1 < ts.size(); ++k)
            x = reverse_step(oracle, x, cond, ts[k], ts[k + 1], ReverseMode::deterministic,
                             rng, s);
        for (int64_t i = 0; i < x0.numel(); ++i)
            max_err = std::max(max_err, std::abs(x[i] - x0[i]));
    }
    const double sec = timer.seconds();
    report(2, max_err < 1e-4 && sec < 10.0,
           fmt("sampler oracle: 100 images t=250->0, max |x-x0| = %.3e (tol 1e-4), "
               "%.2fs (limit 10s)",
               max_err, sec));
}

// --- C3: forward process consistency --------------------------------------

void criterion3() {
    NoiseSchedule s = make_schedule(5, 0.05, 0.3);
    RngStream rng(303);
    const int n = 10000;
    const double x0 = 0.6;
    double it_sum = 0.0, it_sum2 = 0.0, di_sum = 0.0, di_sum2 = 0.0;
    for (int i = 0; i < n; ++i) {
        Tensor x = Tensor::from({1}, {x0});
        for (int t = 1; t <= 5; ++t) x = forward_step(x, t, rng, s);
        it_sum += x[0];
        it_sum2 += x[0] * x[0];
        Tensor eps = rng.normal_tensor({1});
        Tensor xd = forward_sample(Tensor::from({1}, {x0}), 5, eps, s);
        di_sum += xd[0];
        di_sum2 += xd[0] * xd[0];
    }
    const double want_mean = std::sqrt(s.alpha_bar[5]) * x0;
    const double want_var = 1.0 - s.alpha_bar[5];
    const double se_mean = std::sqrt(want_var / n);
    const double se_var = want_var * std::sqrt(2.0 / (n - 1));
    const double it_mean = it_sum / n, it_var = it_sum2 / n - it_mean * it_mean;
    const double di_mean = di_sum / n, di_var = di_sum2 / n - di_mean * di_mean;
    const bool ok = std::abs(it_mean - want_mean) < 3 * se_mean &&
                    std::abs(di_mean - want_mean) < 3 * se_mean &&
                    std::abs(it_var - want_var) < 3 * se_var &&
                    std::abs(di_var - want_var) < 3 * se_var;
    report(3, ok,
           fmt("forward consistency at T=5, 10000 trajectories: iterated mean/var "
               "%.4f/%.4f vs direct %.4f/%.4f vs closed form %.4f/%.4f (3 SE = "
               "%.4f/%.4f)",
               it_mean, it_var, di_mean, di_var, want_mean, want_var, 3 * se_mean,
               3 * se_var));
}

// --- C4: analytic denoiser -------------------------------------------------

void criterion4() {
    Timer timer;
    NoiseSchedule s = make_schedule(200, 1e-3, 0.02);
    testing::GaussianToy toy; // x0 ~ N(0.3, 0.2^2)
    testing::ScalarDenoiser model(16, 64, 42);
    testing::train_scalar_denoiser(model, s, toy, 4000, 128, 2e-3, 7);
    const double mse = testing::toy_grid_mse(model, toy, s, 20, 50);
    const double sec = timer.seconds();
    report(4, mse < 0.05 && sec < 300.0,
           fmt("analytic denoiser: grid MSE vs closed-form eps* = %.4f (tol 0.05), "
               "%.1fs (limit 300s)",
               mse, sec));
}

// --- C5: partition properties ----------------------------------------------

void criterion5() {
    RngStream rng(505);
    const int total = 10000;
    const std::vector<int> cs = {1, 8, 16};
    const std::vector<int> sets = {2, 4};
    bool ok = true;
    for (int trial = 0; trial < total && ok; ++trial) {
        const int c = cs[static_cast<size_t>(trial) % cs.size()];
        const int n_s = sets[static_cast<size_t>(trial / cs.size()) % sets.size()];
        GridPartition p = make_partition(64, 64, c, n_s, rng);
        const int G = (64 / c) * (64 / c);
        if (p.grid_count != G) ok = false;
        std::vector<char> seen(static_cast<size_t>(G), 0);
        for (const auto& set : p.sets) {
            if (static_cast<int>(set.size()) != G / n_s) ok = false;
            for (int g : set) {
                if (seen[static_cast<size_t>(g)]) ok = false; // disjointness
                seen[static_cast<size_t>(g)] = 1;
            }
        }
        for (char v : seen)
            if (!v) ok = false; // exact cover
        // every pixel unknown in exactly one mask
        Tensor cover({64, 64});
        for (const Tensor& m : p.masks)
            for (int64_t i = 0; i < m.numel(); ++i) cover[i] += 1.0 - m[i];
        for (int64_t i = 0; i < cover.numel(); ++i)
            if (cover[i] != 1.0) ok = false;
    }
    report(5, ok,
           fmt("partition/coverage: 10000 partitions over c in {1,8,16}, n_s in "
               "{2,4}: disjoint, exact cover, sum_i(1-M_i) == 1, |S_i| = G/n_s"));
}

// --- C6: AUROC oracle --------------------------------------------------------

void criterion6() {
    RngStream rng(606);
    double max_err = 0.0;
    int instances = 0;
    while (instances < 1000) {
        const int n = 2 + static_cast<int>(rng.uniform_int(0, 198));
        ScoredSet s;
        bool has0 = false, has1 = false;
        for (int i = 0; i < n; ++i) {
            s.scores.push_back(std::round(rng.uniform() * 10.0) / 10.0); // ties likely
            const int l = rng.uniform() < 0.5 ? 1 : 0;
            s.labels.push_back(l);
            (l ? has1 : has0) = true;
        }
        if (!has0 || !has1) continue;
        ++instances;
        double num = 0.0;
        int64_t pairs = 0;
        for (int i = 0; i < n; ++i) {
            if (s.labels[static_cast<size_t>(i)] != 1) continue;
            for (int j = 0; j < n; ++j) {
                if (s.labels[static_cast<size_t>(j)] != 0) continue;
                ++pairs;
                const double a = s.scores[static_cast<size_t>(i)];
                const double b = s.scores[static_cast<size_t>(j)];
                num += a > b ? 1.0 : (a == b ? 0.5 : 0.0);
            }
        }
        max_err = std::max(max_err, std::abs(auroc(s) - num / static_cast<double>(pairs)));
    }
    report(6, max_err < 1e-9,
           fmt("AUROC oracle: 1000 instances (n <= 200 with ties), max |rank - "
               "brute force| = %.2e (tol 1e-9)",
               max_err));
}

// --- C7: table-1 property on synthetic thin masks ---------------------------

void criterion7() {
    std::vector<Tensor> masks = table1_synthetic_masks(200, 64, 707);
    auto res = table1_experiment(masks, {1, 2, 4, 8, 16});
    const bool exact1 = res.at(1) == 100.0;
    bool monotone = true;
    const std::vector<int> fs = {1, 2, 4, 8, 16};
    for (size_t i = 0; i + 1 < fs.size(); ++i)
        if (res.at(fs[i]) < res.at(fs[i + 1]) - 1e-12) monotone = false;
    const bool strict = res.at(16) < res.at(2);
    report(7, exact1 && monotone && strict,
           fmt("table-1 property (synthetic, 200 width<=2 masks): AUROC%% = "
               "{%.2f, %.2f, %.2f, %.2f, %.2f}; factor1==100, non-increasing, "
               "f16 < f2",
               res.at(1), res.at(2), res.at(4), res.at(8), res.at(16)));
}

// --- C8: table-1 on MVTec-AD (optional) -------------------------------------

void criterion8(const std::string& mvtec_root) {
    if (mvtec_root.empty() || !fs::exists(mvtec_root)) {
        report_skip(8, "table-1 real-data reproduction: MVTec-AD not supplied "
                       "(--mvtec or DRDC_MVTEC_ROOT)");
        return;
    }
    DatasetManifest data = load_directory_dataset(mvtec_root, 224);
    std::vector<Tensor> masks;
    for (const auto& r : data.records)
        if (r.is_anomalous) masks.push_back(r.gt_mask);
    auto res = table1_experiment(masks, {1, 2, 4, 8, 16});
    const double want[5] = {100.00, 99.99, 99.93, 99.27, 96.05};
    const int fs[5] = {1, 2, 4, 8, 16};
    bool ok = true;
    for (int i = 0; i < 5; ++i)
        if (std::abs(res.at(fs[i]) - want[i]) > 0.3) ok = false;
    report(8, ok,
           fmt("table-1 MVTec-AD: AUROC%% = {%.2f, %.2f, %.2f, %.2f, %.2f} vs "
               "published {100.00, 99.99, 99.93, 99.27, 96.05} (tol 0.3)",
               res.at(1), res.at(2), res.at(4), res.at(8), res.at(16)));
}

// --- C9: fusion identities ---------------------------------------------------

void criterion9() {
    RngStream rng(909);
    Tensor a = rng.normal_tensor({3, 32, 32});
    Tensor b = rng.normal_tensor({3, 32, 32});
    double d1 = 0.0;
    {
        Tensor m1 = multiscale_heatmap(a, b, 1);
        Tensor dh = diff_heatmap(a, b);
        for (int64_t i = 0; i < m1.numel(); ++i) d1 = std::max(d1, std::abs(m1[i] - dh[i]));
    }

    Tensor h_base({8, 8});
    for (int64_t i = 0; i < h_base.numel(); ++i) h_base[i] = std::abs(rng.normal());
    Tensor h_sst({32, 32});
    for (int64_t i = 0; i < h_sst.numel(); ++i) h_sst[i] = std::abs(rng.normal());
    bool endpoints = true;
    {
        Tensor g0 = blend(h_base, h_sst, 0.0, 120, 3);
        Tensor up = kernels::resize_bilinear(
            Tensor::from({1, 8, 8}, std::vector<double>(h_base.data(), h_base.data() + 64)),
            32, 32);
        for (int64_t i = 0; i < g0.numel(); ++i)
            if (g0[i] != up[i] / 120.0) endpoints = false;
        Tensor g1 = blend(h_base, h_sst, 1.0, 120, 3);
        for (int64_t i = 0; i < g1.numel(); ++i)
            if (g1[i] != h_sst[i] / 3.0) endpoints = false;
    }

    Tensor c({32, 32}, 1.234);
    double dc = 0.0;
    {
        Tensor sm = smooth(c, 11);
        for (int64_t i = 0; i < sm.numel(); ++i) dc = std::max(dc, std::abs(sm[i] - 1.234));
    }
    bool ident = true;
    {
        Tensor h = rng.normal_tensor({32, 32});
        Tensor sm = smooth(h, 1);
        for (int64_t i = 0; i < h.numel(); ++i)
            if (sm[i] != h[i]) ident = false;
    }
    report(9, d1 < 1e-6 && endpoints && dc < 1e-6 && ident,
           fmt("fusion identities: |multiscale(l=1)-diff| = %.2e (tol 1e-6), gamma "
               "endpoints exact = %s, |smooth(const)-const| = %.2e, smooth(m=1) "
               "identity = %s",
               d1, endpoints ? "yes" : "no", dc, ident ? "yes" : "no"));
}

// --- C10: toy end-to-end ------------------------------------------------------

RunConfig e2e_config(const std::string& out_dir) {
    RunConfig c;
    c.seed = 7;
    c.out_dir = out_dir;
    c.resolution = 64;
    c.synth.height = c.synth.width = 64;
    c.synth.categories = {"stripes", "checker"};
    c.synth.train_per_category = 64;
    c.synth.test_normal_per_category = 12;
    c.synth.test_anomalous_per_category = 12;
    // remaining fields: the built-in desk-scale defaults (paper-style
    // timesteps {250..0}, c {1,8,16}, l {1,2,4,8}, gamma 0.9, n_s 2)
    return c;
}

void criterion10(const std::string& keep_dir) {
    Timer timer;
    const std::string out =
        keep_dir.empty() ? "/tmp/drdc_acceptance_e2e" : keep_dir;
    fs::remove_all(out);
    RunConfig cfg = e2e_config(out);
    run_pipeline(cfg, {Stage::data, Stage::train_base, Stage::train_diffusion, Stage::infer,
                       Stage::evaluate});

    std::ifstream in(out + "/metrics/metrics.json");
    nlohmann::json metrics = nlohmann::json::parse(in);
    const double img = metrics["mean_image_auroc"];
    const double pix = metrics["mean_pixel_auroc"];
    // thin-line subset comparison: fused vs base-only
    double thin = -1.0, thin_base = -1.0;
    if (metrics["defect_subsets"].contains("thin_line")) {
        thin = metrics["defect_subsets"]["thin_line"]["pixel_auroc"];
        thin_base = metrics["defect_subsets"]["thin_line"]["pixel_auroc_base"];
    }
    const double sec = timer.seconds();
    const bool ok = img >= 0.90 && pix >= 0.90 && thin >= thin_base && sec < 3600.0;
    report(10, ok,
           fmt("toy end-to-end: image AUROC %.4f (>= 0.90), pixel AUROC %.4f (>= "
               "0.90), thin-line pixel AUROC fused %.4f vs base-only %.4f, %.0fs "
               "(limit 3600s)",
               img, pix, thin, thin_base, sec));
    if (keep_dir.empty()) fs::remove_all(out);
}

// --- C11: determinism ---------------------------------------------------------

void criterion11() {
    const std::string out1 = "/tmp/drdc_acceptance_det1";
    const std::string out2 = "/tmp/drdc_acceptance_det2";
    fs::remove_all(out1);
    fs::remove_all(out2);

    RunConfig cfg;
    cfg.seed = 11;
    cfg.resolution = 32;
    cfg.synth.height = cfg.synth.width = 32;
    cfg.synth.train_per_category = 8;
    cfg.synth.test_normal_per_category = 3;
    cfg.synth.test_anomalous_per_category = 3;
    cfg.extractor.stage_channels = {8, 12, 16};
    cfg.extractor.target_grid = 4;
    cfg.base.d_model = 32;
    cfg.base.heads = 2;
    cfg.base.enc_layers = 1;
    cfg.base.dec_layers = 1;
    cfg.base.ffn_dim = 48;
    cfg.base.epochs = 4;
    cfg.base.batch_size = 4;
    cfg.unet.base_width = 8;
    cfg.unet.channel_mults = {1, 2};
    cfg.unet.res_blocks = 1;
    cfg.diffusion_train.steps = 30;
    cfg.diffusion_train.batch_size = 2;
    cfg.grid_sizes = {1, 8};
    cfg.scales = {1, 2};
    cfg.smooth_kernel = 5;
    cfg.pool_window = 3;

    // identical out_dir in the config fed to both runs, staged into two
    // directories by renaming between runs
    auto run_into = [&](const std::string& dir) {
        RunConfig c = cfg;
        c.out_dir = "/tmp/drdc_acceptance_det_work";
        fs::remove_all(c.out_dir);
        run_pipeline(c, all_stages());
        fs::rename(c.out_dir, dir);
    };
    run_into(out1);
    run_into(out2);

    auto read = [](const std::string& p) {
        std::ifstream in(p);
        return std::string((std::istreambuf_iterator<char>(in)),
                           std::istreambuf_iterator<char>());
    };
    const std::string m1 = read(out1 + "/metrics/metrics.json");
    const std::string m2 = read(out2 + "/metrics/metrics.json");
    const bool ok = !m1.empty() && m1 == m2;
    report(11, ok,
           fmt("determinism: two full pipeline runs, metrics JSON byte-identical = "
               "%s (%zu bytes)",
               ok ? "yes" : "no", m1.size()));
    fs::remove_all(out1);
    fs::remove_all(out2);
}

} // namespace

int main(int argc, char** argv) {
    std::set<int> only;
    std::string mvtec_root = std::getenv("DRDC_MVTEC_ROOT") ? std::getenv("DRDC_MVTEC_ROOT") : "";
    std::string keep_e2e;
    for (int i = 1; i < argc; ++i) {
        if (std::strcmp(argv[i], "--only") == 0 && i + 1 < argc) {
            std::string cur;
            for (char ch : std::string(argv[++i]) + ",") {
                if (ch == ',') {
                    if (!cur.empty()) only.insert(std::stoi(cur));
                    cur.clear();
                } else
                    cur += ch;
            }
        } else if (std::strcmp(argv[i], "--mvtec") == 0 && i + 1 < argc) {
            mvtec_root = argv[++i];
        } else if (std::strcmp(argv[i], "--keep-e2e") == 0 && i + 1 < argc) {
            keep_e2e = argv[++i];
        }
    }
    auto want = [&](int c) { return only.empty() || only.count(c); };

    if (want(1)) criterion1();
    if (want(2)) criterion2();
    if (want(3)) criterion3();
    if (want(4)) criterion4();
    if (want(5)) criterion5();
    if (want(6)) criterion6();
    if (want(7)) criterion7();
    if (want(8)) criterion8(mvtec_root);
    if (want(9)) criterion9();
    if (want(10)) criterion10(keep_e2e);
    if (want(11)) criterion11();

    std::printf("acceptance: %d passed, %d failed, %d skipped\n", g_pass, g_fail, g_skip);
    return g_fail == 0 ? 0 : 1;
}
