// End-to-end acceptance checks for the gazecast toolkit. Each check prints a
// single PASS/FAIL line; the process exits nonzero if any check fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "gazecast/dataset.hpp"
#include "gazecast/evaluation.hpp"
#include "gazecast/geometry.hpp"
#include "gazecast/models.hpp"
#include "gazecast/training.hpp"
#include "synthetic.hpp"

using namespace gazecast;
using testsupport::corpus_samples;
using testsupport::make_synthetic_corpus;

namespace {

struct CheckFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void require(bool cond, const std::string& what) {
    if (!cond) throw CheckFailure(what);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream f(p, std::ios::binary);
    require(f.good(), "cannot read " + p.string());
    std::ostringstream os;
    os << f.rdbuf();
    return os.str();
}

// ---------------------------------------------------------------------------
// Shared trained state for the learnability and horizon-shape checks.

struct TrainedState {
    std::vector<WindowSample> test_samples;
    ModelEval center, lstm, tsmixer;
    double train_seconds = 0;
    bool ready = false;
};

TrainedState& trained_state() {
    static TrainedState state;
    if (state.ready) return state;

    auto t0 = std::chrono::steady_clock::now();
    auto corpus = make_synthetic_corpus(200, 150, 20240817, 1.0);
    WindowConfig cfg;  // p=15, q=10, step=5
    auto samples = corpus_samples(corpus, cfg);
    require(!samples.empty(), "synthetic corpus produced no samples");

    auto [trainval, test] =
        train_val_split(std::move(samples), 0.8, 99, SplitGranularity::Session);
    auto [trainset, valset] =
        train_val_split(std::move(trainval), 0.85, 100, SplitGranularity::Session);

    int F = corpus.pool.grid_rows * corpus.pool.grid_cols;
    ModelDims dims{F + 4, 32, cfg.past, cfg.horizon, 2};

    TrainConfig tc;
    tc.learning_rate = 0.003;
    tc.batch_size = 64;
    tc.max_epochs = 40;
    tc.patience = 8;
    tc.seed = 7;

    auto [lstm_params, lstm_hist] =
        train(trainset, valset, init_params<float>(Arch::Lstm, dims, 1), tc);
    auto [mix_params, mix_hist] =
        train(trainset, valset, init_params<float>(Arch::Tsmixer, dims, 2), tc);
    state.train_seconds = seconds_since(t0);

    state.test_samples = std::move(test);
    state.center = evaluate("center_hmd", center_hmd_baseline, state.test_samples);
    state.lstm = evaluate("lstm", make_model_predictor(lstm_params), state.test_samples);
    state.tsmixer = evaluate("tsmixer", make_model_predictor(mix_params), state.test_samples);
    state.ready = true;
    return state;
}

// ---------------------------------------------------------------------------
// Individual checks.

void check_wrap_sweep() {
    auto t0 = std::chrono::steady_clock::now();
    for (double d = -539.75; d < 540.0; d += 0.25) {
        double w = wrap_angle(d);
        require(w >= -180.0 && w <= 180.0,
                "wrap out of range at " + std::to_string(d));
        double k = (w - d) / 360.0;
        require(std::abs(k - std::round(k)) < 1e-9,
                "wrap not congruent mod 360 at " + std::to_string(d));
    }
    require(seconds_since(t0) < 1.0, "sweep exceeded 1 s");
}

void check_gradient_fidelity() {
    auto t0 = std::chrono::steady_clock::now();
    double worst = 0;
    for (uint64_t seed = 0; seed < 20; ++seed) {
        for (Arch arch : {Arch::Lstm, Arch::Tsmixer}) {
            ModelDims dims{10, 8, 4, 3, 2};  // 6 visual features + 4 motion
            ParamSetD params = init_params<double>(arch, dims, seed);
            std::mt19937_64 rng(seed * 7919 + 13);
            std::uniform_real_distribution<double> d(-1, 1);
            MatD window(4, 10), target(3, 2);
            for (double& v : window.data) v = d(rng);
            for (double& v : target.data) v = d(rng);

            std::vector<MatD*> ptrs;
            for (auto& [n, m] : params.mats) ptrs.push_back(&m);
            double err = grad_check(
                ptrs,
                [&](TapeD& tape, const std::vector<TapeD::Ref>& refs) {
                    BoundParams<double> bp;
                    bp.params = &params;
                    bp.refs = refs;
                    auto pred = model_forward(tape, bp, tape.constant(window));
                    return prediction_loss(tape, pred, target, LossKind::SphericalMse);
                },
                1e-5);
            worst = std::max(worst, err);
        }
    }
    require(worst < 1e-4, "max relative gradient error " + std::to_string(worst));
    require(seconds_since(t0) < 30.0, "gradient check exceeded 30 s");
}

void check_adam_oracle() {
    TrainConfig cfg;
    cfg.learning_rate = 0.001;
    ParamSetD p;
    p.mats.emplace_back("x", MatD(1, 1, 1.0));
    AdamState<double> st = AdamState<double>::init(p);

    double x = 1.0, m = 0.0, v = 0.0;
    for (int k = 1; k <= 3; ++k) {
        double g = 2 * x;
        adam_step(p, {MatD(1, 1, g)}, st, cfg);
        m = 0.9 * m + 0.1 * g;
        v = 0.999 * v + 0.001 * g * g;
        double mhat = m / (1 - std::pow(0.9, k));
        double vhat = v / (1 - std::pow(0.999, k));
        x -= 0.001 * mhat / (std::sqrt(vhat) + 1e-8);
        require(std::abs(p.mats[0].second.at(0, 0) - x) < 1e-12,
                "step " + std::to_string(k) + " diverged from hand-derived value");
    }
}

void check_windowing_oracle() {
    std::mt19937_64 rng(2025);
    std::uniform_int_distribution<int> t_dist(1, 400), p_dist(1, 30), q_dist(1, 20),
        s_dist(1, 10);
    for (int it = 0; it < 200; ++it) {
        int p = p_dist(rng), q = q_dist(rng), step = s_dist(rng);
        int T = it == 0 ? p + q : t_dist(rng);  // force the exact-fit boundary once
        WindowConfig cfg;
        cfg.past = p;
        cfg.horizon = q;
        cfg.step = step;
        auto got = valid_indices(T, cfg);
        std::vector<int> want;
        for (int f = p - 1; f <= T - q - 1; f += step) want.push_back(f);
        require(got == want, "anchor mismatch for T=" + std::to_string(T) + " p=" +
                                 std::to_string(p) + " q=" + std::to_string(q) + " step=" +
                                 std::to_string(step));
    }
}

void check_loss_identities() {
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> d(-180, 180);
    for (int i = 0; i < 10000; ++i) {
        GazeOffset a{d(rng), d(rng) / 2}, b{d(rng), d(rng) / 2};
        double daz = a.d_az_deg - b.d_az_deg;
        if (daz > 180.0) daz -= 360.0;
        if (daz < -180.0) daz += 360.0;
        double del = a.d_el_deg - b.d_el_deg;
        double want = 0.5 * (daz * daz + del * del);
        double got = spherical_mse(a, b);
        require(got == want, "spherical mse identity broken at pair " + std::to_string(i));
    }

    std::vector<GazeOffset> preds, truths;
    for (int i = 0; i < 500; ++i) {
        preds.push_back({d(rng), d(rng) / 2});
        truths.push_back({d(rng), d(rng) / 2});
    }
    SphericalRmse r = spherical_rmse(preds, truths);
    double lhs = r.combined * r.combined;
    double rhs = 0.5 * (r.az * r.az + r.el * r.el);
    require(std::abs(lhs - rhs) <= 1e-12 * std::max(1.0, std::abs(rhs)),
            "combined rmse is not the pooled mean of the axis squares");
}

void check_center_baseline_identity() {
    auto corpus = make_synthetic_corpus(100, 40, 77, 1.0);
    WindowConfig cfg;
    cfg.past = 5;
    cfg.horizon = 4;
    cfg.step = 1;
    auto samples = corpus_samples(corpus, cfg);
    require(!samples.empty(), "no samples");
    ModelEval eval = evaluate("center", center_hmd_baseline, samples);

    // independent pass over the raw sessions
    double sq = 0;
    size_t n = 0;
    for (const Session& s : corpus.sessions) {
        int T = s.frame_count();
        for (int f = cfg.past - 1; f <= T - cfg.horizon - 1; f += cfg.step) {
            for (int t = 1; t <= cfg.horizon; ++t) {
                const HeadPose& g = *s.frames[f + t].gaze;
                const HeadPose& h = s.frames[f].hmd;
                double daz = g.azimuth_deg - h.azimuth_deg;
                if (daz > 180.0) daz -= 360.0;
                if (daz < -180.0) daz += 360.0;
                double del = g.elevation_deg - h.elevation_deg;
                sq += 0.5 * (daz * daz + del * del);
                ++n;
            }
        }
    }
    require(n == samples.size() * static_cast<size_t>(cfg.horizon), "sample count mismatch");
    double want = std::sqrt(sq / n);
    require(std::abs(eval.combined_rmse - want) < 1e-12 * std::max(1.0, want),
            "center baseline rmse differs from the raw-session computation");
}

void check_learnability() {
    TrainedState& st = trained_state();
    double center = st.center.combined_rmse;
    require(center > 0, "degenerate center baseline");
    double lstm_ratio = st.lstm.combined_rmse / center;
    double mix_ratio = st.tsmixer.combined_rmse / center;
    std::ostringstream os;
    os.precision(3);
    os << "lstm/center=" << lstm_ratio << " tsmixer/center=" << mix_ratio
       << " train_time=" << st.train_seconds << "s";
    require(lstm_ratio <= 0.50, "lstm did not reach half the center error (" + os.str() + ")");
    require(mix_ratio <= 0.60, "tsmixer did not reach 60% of the center error (" + os.str() + ")");
    require(st.train_seconds < 300.0, "training exceeded 5 minutes (" + os.str() + ")");
    std::cout << "  [learnability] " << os.str() << "\n";
}

void check_horizon_shape() {
    TrainedState& st = trained_state();
    for (const ModelEval* m : {&st.center, &st.lstm, &st.tsmixer}) {
        for (size_t t = 1; t < m->per_step.size(); ++t) {
            double prev = m->per_step[t - 1].rmse_combined;
            double curr = m->per_step[t].rmse_combined;
            require(curr >= prev * 0.95,
                    m->name + " per-step error drops by more than 5% at step " +
                        std::to_string(t + 1));
        }
    }
}

void check_determinism() {
    auto corpus = make_synthetic_corpus(12, 80, 5, 1.0);
    WindowConfig cfg;  // default p/q, step 5
    auto samples = corpus_samples(corpus, cfg);
    auto [trainset, valset] = train_val_split(std::move(samples), 0.8, 11);

    ModelDims dims{28, 16, cfg.past, cfg.horizon, 2};
    TrainConfig tc;
    tc.max_epochs = 3;
    tc.patience = 8;
    tc.seed = 21;

    namespace fs = std::filesystem;
    auto dir = fs::temp_directory_path() / "gazecast_acceptance_determinism";
    fs::remove_all(dir);
    auto run = [&](const std::string& name) {
        auto [params, hist] =
            train(trainset, valset, init_params<float>(Arch::Lstm, dims, 3), tc);
        std::string path = (dir / name).string();
        save_checkpoint(params, path);
        return path;
    };
    std::string a = run("a.ckpt"), b = run("b.ckpt");
    require(slurp(a) == slurp(b), "checkpoints differ between identical runs");

    ModelEval center = evaluate("center_hmd", center_hmd_baseline, valset);
    ModelEval mean = evaluate("mean_hmd", mean_hmd_baseline, valset);
    EvalReport report = build_report(center, {mean});
    export_report(report, (dir / "r1").string());
    export_report(report, (dir / "r2").string());
    require(slurp(dir / "r1" / "metrics.csv") == slurp(dir / "r2" / "metrics.csv"),
            "metrics.csv differs between identical exports");
    require(slurp(dir / "r1" / "summary.txt") == slurp(dir / "r2" / "summary.txt"),
            "summary.txt differs between identical exports");
    fs::remove_all(dir);
}

void check_format_roundtrips() {
    namespace fs = std::filesystem;
    auto dir = fs::temp_directory_path() / "gazecast_acceptance_formats";
    fs::remove_all(dir);
    fs::create_directories(dir);

    // saliency map files
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<float> d(0, 1);
    SaliencyMap m;
    m.width = 31;
    m.height = 17;
    m.values.resize(31 * 17);
    for (float& v : m.values) v = d(rng);
    std::string smap = (dir / "sess" / "5.smap").string();
    write_smap(m, smap);
    SaliencyMap back = read_smap(smap);
    require(back.width == m.width && back.height == m.height && back.values == m.values,
            "saliency map round-trip altered the data");

    // model checkpoints
    for (Arch arch : {Arch::Lstm, Arch::Tsmixer}) {
        ModelDims dims{12, 8, 5, 3, 2};
        ParamSetF params = init_params<float>(arch, dims, 9);
        std::string ckpt = (dir / (arch_name(arch) + ".ckpt")).string();
        save_checkpoint(params, ckpt);
        ParamSetF loaded = load_checkpoint(ckpt);
        require(loaded.arch == params.arch && loaded.mats.size() == params.mats.size(),
                "checkpoint round-trip changed the structure");
        for (size_t i = 0; i < params.mats.size(); ++i)
            require(loaded.mats[i].first == params.mats[i].first &&
                        loaded.mats[i].second.data == params.mats[i].second.data,
                    "checkpoint round-trip altered parameter " + params.mats[i].first);
    }

    // session parser rejections, one per documented malformation class
    auto write_csv = [&](const std::string& name, const std::string& body) {
        std::string path = (dir / name).string();
        std::ofstream os(path);
        os << body;
        return path;
    };
    auto expect_reject = [&](const std::string& name, const std::string& body,
                             const std::string& why) {
        std::string path = write_csv(name, body);
        try {
            load_session(path);
        } catch (const ParseError&) {
            return;
        }
        throw CheckFailure("parser accepted " + why);
    };
    const std::string header = "frame,hmd_az,hmd_el,gaze_az,gaze_el\n";
    expect_reject("h.csv", "az,el\n0,1,2,3,4\n", "a wrong header");
    expect_reject("gap.csv", header + "0,0,0,0,0\n2,0,0,0,0\n", "a frame index gap");
    expect_reject("range.csv", header + "0,200,0,0,0\n", "an out-of-range azimuth");
    expect_reject("elev.csv", header + "0,0,95,0,0\n", "an out-of-range elevation");
    expect_reject("nan.csv", header + "0,nan,0,0,0\n", "a non-finite angle");
    expect_reject("text.csv", header + "0,abc,0,0,0\n", "a non-numeric field");
    expect_reject("half.csv", header + "0,0,0,5,\n", "a half-empty gaze pair");
    expect_reject("cols.csv", header + "0,0,0\n", "a short row");

    // a valid file with empty gaze columns still loads
    Session ok = load_session(write_csv("ok.csv", header + "0,1,2,,\n1,1,2,3,4\n"));
    require(ok.frame_count() == 2 && !ok.frames[0].gaze && ok.frames[1].gaze,
            "parser mishandled optional gaze columns");
    fs::remove_all(dir);
}

}  // namespace

int main() {
    struct Check {
        const char* name;
        std::function<void()> fn;
    };
    const std::vector<Check> checks = {
        {"angle wrapping sweep", check_wrap_sweep},
        {"model gradient fidelity", check_gradient_fidelity},
        {"optimizer oracle", check_adam_oracle},
        {"window anchor enumeration", check_windowing_oracle},
        {"loss identities", check_loss_identities},
        {"center baseline identity", check_center_baseline_identity},
        {"end-to-end learnability", check_learnability},
        {"horizon degradation shape", check_horizon_shape},
        {"training and export determinism", check_determinism},
        {"file format round-trips", check_format_roundtrips},
    };

    int failures = 0;
    for (const Check& c : checks) {
        try {
            c.fn();
            std::cout << "PASS: " << c.name << "\n";
        } catch (const std::exception& e) {
            ++failures;
            std::cout << "FAIL: " << c.name << " (" << e.what() << ")\n";
        }
        std::cout.flush();
    }
    if (failures > 0) std::cout << failures << " of " << checks.size() << " checks failed\n";
    return failures == 0 ? 0 : 1;
}
