#include "gazecast/evaluation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "gazecast/errors.hpp"
#include "gazecast/geometry.hpp"

namespace gazecast {

MatD center_hmd_baseline(const WindowSample& sample) {
    return MatD(sample.target.rows, 2);
}

MatD mean_hmd_baseline(const WindowSample& sample) {
    if (sample.past_hmd.empty())
        throw std::domain_error("mean_hmd_baseline: sample has no past poses");
    constexpr double kDeg2Rad = M_PI / 180.0;
    double sx = 0, sy = 0, sel = 0;
    for (const HeadPose& p : sample.past_hmd) {
        sx += std::cos(p.azimuth_deg * kDeg2Rad);
        sy += std::sin(p.azimuth_deg * kDeg2Rad);
        sel += p.elevation_deg;
    }
    double n = static_cast<double>(sample.past_hmd.size());
    double mean_az = std::atan2(sy / n, sx / n) / kDeg2Rad;
    double mean_el = sel / n;
    double off_az = wrap_angle(mean_az - sample.ref_hmd.azimuth_deg);
    double off_el = mean_el - sample.ref_hmd.elevation_deg;
    MatD out(sample.target.rows, 2);
    for (int t = 0; t < out.rows; ++t) {
        out.at(t, 0) = off_az;
        out.at(t, 1) = off_el;
    }
    return out;
}

Predictor make_model_predictor(const ParamSetF& params) {
    return [params](const WindowSample& s) {
        MatF pred = predict(params, fused_window(s));
        return cast_mat<double>(pred);
    };
}

ModelEval evaluate(const std::string& name, const Predictor& predictor,
                   const std::vector<WindowSample>& testset) {
    if (testset.empty()) throw std::domain_error("evaluate: empty test set");
    int q = testset.front().target.rows;
    std::vector<std::vector<double>> err_az(q), err_el(q), err_comb(q);
    double pooled_sq = 0;
    size_t pooled_n = 0;
    for (const WindowSample& s : testset) {
        if (s.target.rows != q)
            throw std::domain_error("evaluate: inconsistent horizon in test set");
        MatD pred = predictor(s);
        if (pred.rows != q || pred.cols != 2)
            throw std::domain_error("evaluate: predictor returned " + pred.shape_str() +
                                    ", expected " + std::to_string(q) + "x2");
        for (int t = 0; t < q; ++t) {
            double daz = wrap_angle(pred.at(t, 0) - s.target.at(t, 0));
            double del = pred.at(t, 1) - s.target.at(t, 1);
            err_az[t].push_back(std::abs(daz));
            err_el[t].push_back(std::abs(del));
            double smse = 0.5 * (daz * daz + del * del);
            err_comb[t].push_back(std::sqrt(smse));
            pooled_sq += smse;
            ++pooled_n;
        }
    }

    auto rms = [](const std::vector<double>& v) {
        double s = 0;
        for (double x : v) s += x * x;
        return std::sqrt(s / v.size());
    };
    auto stddev = [](const std::vector<double>& v) {
        double mu = 0;
        for (double x : v) mu += x;
        mu /= v.size();
        double s = 0;
        for (double x : v) s += (x - mu) * (x - mu);
        return std::sqrt(s / v.size());
    };

    ModelEval eval;
    eval.name = name;
    eval.combined_rmse = std::sqrt(pooled_sq / pooled_n);
    eval.per_step.resize(q);
    for (int t = 0; t < q; ++t) {
        StepStat& st = eval.per_step[t];
        st.rmse_az = rms(err_az[t]);
        st.rmse_el = rms(err_el[t]);
        st.rmse_combined = rms(err_comb[t]);
        st.std_az = stddev(err_az[t]);
        st.std_el = stddev(err_el[t]);
        st.std_combined = stddev(err_comb[t]);
    }
    return eval;
}

EvalReport build_report(const ModelEval& center, std::vector<ModelEval> others) {
    EvalReport report;
    report.horizon = static_cast<int>(center.per_step.size());
    report.models.push_back(center);
    for (ModelEval& m : others) report.models.push_back(std::move(m));
    for (ModelEval& m : report.models) {
        if (m.per_step.size() != center.per_step.size())
            throw std::domain_error("build_report: horizon mismatch for model " + m.name);
        for (size_t t = 0; t < m.per_step.size(); ++t) {
            double ref = center.per_step[t].rmse_combined;
            m.per_step[t].improvement =
                ref > 0 ? 1.0 - m.per_step[t].rmse_combined / ref
                        : (m.per_step[t].rmse_combined > 0 ? -1.0 : 0.0);
        }
    }
    return report;
}

namespace {

std::string fmt(double v) {
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(6);
    os << v;
    return os.str();
}

}  // namespace

void export_report(const EvalReport& report, const std::string& dir) {
    if (report.models.empty() || report.horizon == 0)
        throw std::domain_error("export_report: empty report");
    std::filesystem::create_directories(dir);
    std::filesystem::path base(dir);

    std::ofstream csv(base / "metrics.csv");
    if (!csv) throw ParseError("export_report: cannot write to " + dir);
    csv << "model,step,axis,rmse,stddev,improvement\n";
    for (const ModelEval& m : report.models) {
        for (int t = 0; t < report.horizon; ++t) {
            const StepStat& s = m.per_step[t];
            csv << m.name << "," << (t + 1) << ",az," << fmt(s.rmse_az) << "," << fmt(s.std_az)
                << ",\n";
            csv << m.name << "," << (t + 1) << ",el," << fmt(s.rmse_el) << "," << fmt(s.std_el)
                << ",\n";
            csv << m.name << "," << (t + 1) << ",combined," << fmt(s.rmse_combined) << ","
                << fmt(s.std_combined) << "," << fmt(s.improvement) << "\n";
        }
    }
    if (!csv) throw ParseError("export_report: write failed in " + dir);

    std::ofstream txt(base / "summary.txt");
    txt << "Spherical RMSE (pooled over all samples and horizon steps)\n";
    for (const ModelEval& m : report.models)
        txt << "  " << m.name << ": " << fmt(m.combined_rmse) << "\n";
    txt << "\nPer-step combined RMSE\n";
    txt << "  step";
    for (const ModelEval& m : report.models) txt << "  " << m.name;
    txt << "\n";
    for (int t = 0; t < report.horizon; ++t) {
        txt << "  " << (t + 1);
        for (const ModelEval& m : report.models) txt << "  " << fmt(m.per_step[t].rmse_combined);
        txt << "\n";
    }
}

std::vector<StageTiming> benchmark_pipeline(const ParamSetF& params, int n_reps) {
    if (n_reps < 1) throw std::domain_error("benchmark_pipeline: n_reps must be >= 1");
    std::mt19937_64 rng(0);
    std::uniform_real_distribution<float> dist(0.0f, 1.0f);

    Frame raw;
    raw.width = 768;
    raw.height = 576;
    raw.channels = 3;
    raw.pixels.resize(static_cast<size_t>(raw.width) * raw.height * 3);
    for (float& v : raw.pixels) v = dist(rng);

    MatF window(params.dims.past, params.dims.input_dim);
    for (float& v : window.data) v = dist(rng);

    auto time_stage = [n_reps](auto&& fn) {
        std::vector<double> ms(n_reps);
        for (int i = 0; i < n_reps; ++i) {
            auto t0 = std::chrono::steady_clock::now();
            fn();
            ms[i] = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                              t0)
                        .count();
        }
        std::sort(ms.begin(), ms.end());
        double mean = 0;
        for (double m : ms) mean += m;
        mean /= ms.size();
        size_t idx = std::min(ms.size() - 1, static_cast<size_t>(0.95 * ms.size()));
        return std::pair<double, double>{mean, ms[idx]};
    };

    Frame pre;
    auto [pm, pp] = time_stage([&] { pre = preprocess(raw, 384, 288); });
    auto [sm, sp] = time_stage([&] { (void)spectral_residual(pre); });
    auto [mm, mp] = time_stage([&] { (void)predict(params, window); });

    return {{"saliency_preprocess_per_image", pm, pp},
            {"saliency_model_per_image", sm, sp},
            {arch_name(params.arch) + "_model_per_window", mm, mp}};
}

std::string format_bench(const std::vector<StageTiming>& timings) {
    std::ostringstream os;
    os << "stage,mean_ms,p95_ms\n";
    for (const StageTiming& t : timings)
        os << t.stage << "," << fmt(t.mean_ms) << "," << fmt(t.p95_ms) << "\n";
    return os.str();
}

}  // namespace gazecast
