#pragma once

#include <functional>
#include <string>
#include <vector>

#include "gazecast/dataset.hpp"
#include "gazecast/models.hpp"

namespace gazecast {

/// Maps a sample to a q x 2 offset prediction in degrees.
using Predictor = std::function<MatD(const WindowSample&)>;

/// Gaze assumed to stay at head-forward: all-zero offsets.
MatD center_hmd_baseline(const WindowSample& sample);

/// Circular mean of the p past HMD azimuths (plain mean for elevation)
/// relative to the reference pose, replicated over the horizon.
MatD mean_hmd_baseline(const WindowSample& sample);

Predictor make_model_predictor(const ParamSetF& params);

struct StepStat {
    double rmse_az = 0, rmse_el = 0, rmse_combined = 0;
    double std_az = 0, std_el = 0, std_combined = 0;  // across samples, per step
    double improvement = 0;  // 1 - rmse/rmse_center, filled by build_report
};

struct ModelEval {
    std::string name;
    double combined_rmse = 0;  // pooled over all samples and steps
    std::vector<StepStat> per_step;
};

struct EvalReport {
    int horizon = 0;
    std::vector<ModelEval> models;  // first entry is the reference baseline
};

/// Per-step, per-axis RMSE with standard deviations over the test set.
ModelEval evaluate(const std::string& name, const Predictor& predictor,
                   const std::vector<WindowSample>& testset);

/// Assembles the comparison report; `center` provides the reference RMSE for
/// the relative-improvement column and becomes the first row set.
EvalReport build_report(const ModelEval& center, std::vector<ModelEval> others);

/// Writes `metrics.csv` (one row per model x step x axis, deterministic
/// formatting) and `summary.txt` under `dir`.
void export_report(const EvalReport& report, const std::string& dir);

struct StageTiming {
    std::string stage;
    double mean_ms = 0;
    double p95_ms = 0;
};

/// Per-stage latency over n repetitions: saliency preprocessing per image,
/// saliency model per image, sequence model per window.
std::vector<StageTiming> benchmark_pipeline(const ParamSetF& params, int n_reps);

std::string format_bench(const std::vector<StageTiming>& timings);

}  // namespace gazecast
