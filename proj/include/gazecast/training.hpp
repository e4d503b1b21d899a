#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "gazecast/dataset.hpp"
#include "gazecast/errors.hpp"
#include "gazecast/models.hpp"

namespace gazecast {

struct TrainConfig {
    double learning_rate = 0.001;
    int batch_size = 32;
    int max_epochs = 200;
    int patience = 8;
    uint64_t seed = 0;
    LossKind loss = LossKind::SphericalMse;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    // Global-norm gradient clipping (not part of the experimental protocol
    // this mirrors; disable with clip_norm <= 0).
    double clip_norm = 5.0;
    // Validation loss must drop by more than this to count as improvement.
    double improve_tol = 1e-6;

    void validate() const;
};

template <typename T>
struct AdamState {
    std::vector<Mat<T>> m;  // first moments, in ParamSet order
    std::vector<Mat<T>> v;  // second moments
    int64_t step = 0;

    template <typename P>
    static AdamState init(const ParamSet<P>& params) {
        AdamState s;
        for (const auto& [n, mat] : params.mats) {
            s.m.emplace_back(mat.rows, mat.cols);
            s.v.emplace_back(mat.rows, mat.cols);
        }
        return s;
    }
};

/// One Adam update with bias correction over all parameters, grads given in
/// ParamSet order. Throws NumericError naming the parameter on a non-finite
/// gradient.
template <typename T>
void adam_step(ParamSet<T>& params, const std::vector<Mat<T>>& grads, AdamState<T>& state,
               const TrainConfig& cfg);

struct EpochStats {
    double train_loss = 0;
    double val_loss = 0;
    double seconds = 0;
};

struct TrainHistory {
    std::vector<EpochStats> epochs;
    int best_epoch = -1;  // 0-based index of minimal validation loss
};

/// Full training loop: per-epoch shuffled minibatches, validation after each
/// epoch, early stop after `patience` consecutive epochs without improvement.
/// Returns the parameters from the best validation epoch.
std::pair<ParamSetF, TrainHistory> train(const std::vector<WindowSample>& trainset,
                                         const std::vector<WindowSample>& valset,
                                         ParamSetF model, const TrainConfig& cfg,
                                         const std::function<void(int, const EpochStats&)>&
                                             on_epoch = {});

/// Mean loss of the model over a sample set (no gradients).
double evaluate_loss(const ParamSetF& params, const std::vector<WindowSample>& samples,
                     LossKind kind);

void save_history_csv(const TrainHistory& history, const std::string& path);

// ---- implementation ----

template <typename T>
void adam_step(ParamSet<T>& params, const std::vector<Mat<T>>& grads, AdamState<T>& state,
               const TrainConfig& cfg) {
    if (grads.size() != params.mats.size())
        throw std::invalid_argument("adam_step: gradient count mismatch");
    state.step += 1;
    T b1 = static_cast<T>(cfg.beta1), b2 = static_cast<T>(cfg.beta2);
    T bc1 = T(1) - static_cast<T>(std::pow(cfg.beta1, static_cast<double>(state.step)));
    T bc2 = T(1) - static_cast<T>(std::pow(cfg.beta2, static_cast<double>(state.step)));
    T lr = static_cast<T>(cfg.learning_rate);
    T eps = static_cast<T>(cfg.eps);
    for (size_t i = 0; i < params.mats.size(); ++i) {
        auto& [name, w] = params.mats[i];
        const Mat<T>& g = grads[i];
        if (!w.same_shape(g))
            throw std::invalid_argument("adam_step: shape mismatch for " + name);
        for (size_t j = 0; j < w.data.size(); ++j) {
            if (!std::isfinite(static_cast<double>(g.data[j])))
                throw NumericError("adam_step: non-finite gradient in parameter '" + name + "'");
            T& m = state.m[i].data[j];
            T& v = state.v[i].data[j];
            m = b1 * m + (T(1) - b1) * g.data[j];
            v = b2 * v + (T(1) - b2) * g.data[j] * g.data[j];
            T mhat = m / bc1;
            T vhat = v / bc2;
            w.data[j] -= lr * mhat / (std::sqrt(vhat) + eps);
        }
    }
}

}  // namespace gazecast
