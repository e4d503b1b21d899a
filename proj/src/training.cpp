#include "gazecast/training.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <limits>

namespace gazecast {

void TrainConfig::validate() const {
    if (learning_rate <= 0 || batch_size < 1 || max_epochs < 1 || patience < 1 || beta1 <= 0 ||
        beta1 >= 1 || beta2 <= 0 || beta2 >= 1 || eps <= 0)
        throw std::domain_error("TrainConfig: invalid hyperparameters");
}

namespace {

/// Mean batch loss on a fresh tape; fills `grads` (ParamSet order) when
/// backward is requested.
double batch_loss(const ParamSetF& params, const Minibatch& batch, LossKind kind,
                  bool with_grads, std::vector<MatF>* grads) {
    TapeF tape;
    auto bp = bind_params(tape, params);
    TapeF::Ref total{};
    for (const WindowSample* s : batch.samples) {
        auto window = tape.constant(fused_window(*s));
        auto pred = model_forward(tape, bp, window);
        auto loss = prediction_loss(tape, pred, cast_mat<float>(s->target), kind);
        total = total.valid() ? tape.add(total, loss) : loss;
    }
    auto mean_loss = tape.scale(total, 1.0f / static_cast<float>(batch.samples.size()));
    double value = tape.value(mean_loss).at(0, 0);
    if (with_grads) {
        tape.backward(mean_loss);
        grads->clear();
        for (auto r : bp.refs) grads->push_back(tape.grad(r));
    }
    return value;
}

void clip_global_norm(std::vector<MatF>& grads, double max_norm) {
    double sq = 0;
    for (const MatF& g : grads)
        for (float v : g.data) sq += static_cast<double>(v) * v;
    double norm = std::sqrt(sq);
    if (norm <= max_norm || norm == 0) return;
    float s = static_cast<float>(max_norm / norm);
    for (MatF& g : grads)
        for (float& v : g.data) v *= s;
}

}  // namespace

double evaluate_loss(const ParamSetF& params, const std::vector<WindowSample>& samples,
                     LossKind kind) {
    if (samples.empty()) throw std::domain_error("evaluate_loss: empty sample set");
    double total = 0;
    for (const WindowSample& s : samples) {
        Minibatch b;
        b.samples.push_back(&s);
        total += batch_loss(params, b, kind, false, nullptr);
    }
    return total / static_cast<double>(samples.size());
}

std::pair<ParamSetF, TrainHistory> train(const std::vector<WindowSample>& trainset,
                                         const std::vector<WindowSample>& valset,
                                         ParamSetF model, const TrainConfig& cfg,
                                         const std::function<void(int, const EpochStats&)>&
                                             on_epoch) {
    cfg.validate();
    if (trainset.empty() || valset.empty())
        throw std::domain_error("train: train and validation sets must be nonempty");

    auto state = AdamState<float>::init(model);
    TrainHistory history;
    ParamSetF best = model;
    double best_val = std::numeric_limits<double>::infinity();
    int epochs_without_improvement = 0;
    std::vector<MatF> grads;

    for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        auto t0 = std::chrono::steady_clock::now();
        auto batches = make_batches(trainset, cfg.batch_size, true,
                                    cfg.seed + static_cast<uint64_t>(epoch) * 0x9e3779b9ull);
        double train_total = 0;
        size_t seen = 0;
        for (const Minibatch& batch : batches) {
            double loss = batch_loss(model, batch, cfg.loss, true, &grads);
            train_total += loss * batch.samples.size();
            seen += batch.samples.size();
            if (cfg.clip_norm > 0) clip_global_norm(grads, cfg.clip_norm);
            adam_step(model, grads, state, cfg);
        }
        EpochStats stats;
        stats.train_loss = train_total / static_cast<double>(seen);
        stats.val_loss = evaluate_loss(model, valset, cfg.loss);
        if (!std::isfinite(stats.val_loss))
            throw NumericError("train: validation loss is not finite at epoch " +
                               std::to_string(epoch));
        stats.seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        history.epochs.push_back(stats);
        if (on_epoch) on_epoch(epoch, stats);

        if (stats.val_loss < best_val - cfg.improve_tol) {
            best_val = stats.val_loss;
            history.best_epoch = epoch;
            best = model;
            epochs_without_improvement = 0;
        } else {
            if (++epochs_without_improvement >= cfg.patience) break;
        }
    }
    return {std::move(best), std::move(history)};
}

void save_history_csv(const TrainHistory& history, const std::string& path) {
    std::filesystem::path p(path);
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream os(path);
    if (!os) throw ParseError("save_history_csv: cannot open " + path);
    os << "epoch,train_loss,val_loss,seconds,is_best\n";
    os.precision(10);
    for (size_t i = 0; i < history.epochs.size(); ++i) {
        const EpochStats& e = history.epochs[i];
        os << i << "," << e.train_loss << "," << e.val_loss << "," << e.seconds << ","
           << (static_cast<int>(i) == history.best_epoch ? 1 : 0) << "\n";
    }
}

}  // namespace gazecast
