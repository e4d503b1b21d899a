// Command-line front end: import / train / eval / predict / bench.
// Exit codes: 0 success, 1 usage, 2 data error, 3 numeric failure.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "gazecast/dataset.hpp"
#include "gazecast/errors.hpp"
#include "gazecast/evaluation.hpp"
#include "gazecast/models.hpp"
#include "gazecast/training.hpp"

namespace fs = std::filesystem;
using namespace gazecast;

namespace {

struct SaliencyOpts {
    std::string kind = "center-bias";
    std::string dir;       // precomputed root
    int map_width = 96;
    int map_height = 72;
    int pool_rows = 9;
    int pool_cols = 12;
    std::string pool_mode = "mean";

    void attach(CLI::App* cmd) {
        cmd->add_option("--saliency", kind, "Saliency provider")
            ->check(CLI::IsMember({"precomputed", "center-bias"}))
            ->capture_default_str();
        cmd->add_option("--saliency-dir", dir, "Root of precomputed .smap files");
        cmd->add_option("--map-width", map_width, "Center-bias map width")->capture_default_str();
        cmd->add_option("--map-height", map_height, "Center-bias map height")
            ->capture_default_str();
        cmd->add_option("--pool-rows", pool_rows, "Pooling grid rows")->capture_default_str();
        cmd->add_option("--pool-cols", pool_cols, "Pooling grid cols")->capture_default_str();
        cmd->add_option("--pool-mode", pool_mode, "Pooling mode")
            ->check(CLI::IsMember({"mean", "max"}))
            ->capture_default_str();
    }

    std::unique_ptr<SaliencyProvider> make_provider() const {
        if (kind == "precomputed") {
            if (dir.empty())
                throw std::invalid_argument("--saliency precomputed requires --saliency-dir");
            return make_precomputed_provider(dir);
        }
        return make_center_bias_provider(map_width, map_height);
    }

    PoolSpec pool() const {
        PoolSpec spec;
        spec.grid_rows = pool_rows;
        spec.grid_cols = pool_cols;
        spec.mode = pool_mode == "max" ? PoolSpec::Mode::Max : PoolSpec::Mode::Mean;
        return spec;
    }
};

std::vector<Session> load_sessions(const std::string& data_dir,
                                   const std::vector<std::string>& exclude) {
    if (!fs::is_directory(data_dir)) throw ParseError("data directory not found: " + data_dir);
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(data_dir))
        if (e.is_regular_file() && e.path().extension() == ".csv") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    std::vector<Session> sessions;
    for (const fs::path& f : files) {
        std::string id = f.stem().string();
        if (std::find(exclude.begin(), exclude.end(), id) != exclude.end()) continue;
        sessions.push_back(load_session(f.string()));
    }
    if (sessions.empty()) throw ParseError("no session .csv files in " + data_dir);
    return sessions;
}

std::vector<WindowSample> collect_samples(const std::vector<Session>& sessions,
                                          const WindowConfig& cfg,
                                          const SaliencyProvider& provider, const PoolSpec& pool) {
    std::vector<WindowSample> samples;
    for (const Session& s : sessions) {
        auto batch = build_samples(s, cfg, provider, pool,
                                   [](const std::string& msg) { std::cerr << "warning: " << msg << "\n"; });
        std::move(batch.begin(), batch.end(), std::back_inserter(samples));
    }
    if (samples.empty()) throw ParseError("no usable window samples (sessions too short?)");
    return samples;
}

void write_config_echo(const std::string& path, const std::vector<std::pair<std::string,
                       std::string>>& kv) {
    std::ofstream os(path);
    for (const auto& [k, v] : kv) os << k << "=" << v << "\n";
}

int run(int argc, char** argv) {
    CLI::App app{"Eye-tracking-free gaze forecasting for head-mounted displays"};
    app.require_subcommand(1);

    // ---- import ----
    auto* cmd_import = app.add_subcommand("import", "Convert recorded head/gaze logs to session files");
    std::string import_src, import_out;
    double import_fps = 30.0;
    cmd_import->add_option("--ehtask", import_src, "Source directory of recording logs")->required();
    cmd_import->add_option("--out", import_out, "Output directory")->required();
    cmd_import->add_option("--fps", import_fps, "Nominal frame rate")->capture_default_str();

    // ---- shared train/eval options ----
    WindowConfig wcfg;
    SaliencyOpts sal;
    std::vector<std::string> exclude;

    // ---- train ----
    auto* cmd_train = app.add_subcommand("train", "Train a gaze predictor");
    std::string train_data, train_out = "run", train_arch = "lstm", train_loss = "spherical_mse";
    std::string split_mode = "sample";
    TrainConfig tcfg;
    ModelDims dims;
    double val_ratio = 0.8;
    cmd_train->add_option("--data", train_data, "Directory of session .csv files")->required();
    cmd_train->add_option("--out", train_out, "Run directory")->capture_default_str();
    cmd_train->add_option("--arch", train_arch, "Model architecture")
        ->check(CLI::IsMember({"lstm", "tsmixer"}))->capture_default_str();
    cmd_train->add_option("--p", wcfg.past, "Past frames per window")->capture_default_str();
    cmd_train->add_option("--q", wcfg.horizon, "Future steps to predict")->capture_default_str();
    cmd_train->add_option("--step", wcfg.step, "Sliding-window stride")->capture_default_str();
    cmd_train->add_flag("--segmented", wcfg.segmented, "Keep windows inside fixed segments");
    cmd_train->add_option("--segment-len", wcfg.segment_len, "Frames per segment")
        ->capture_default_str();
    cmd_train->add_option("--hidden", dims.hidden, "Hidden width")->capture_default_str();
    cmd_train->add_option("--blocks", dims.blocks, "TSMixer blocks")->capture_default_str();
    cmd_train->add_option("--lr", tcfg.learning_rate, "Learning rate")->capture_default_str();
    cmd_train->add_option("--batch", tcfg.batch_size, "Batch size")->capture_default_str();
    cmd_train->add_option("--epochs", tcfg.max_epochs, "Max epochs")->capture_default_str();
    cmd_train->add_option("--patience", tcfg.patience, "Early-stop patience")->capture_default_str();
    cmd_train->add_option("--seed", tcfg.seed, "Global seed")->capture_default_str();
    cmd_train->add_option("--loss", train_loss, "Training loss")
        ->check(CLI::IsMember({"spherical_mse", "angular"}))->capture_default_str();
    cmd_train->add_option("--clip", tcfg.clip_norm, "Global-norm gradient clip (<=0 disables)")
        ->capture_default_str();
    cmd_train->add_option("--val-ratio", val_ratio, "Train fraction of the split")
        ->capture_default_str();
    cmd_train->add_option("--split", split_mode, "Split granularity")
        ->check(CLI::IsMember({"sample", "session"}))->capture_default_str();
    cmd_train->add_option("--exclude", exclude, "Session ids held out entirely (test videos)");
    sal.attach(cmd_train);

    // ---- eval ----
    auto* cmd_eval = app.add_subcommand("eval", "Evaluate a checkpoint against the baselines");
    std::string eval_ckpt, eval_data, eval_out = "report";
    bool baselines_only = false;
    cmd_eval->add_option("--checkpoint", eval_ckpt, "Model checkpoint (omit with --baselines-only)");
    cmd_eval->add_option("--data", eval_data, "Directory of session .csv files")->required();
    cmd_eval->add_option("--out", eval_out, "Report directory")->capture_default_str();
    cmd_eval->add_flag("--baselines-only", baselines_only, "Report without model rows");
    cmd_eval->add_option("--p", wcfg.past, "Past frames (baselines-only)")->capture_default_str();
    cmd_eval->add_option("--q", wcfg.horizon, "Future steps (baselines-only)")
        ->capture_default_str();
    cmd_eval->add_option("--step", wcfg.step, "Sliding-window stride")->capture_default_str();
    cmd_eval->add_option("--exclude", exclude, "Session ids to skip");
    sal.attach(cmd_eval);

    // ---- predict ----
    auto* cmd_predict = app.add_subcommand("predict", "Emit q x 2 offsets per anchor frame");
    std::string pred_ckpt, pred_session, stream_id = "stream";
    int pred_frame = -1;
    bool stream = false;
    cmd_predict->add_option("--checkpoint", pred_ckpt, "Model checkpoint")->required();
    cmd_predict->add_option("--session", pred_session, "Session .csv file");
    cmd_predict->add_option("--frame", pred_frame, "Single anchor frame (default: all anchors)");
    cmd_predict->add_flag("--stream", stream, "Read session rows from stdin");
    cmd_predict->add_option("--session-id", stream_id, "Session id in streaming mode")
        ->capture_default_str();
    cmd_predict->add_option("--step", wcfg.step, "Anchor stride in batch mode")
        ->capture_default_str();
    sal.attach(cmd_predict);

    // ---- bench ----
    auto* cmd_bench = app.add_subcommand("bench", "Per-stage latency measurement");
    std::string bench_ckpt;
    int bench_reps = 100;
    cmd_bench->add_option("--checkpoint", bench_ckpt, "Model checkpoint (default: fresh LSTM)");
    cmd_bench->add_option("--reps", bench_reps, "Repetitions per stage")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 1;  // help/version exit 0, any parse failure is a usage error
    }

    if (*cmd_import) {
        ImportStats stats = import_ehtask(import_src, import_out, import_fps);
        std::ofstream log(fs::path(import_out) / "import.log");
        log << "files=" << stats.files << "\nrows_read=" << stats.rows_read
            << "\nrows_skipped=" << stats.rows_skipped << "\n";
        for (const auto& s : stats.sessions) log << "session=" << s << "\n";
        std::cout << "imported " << stats.files << " sessions (" << stats.rows_read
                  << " rows read, " << stats.rows_skipped << " skipped) -> " << import_out << "\n";
        return 0;
    }

    if (*cmd_train) {
        auto provider = sal.make_provider();
        PoolSpec pool = sal.pool();
        dims.input_dim = pool.feature_dim() + 4;
        dims.past = wcfg.past;
        dims.horizon = wcfg.horizon;
        tcfg.loss = train_loss == "angular" ? LossKind::Angular : LossKind::SphericalMse;

        auto sessions = load_sessions(train_data, exclude);
        auto samples = collect_samples(sessions, wcfg, *provider, pool);
        auto [trainset, valset] = train_val_split(
            std::move(samples), val_ratio, tcfg.seed,
            split_mode == "session" ? SplitGranularity::Session : SplitGranularity::Sample);
        std::cout << "train=" << trainset.size() << " val=" << valset.size() << " samples\n";

        ParamSetF model = init_params<float>(arch_from_name(train_arch), dims, tcfg.seed);
        auto [best, history] =
            train(trainset, valset, std::move(model), tcfg,
                  [](int epoch, const EpochStats& e) {
                      std::cout << "epoch " << epoch << " train=" << e.train_loss
                                << " val=" << e.val_loss << "\n";
                  });

        fs::create_directories(train_out);
        write_config_echo((fs::path(train_out) / "config.txt").string(),
                          {{"arch", train_arch},
                           {"p", std::to_string(wcfg.past)},
                           {"q", std::to_string(wcfg.horizon)},
                           {"step", std::to_string(wcfg.step)},
                           {"segmented", wcfg.segmented ? "1" : "0"},
                           {"segment_len", std::to_string(wcfg.segment_len)},
                           {"hidden", std::to_string(dims.hidden)},
                           {"blocks", std::to_string(dims.blocks)},
                           {"pool", std::to_string(pool.grid_rows) + "x" +
                                        std::to_string(pool.grid_cols)},
                           {"saliency", sal.kind},
                           {"lr", std::to_string(tcfg.learning_rate)},
                           {"batch", std::to_string(tcfg.batch_size)},
                           {"epochs", std::to_string(tcfg.max_epochs)},
                           {"patience", std::to_string(tcfg.patience)},
                           {"loss", train_loss},
                           {"clip", std::to_string(tcfg.clip_norm)},
                           {"val_ratio", std::to_string(val_ratio)},
                           {"split", split_mode},
                           {"seed", std::to_string(tcfg.seed)}});
        save_history_csv(history, (fs::path(train_out) / "history.csv").string());
        save_checkpoint(best, (fs::path(train_out) / "best.ckpt").string());
        std::cout << "best epoch " << history.best_epoch << ", val loss "
                  << history.epochs[history.best_epoch].val_loss << "\n"
                  << "run directory: " << train_out << "\n";
        return 0;
    }

    if (*cmd_eval) {
        auto provider = sal.make_provider();
        PoolSpec pool = sal.pool();
        std::optional<ParamSetF> params;
        if (!baselines_only) {
            if (eval_ckpt.empty())
                throw std::invalid_argument("eval: --checkpoint required unless --baselines-only");
            params = load_checkpoint(eval_ckpt);
            wcfg.past = params->dims.past;
            wcfg.horizon = params->dims.horizon;
            if (pool.feature_dim() + 4 != params->dims.input_dim)
                throw ParseError("eval: pooling grid yields input dim " +
                                 std::to_string(pool.feature_dim() + 4) + " but checkpoint expects " +
                                 std::to_string(params->dims.input_dim));
        }
        auto sessions = load_sessions(eval_data, exclude);
        auto testset = collect_samples(sessions, wcfg, *provider, pool);

        ModelEval center = evaluate("center_hmd", center_hmd_baseline, testset);
        std::vector<ModelEval> others;
        others.push_back(evaluate("mean_hmd", mean_hmd_baseline, testset));
        if (params)
            others.push_back(evaluate(arch_name(params->arch), make_model_predictor(*params),
                                      testset));
        EvalReport report = build_report(center, std::move(others));
        export_report(report, eval_out);
        for (const ModelEval& m : report.models)
            std::cout << m.name << " spherical RMSE " << m.combined_rmse << "\n";
        std::cout << "report directory: " << eval_out << "\n";
        return 0;
    }

    if (*cmd_predict) {
        ParamSetF params = load_checkpoint(pred_ckpt);
        wcfg.past = params.dims.past;
        wcfg.horizon = params.dims.horizon;
        auto provider = sal.make_provider();
        PoolSpec pool = sal.pool();
        if (pool.feature_dim() + 4 != params.dims.input_dim)
            throw ParseError("predict: pooling grid does not match checkpoint input dim");

        auto emit = [&](int anchor, const WindowSample& sample) {
            MatF pred = predict(params, fused_window(sample));
            for (int t = 0; t < pred.rows; ++t)
                std::cout << anchor << "," << (t + 1) << "," << pred.at(t, 0) << ","
                          << pred.at(t, 1) << "\n";
        };

        std::cout << "anchor,step,d_az,d_el\n";
        if (stream) {
            Session session;
            session.id = stream_id;
            std::string line;
            while (std::getline(std::cin, line)) {
                if (line.empty() || line.rfind("frame,", 0) == 0) continue;
                std::istringstream iss(line);
                std::string cell;
                std::vector<double> vals;
                while (std::getline(iss, cell, ',') && vals.size() < 3)
                    if (!cell.empty()) vals.push_back(std::stod(cell));
                if (vals.size() < 3) continue;
                FrameRecord rec;
                rec.index = session.frame_count();
                rec.hmd = {wrap_angle(vals[1]), clamp_elevation(vals[2])};
                session.frames.push_back(rec);
                int anchor = session.frame_count() - 1;
                if (anchor >= wcfg.past - 1)
                    emit(anchor, build_input_window(session, anchor, wcfg, *provider, pool));
            }
            return 0;
        }
        if (pred_session.empty())
            throw std::invalid_argument("predict: --session required without --stream");
        Session session = load_session(pred_session);
        int T = session.frame_count();
        if (pred_frame >= 0) {
            emit(pred_frame, build_input_window(session, pred_frame, wcfg, *provider, pool));
        } else {
            for (int f = wcfg.past - 1; f < T; f += wcfg.step)
                emit(f, build_input_window(session, f, wcfg, *provider, pool));
        }
        return 0;
    }

    if (*cmd_bench) {
        ParamSetF params = bench_ckpt.empty()
                               ? init_params<float>(Arch::Lstm, ModelDims{}, 0)
                               : load_checkpoint(bench_ckpt);
        auto timings = benchmark_pipeline(params, bench_reps);
        std::cout << format_bench(timings);
        return 0;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 3;
    } catch (const ParseError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 1;
    } catch (const std::domain_error& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
