#include "gazecast/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

#include "gazecast/errors.hpp"

namespace fs = std::filesystem;

namespace gazecast {

namespace {

constexpr const char* kHeader = "frame,hmd_az,hmd_el,gaze_az,gaze_el";

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur.push_back(ch);
        }
    }
    out.push_back(cur);
    return out;
}

std::optional<double> parse_number(const std::string& s) {
    if (s.empty()) return std::nullopt;
    try {
        size_t pos = 0;
        double v = std::stod(s, &pos);
        if (pos != s.size()) return std::nullopt;
        return v;
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

void check_angle(double v, double lo, double hi, const std::string& what, int row) {
    if (!std::isfinite(v) || v < lo || v > hi)
        throw ParseError("session row " + std::to_string(row) + ": " + what + " out of range [" +
                         std::to_string(lo) + "," + std::to_string(hi) + "]: " + std::to_string(v));
}

}  // namespace

void WindowConfig::validate() const {
    if (past < 1 || horizon < 1 || step < 1)
        throw std::domain_error("WindowConfig: p, q, step must be >= 1");
    if (segment_len < past + horizon)
        throw std::domain_error("WindowConfig: segment_len must be >= p+q");
}

Session load_session(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ParseError("load_session: cannot open " + path);
    Session s;
    s.id = fs::path(path).stem().string();
    std::string line;
    if (!std::getline(is, line)) throw ParseError("load_session: empty file " + path);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kHeader)
        throw ParseError("load_session: bad header in " + path + " (expected '" +
                         std::string(kHeader) + "')");
    int row = 0;
    while (std::getline(is, line)) {
        if (line.empty() || line == "\r") continue;
        auto cells = split_csv(line);
        if (cells.size() != 5)
            throw ParseError("session row " + std::to_string(row) + ": expected 5 columns, got " +
                             std::to_string(cells.size()));
        auto frame = parse_number(cells[0]);
        auto haz = parse_number(cells[1]);
        auto hel = parse_number(cells[2]);
        if (!frame || !haz || !hel)
            throw ParseError("session row " + std::to_string(row) + ": missing required column");
        if (static_cast<int>(*frame) != row)
            throw ParseError("session row " + std::to_string(row) +
                             ": frame indices must be consecutive from 0, got " + cells[0]);
        check_angle(*haz, -180, 180, "hmd_az", row);
        check_angle(*hel, -90, 90, "hmd_el", row);
        FrameRecord rec;
        rec.index = row;
        rec.hmd = {*haz, *hel};
        bool has_gaze_az = !cells[3].empty();
        bool has_gaze_el = !cells[4].empty();
        if (has_gaze_az != has_gaze_el)
            throw ParseError("session row " + std::to_string(row) +
                             ": gaze columns must be both present or both empty");
        if (has_gaze_az) {
            auto gaz = parse_number(cells[3]);
            auto gel = parse_number(cells[4]);
            if (!gaz || !gel)
                throw ParseError("session row " + std::to_string(row) + ": unparseable gaze value");
            check_angle(*gaz, -180, 180, "gaze_az", row);
            check_angle(*gel, -90, 90, "gaze_el", row);
            rec.gaze = HeadPose{*gaz, *gel};
        }
        s.frames.push_back(rec);
        ++row;
    }
    return s;
}

void save_session(const Session& session, const std::string& path) {
    fs::path p(path);
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream os(path);
    if (!os) throw ParseError("save_session: cannot open " + path);
    os << kHeader << "\n";
    os.precision(10);
    for (const FrameRecord& f : session.frames) {
        os << f.index << "," << f.hmd.azimuth_deg << "," << f.hmd.elevation_deg << ",";
        if (f.gaze) os << f.gaze->azimuth_deg << "," << f.gaze->elevation_deg;
        else os << ",";
        os << "\n";
    }
}

std::vector<int> valid_indices(int frame_count, const WindowConfig& cfg) {
    cfg.validate();
    std::vector<int> out;
    auto emit_range = [&](int begin, int end_count) {
        // anchors begin+p-1 .. begin+end_count-q-1, stride step (0-based)
        int first = begin + cfg.past - 1;
        int last = begin + end_count - cfg.horizon - 1;
        for (int f = first; f <= last; f += cfg.step) out.push_back(f);
    };
    if (!cfg.segmented) {
        if (frame_count >= cfg.past + cfg.horizon) emit_range(0, frame_count);
        return out;
    }
    for (int s = 0; s < frame_count; s += cfg.segment_len) {
        int len = std::min(cfg.segment_len, frame_count - s);
        if (len >= cfg.past + cfg.horizon) emit_range(s, len);
    }
    return out;
}

namespace {

WindowSample fill_inputs(const Session& session, int anchor, const WindowConfig& cfg,
                         const SaliencyProvider& provider, const PoolSpec& pool) {
    double dt = 1.0 / session.fps;
    int F = pool.feature_dim();
    WindowSample sample;
    sample.session_id = session.id;
    sample.anchor = anchor;
    sample.visual = MatD(cfg.past, F);
    sample.motion = MatD(cfg.past, 4);
    sample.target = MatD(cfg.horizon, 2);
    sample.past_hmd.reserve(cfg.past);

    for (int i = 0; i < cfg.past; ++i) {
        int t = anchor - cfg.past + 1 + i;
        const FrameRecord& fr = session.frames[t];
        sample.past_hmd.push_back(fr.hmd);

        SaliencyMap map = provider.map_for(session.id, t);
        std::vector<double> feat = pool_flatten(map, pool);
        for (int j = 0; j < F; ++j) sample.visual.at(i, j) = feat[j];

        if (t - 1 >= 0) {
            MotionFeatures m = motion_features(fr.hmd, session.frames[t - 1].hmd, dt);
            sample.motion.at(i, 0) = m.w_az;
            sample.motion.at(i, 1) = m.w_el;
            sample.motion.at(i, 2) = m.d_az;
            sample.motion.at(i, 3) = m.d_el;
        }  // first frame of the session: zeros
    }
    sample.ref_hmd = session.frames[anchor].hmd;
    return sample;
}

void check_anchor(const Session& session, int anchor, const WindowConfig& cfg) {
    cfg.validate();
    int T = session.frame_count();
    if (anchor < cfg.past - 1 || anchor > T - cfg.horizon - 1)
        throw std::domain_error("build_sample: anchor " + std::to_string(anchor) +
                                " outside valid range for T=" + std::to_string(T));
}

}  // namespace

std::optional<WindowSample> build_sample(const Session& session, int anchor,
                                         const WindowConfig& cfg,
                                         const SaliencyProvider& provider,
                                         const PoolSpec& pool) {
    check_anchor(session, anchor, cfg);
    for (int t = 1; t <= cfg.horizon; ++t)
        if (!session.frames[anchor + t].gaze) return std::nullopt;
    WindowSample sample = fill_inputs(session, anchor, cfg, provider, pool);
    for (int t = 1; t <= cfg.horizon; ++t) {
        GazeOffset off = gaze_offset(*session.frames[anchor + t].gaze, sample.ref_hmd);
        sample.target.at(t - 1, 0) = off.d_az_deg;
        sample.target.at(t - 1, 1) = off.d_el_deg;
    }
    return sample;
}

WindowSample build_input_window(const Session& session, int anchor, const WindowConfig& cfg,
                                const SaliencyProvider& provider, const PoolSpec& pool) {
    cfg.validate();
    int T = session.frame_count();
    if (anchor < cfg.past - 1 || anchor >= T)
        throw std::domain_error("build_input_window: anchor " + std::to_string(anchor) +
                                " needs at least p past frames");
    return fill_inputs(session, anchor, cfg, provider, pool);
}

std::vector<WindowSample> build_samples(const Session& session, const WindowConfig& cfg,
                                        const SaliencyProvider& provider, const PoolSpec& pool,
                                        const std::function<void(const std::string&)>& warn) {
    std::vector<WindowSample> out;
    for (int f : valid_indices(session.frame_count(), cfg)) {
        auto s = build_sample(session, f, cfg, provider, pool);
        if (s) {
            out.push_back(std::move(*s));
        } else if (warn) {
            warn("session '" + session.id + "': skipped anchor " + std::to_string(f) +
                 " (missing gaze in horizon)");
        }
    }
    return out;
}

std::pair<std::vector<WindowSample>, std::vector<WindowSample>> train_val_split(
    std::vector<WindowSample> samples, double ratio, uint64_t seed,
    SplitGranularity granularity) {
    if (samples.empty()) throw std::domain_error("train_val_split: empty sample list");
    if (!(ratio > 0.0 && ratio < 1.0))
        throw std::domain_error("train_val_split: ratio must be in (0,1)");
    std::mt19937_64 rng(seed);
    size_t n_train = static_cast<size_t>(std::floor(samples.size() * ratio));

    std::vector<WindowSample> train, val;
    if (granularity == SplitGranularity::Sample) {
        std::shuffle(samples.begin(), samples.end(), rng);
        train.assign(std::make_move_iterator(samples.begin()),
                     std::make_move_iterator(samples.begin() + n_train));
        val.assign(std::make_move_iterator(samples.begin() + n_train),
                   std::make_move_iterator(samples.end()));
    } else {
        std::vector<std::string> ids;
        for (const auto& s : samples)
            if (std::find(ids.begin(), ids.end(), s.session_id) == ids.end())
                ids.push_back(s.session_id);
        std::shuffle(ids.begin(), ids.end(), rng);
        std::vector<std::string> train_ids;
        size_t count = 0;
        for (const auto& id : ids) {
            if (count >= n_train) break;
            train_ids.push_back(id);
            count += std::count_if(samples.begin(), samples.end(),
                                   [&](const WindowSample& s) { return s.session_id == id; });
        }
        for (auto& s : samples) {
            bool in_train = std::find(train_ids.begin(), train_ids.end(), s.session_id) !=
                            train_ids.end();
            (in_train ? train : val).push_back(std::move(s));
        }
    }
    return {std::move(train), std::move(val)};
}

std::vector<Minibatch> make_batches(const std::vector<WindowSample>& samples, int batch_size,
                                    bool shuffle, uint64_t seed) {
    if (batch_size < 1) throw std::domain_error("make_batches: batch size must be >= 1");
    std::vector<size_t> order(samples.size());
    std::iota(order.begin(), order.end(), size_t{0});
    if (shuffle) {
        std::mt19937_64 rng(seed);
        std::shuffle(order.begin(), order.end(), rng);
    }
    std::vector<Minibatch> out;
    for (size_t i = 0; i < order.size(); i += batch_size) {
        Minibatch b;
        for (size_t j = i; j < std::min(order.size(), i + batch_size); ++j)
            b.samples.push_back(&samples[order[j]]);
        out.push_back(std::move(b));
    }
    return out;
}

MatF fused_window(const WindowSample& sample) {
    int p = sample.visual.rows;
    int F = sample.visual.cols;
    MatF out(p, F + 4);
    for (int i = 0; i < p; ++i) {
        for (int j = 0; j < F; ++j) out.at(i, j) = static_cast<float>(sample.visual.at(i, j));
        for (int j = 0; j < 4; ++j) out.at(i, F + j) = static_cast<float>(sample.motion.at(i, j));
    }
    return out;
}

namespace {

std::vector<std::string> split_ws_or_comma(const std::string& line) {
    std::string norm = line;
    std::replace(norm.begin(), norm.end(), ',', ' ');
    std::istringstream iss(norm);
    std::vector<std::string> out;
    std::string tok;
    while (iss >> tok) out.push_back(tok);
    return out;
}

constexpr double kRad2Deg = 180.0 / M_PI;

std::optional<HeadPose> dir_to_pose(double x, double y, double z) {
    double n = std::sqrt(x * x + y * y + z * z);
    if (!(n > 0) || !std::isfinite(n)) return std::nullopt;
    x /= n;
    y /= n;
    z /= n;
    return HeadPose{std::atan2(x, z) * kRad2Deg, std::asin(std::clamp(y, -1.0, 1.0)) * kRad2Deg};
}

bool angles_ok(double az, double el) {
    return std::isfinite(az) && std::isfinite(el) && az >= -180 && az <= 180 && el >= -90 &&
           el <= 90;
}

}  // namespace

ImportStats import_ehtask(const std::string& src_dir, const std::string& out_dir, double fps) {
    if (!fs::is_directory(src_dir))
        throw ParseError("import: source directory not found: " + src_dir);
    std::vector<fs::path> files;
    for (const auto& e : fs::recursive_directory_iterator(src_dir)) {
        if (!e.is_regular_file()) continue;
        auto ext = e.path().extension().string();
        if (ext == ".txt" || ext == ".csv" || ext == ".log") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty())
        throw ParseError("import: no .txt/.csv/.log files under " + src_dir +
                         " (expected per-user recording logs)");

    ImportStats stats;
    for (const fs::path& file : files) {
        std::ifstream is(file);
        if (!is) continue;
        Session session;
        std::string rel = fs::relative(file, src_dir).replace_extension("").string();
        std::replace(rel.begin(), rel.end(), '/', '_');
        std::replace(rel.begin(), rel.end(), '\\', '_');
        session.id = rel;
        session.fps = fps;

        std::string line;
        while (std::getline(is, line)) {
            if (line.empty() || line[0] == '#') continue;
            auto toks = split_ws_or_comma(line);
            std::vector<double> nums;
            bool numeric = true;
            for (const auto& t : toks) {
                auto v = parse_number(t);
                if (!v) {
                    numeric = false;
                    break;
                }
                nums.push_back(*v);
            }
            ++stats.rows_read;
            std::optional<HeadPose> hmd, gaze;
            if (numeric && nums.size() == 6) {
                gaze = dir_to_pose(nums[0], nums[1], nums[2]);
                hmd = dir_to_pose(nums[3], nums[4], nums[5]);
            } else if (numeric && (nums.size() == 4 || nums.size() == 5)) {
                size_t o = nums.size() - 4;
                if (angles_ok(nums[o], nums[o + 1]) && angles_ok(nums[o + 2], nums[o + 3])) {
                    hmd = HeadPose{nums[o], nums[o + 1]};
                    gaze = HeadPose{nums[o + 2], nums[o + 3]};
                }
            }
            if (!hmd || !gaze) {
                ++stats.rows_skipped;
                continue;
            }
            FrameRecord rec;
            rec.index = session.frame_count();
            rec.hmd = *hmd;
            rec.gaze = gaze;
            session.frames.push_back(rec);
        }
        if (session.frames.empty()) continue;
        save_session(session, (fs::path(out_dir) / (session.id + ".csv")).string());
        stats.sessions.push_back(session.id);
        ++stats.files;
    }
    if (stats.files == 0) throw ParseError("import: no usable rows found under " + src_dir);
    return stats;
}

}  // namespace gazecast
