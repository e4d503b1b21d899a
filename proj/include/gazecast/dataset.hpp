#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "gazecast/geometry.hpp"
#include "gazecast/matrix.hpp"
#include "gazecast/saliency.hpp"

namespace gazecast {

struct FrameRecord {
    int index = 0;
    HeadPose hmd;
    std::optional<HeadPose> gaze;  // absent at inference time
};

struct Session {
    std::string id;
    double fps = 30.0;
    std::vector<FrameRecord> frames;

    int frame_count() const { return static_cast<int>(frames.size()); }
};

/// Sliding-window layout: p past frames of context, q future steps,
/// windows advanced by `step`. When `segmented` is set, windows never
/// cross `segment_len` boundaries (5-second segments at 30 Hz by default).
struct WindowConfig {
    int past = 15;       // p
    int horizon = 10;    // q
    int step = 5;
    int segment_len = 150;
    bool segmented = false;

    void validate() const;
};

/// One training/inference unit anchored at frame f: pooled saliency features
/// and motion features for the p input frames, and the q future gaze offsets
/// relative to the HMD pose at f. `past_hmd` retains the raw input-window
/// poses (needed by the mean-HMD baseline); `ref_hmd` is the pose at f.
struct WindowSample {
    std::string session_id;
    int anchor = 0;                 // 0-based frame index f
    MatD visual;                    // p x F
    MatD motion;                    // p x 4
    MatD target;                    // q x 2 (az, el)
    std::vector<HeadPose> past_hmd; // length p
    HeadPose ref_hmd;
};

struct Minibatch {
    std::vector<const WindowSample*> samples;
};

/// Canonical session file: UTF-8 CSV with header
/// `frame,hmd_az,hmd_el,gaze_az,gaze_el`, one row per frame, angles in
/// degrees; gaze columns may be empty. Session id is the file stem.
Session load_session(const std::string& path);
void save_session(const Session& session, const std::string& path);

/// Valid window anchors, 0-based: {f | p-1 <= f <= T-q-1} with the
/// configured stride. Honors segmentation when enabled. Returns an
/// empty list when T < p+q.
std::vector<int> valid_indices(int frame_count, const WindowConfig& cfg);

/// Builds the sample anchored at f, or nullopt when ground-truth gaze is
/// missing anywhere in the horizon (the caller logs the skip).
std::optional<WindowSample> build_sample(const Session& session, int anchor,
                                         const WindowConfig& cfg,
                                         const SaliencyProvider& provider,
                                         const PoolSpec& pool);

/// Inference-time variant: same inputs, no ground truth required; the
/// target matrix is zero-filled.
WindowSample build_input_window(const Session& session, int anchor, const WindowConfig& cfg,
                                const SaliencyProvider& provider, const PoolSpec& pool);

/// All valid samples of a session, in anchor order; `warn` (may be null)
/// receives a message per skipped anchor.
std::vector<WindowSample> build_samples(const Session& session, const WindowConfig& cfg,
                                        const SaliencyProvider& provider, const PoolSpec& pool,
                                        const std::function<void(const std::string&)>& warn = {});

enum class SplitGranularity { Sample, Session };

/// Deterministic seeded shuffle then split; train gets floor(n * ratio).
/// Session granularity keeps all samples of a session on one side.
std::pair<std::vector<WindowSample>, std::vector<WindowSample>> train_val_split(
    std::vector<WindowSample> samples, double ratio, uint64_t seed,
    SplitGranularity granularity = SplitGranularity::Sample);

/// Every sample appears exactly once; the final short batch is retained.
std::vector<Minibatch> make_batches(const std::vector<WindowSample>& samples, int batch_size,
                                    bool shuffle, uint64_t seed);

/// Per-row [visual | motion] fusion, p x (F+4), 32-bit for model input.
MatF fused_window(const WindowSample& sample);

struct ImportStats {
    int files = 0;
    int rows_read = 0;
    int rows_skipped = 0;
    std::vector<std::string> sessions;
};

/// Converts a directory tree of recorded head/gaze logs into canonical
/// session files. Accepted row shapes (whitespace- or comma-separated,
/// '#'-prefixed comment lines ignored):
///   frame, hmd_az, hmd_el, gaze_az, gaze_el      (angles in degrees)
///   hmd_az, hmd_el, gaze_az, gaze_el             (frame = line order)
///   gx, gy, gz, hx, hy, hz                       (unit direction vectors;
///                                                 az = atan2(x, z), el = asin(y))
/// Malformed rows are skipped and counted. One session per input file,
/// named from its path relative to the source root.
ImportStats import_ehtask(const std::string& src_dir, const std::string& out_dir, double fps = 30.0);

}  // namespace gazecast
