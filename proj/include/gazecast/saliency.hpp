#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace gazecast {

/// Row-major image with 1 or 3 channels, intensities in [0,1].
/// Channel-interleaved: pixel (r,c) occupies channels consecutive values.
struct Frame {
    int width = 0;
    int height = 0;
    int channels = 1;
    std::vector<float> pixels;

    float at(int row, int col, int ch = 0) const {
        return pixels[(static_cast<size_t>(row) * width + col) * channels + ch];
    }
    float& at(int row, int col, int ch = 0) {
        return pixels[(static_cast<size_t>(row) * width + col) * channels + ch];
    }
    bool empty() const { return width == 0 || height == 0; }
};

/// Single-channel attention heatmap in [0,1], row-major.
struct SaliencyMap {
    int width = 0;
    int height = 0;
    std::vector<float> values;

    float at(int row, int col) const { return values[static_cast<size_t>(row) * width + col]; }
    float& at(int row, int col) { return values[static_cast<size_t>(row) * width + col]; }
};

struct PoolSpec {
    int grid_rows = 9;
    int grid_cols = 12;
    enum class Mode { Mean, Max };
    Mode mode = Mode::Mean;

    int feature_dim() const { return grid_rows * grid_cols; }
};

/// Bilinear resize; values stay in [0,1]. Default target is 384x288.
Frame preprocess(const Frame& frame, int target_width, int target_height);

/// Min-max normalize in place so min -> 0 and max -> 1; a constant map
/// becomes all zeros.
void normalize_map(SaliencyMap& map);

Frame to_grayscale(const Frame& frame);

/// Isotropic Gaussian centered at the frame midpoint, sigma = 0.25*min(W,H).
SaliencyMap center_bias_map(int width, int height);

/// Spectral-residual saliency: log-amplitude residual in the frequency
/// domain, squared magnitude of the inverse transform, smoothed, normalized.
/// Computed at a reduced internal resolution and resized back.
SaliencyMap spectral_residual(const Frame& frame);

/// Area-weighted pooling onto a grid_rows x grid_cols grid, row-major flatten.
std::vector<double> pool_flatten(const SaliencyMap& map, const PoolSpec& spec);

/// SMAP file: magic "SMAP", then u32 LE version(=1), width, height,
/// then width*height f32 LE values, row-major.
void write_smap(const SaliencyMap& map, const std::string& path);
SaliencyMap read_smap(const std::string& path);

/// Per-(session, frame) saliency source. Stateless after construction.
class SaliencyProvider {
public:
    virtual ~SaliencyProvider() = default;
    virtual SaliencyMap map_for(const std::string& session_id, int frame_index) const = 0;
    virtual std::string name() const = 0;
};

/// Reads `<root>/<session_id>/<frame_index>.smap` (the precomputed-UniSal path).
std::unique_ptr<SaliencyProvider> make_precomputed_provider(std::string root_dir);

/// Content-free center Gaussian at a fixed map size.
std::unique_ptr<SaliencyProvider> make_center_bias_provider(int width, int height);

/// Spectral residual over frames supplied by a callback.
std::unique_ptr<SaliencyProvider> make_spectral_residual_provider(
    std::function<Frame(const std::string&, int)> frame_source);

/// Arbitrary map function; used for synthetic corpora and tests.
std::unique_ptr<SaliencyProvider> make_function_provider(
    std::string name, std::function<SaliencyMap(const std::string&, int)> fn);

}  // namespace gazecast
