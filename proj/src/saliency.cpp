#include "gazecast/saliency.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "gazecast/errors.hpp"

namespace gazecast {

namespace {

float bilinear_sample(const Frame& f, float x, float y, int ch) {
    x = std::clamp(x, 0.0f, static_cast<float>(f.width - 1));
    y = std::clamp(y, 0.0f, static_cast<float>(f.height - 1));
    int x0 = static_cast<int>(std::floor(x));
    int y0 = static_cast<int>(std::floor(y));
    int x1 = std::min(x0 + 1, f.width - 1);
    int y1 = std::min(y0 + 1, f.height - 1);
    float fx = x - x0, fy = y - y0;
    float top = f.at(y0, x0, ch) * (1 - fx) + f.at(y0, x1, ch) * fx;
    float bot = f.at(y1, x0, ch) * (1 - fx) + f.at(y1, x1, ch) * fx;
    return top * (1 - fy) + bot * fy;
}

// Naive complex DFT along one axis; internal resolutions are small.
void dft_1d(std::vector<std::complex<double>>& line, bool inverse) {
    int n = static_cast<int>(line.size());
    std::vector<std::complex<double>> out(n);
    double sign = inverse ? 1.0 : -1.0;
    for (int k = 0; k < n; ++k) {
        std::complex<double> acc{0, 0};
        for (int t = 0; t < n; ++t) {
            // reduce k*t mod n before the trig call so the angle stays small
            double ang = sign * 2.0 * M_PI * ((k * t) % n) / n;
            acc += line[t] * std::complex<double>(std::cos(ang), std::sin(ang));
        }
        out[k] = inverse ? acc / static_cast<double>(n) : acc;
    }
    line = std::move(out);
}

void dft_2d(std::vector<std::complex<double>>& grid, int w, int h, bool inverse) {
    std::vector<std::complex<double>> line;
    for (int r = 0; r < h; ++r) {
        line.assign(grid.begin() + static_cast<size_t>(r) * w,
                    grid.begin() + static_cast<size_t>(r + 1) * w);
        dft_1d(line, inverse);
        std::copy(line.begin(), line.end(), grid.begin() + static_cast<size_t>(r) * w);
    }
    line.resize(h);
    for (int c = 0; c < w; ++c) {
        for (int r = 0; r < h; ++r) line[r] = grid[static_cast<size_t>(r) * w + c];
        dft_1d(line, inverse);
        for (int r = 0; r < h; ++r) grid[static_cast<size_t>(r) * w + c] = line[r];
    }
}

void box3_filter(std::vector<float>& v, int w, int h) {
    std::vector<float> out(v.size());
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) {
            float acc = 0;
            for (int dr = -1; dr <= 1; ++dr)
                for (int dc = -1; dc <= 1; ++dc) {
                    int rr = std::clamp(r + dr, 0, h - 1);
                    int cc = std::clamp(c + dc, 0, w - 1);
                    acc += v[static_cast<size_t>(rr) * w + cc];
                }
            out[static_cast<size_t>(r) * w + c] = acc / 9.0f;
        }
    v = std::move(out);
}

void write_u32_le(std::ofstream& os, uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>((v >> 8) & 0xff),
                          static_cast<unsigned char>((v >> 16) & 0xff),
                          static_cast<unsigned char>((v >> 24) & 0xff)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

uint32_t read_u32_le(std::ifstream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
           (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}

void write_f32_le(std::ofstream& os, float v) {
    uint32_t u;
    std::memcpy(&u, &v, 4);
    write_u32_le(os, u);
}

float read_f32_le(std::ifstream& is) {
    uint32_t u = read_u32_le(is);
    float v;
    std::memcpy(&v, &u, 4);
    return v;
}

}  // namespace

Frame preprocess(const Frame& frame, int target_width, int target_height) {
    if (frame.empty()) throw std::domain_error("preprocess: empty frame");
    if (target_width <= 0 || target_height <= 0)
        throw std::domain_error("preprocess: target dimensions must be positive");
    Frame out;
    out.width = target_width;
    out.height = target_height;
    out.channels = frame.channels;
    out.pixels.resize(static_cast<size_t>(target_width) * target_height * frame.channels);
    float sx = static_cast<float>(frame.width) / target_width;
    float sy = static_cast<float>(frame.height) / target_height;
    for (int r = 0; r < target_height; ++r)
        for (int c = 0; c < target_width; ++c) {
            float x = (c + 0.5f) * sx - 0.5f;
            float y = (r + 0.5f) * sy - 0.5f;
            for (int ch = 0; ch < frame.channels; ++ch)
                out.at(r, c, ch) = std::clamp(bilinear_sample(frame, x, y, ch), 0.0f, 1.0f);
        }
    return out;
}

void normalize_map(SaliencyMap& map) {
    if (map.values.empty()) return;
    auto [mn_it, mx_it] = std::minmax_element(map.values.begin(), map.values.end());
    float mn = *mn_it, mx = *mx_it;
    if (mx - mn <= 0) {
        std::fill(map.values.begin(), map.values.end(), 0.0f);
        return;
    }
    float inv = 1.0f / (mx - mn);
    for (float& v : map.values) v = (v - mn) * inv;
}

Frame to_grayscale(const Frame& frame) {
    if (frame.channels == 1) return frame;
    Frame out;
    out.width = frame.width;
    out.height = frame.height;
    out.channels = 1;
    out.pixels.resize(static_cast<size_t>(frame.width) * frame.height);
    for (int r = 0; r < frame.height; ++r)
        for (int c = 0; c < frame.width; ++c)
            out.at(r, c) = 0.299f * frame.at(r, c, 0) + 0.587f * frame.at(r, c, 1) +
                           0.114f * frame.at(r, c, 2);
    return out;
}

SaliencyMap center_bias_map(int width, int height) {
    if (width <= 0 || height <= 0)
        throw std::domain_error("center_bias_map: dimensions must be positive");
    SaliencyMap map;
    map.width = width;
    map.height = height;
    map.values.resize(static_cast<size_t>(width) * height);
    float cx = (width - 1) / 2.0f;
    float cy = (height - 1) / 2.0f;
    float sigma = 0.25f * static_cast<float>(std::min(width, height));
    float inv2s2 = 1.0f / (2.0f * sigma * sigma);
    for (int r = 0; r < height; ++r)
        for (int c = 0; c < width; ++c) {
            float dx = c - cx, dy = r - cy;
            map.at(r, c) = std::exp(-(dx * dx + dy * dy) * inv2s2);
        }
    normalize_map(map);
    return map;
}

SaliencyMap spectral_residual(const Frame& frame) {
    if (frame.empty()) throw std::domain_error("spectral_residual: empty frame");
    // Classic recipe operates at a small fixed resolution.
    constexpr int kW = 64, kH = 48;
    Frame gray = preprocess(to_grayscale(frame), kW, kH);

    std::vector<std::complex<double>> spec(static_cast<size_t>(kW) * kH);
    for (size_t i = 0; i < spec.size(); ++i) spec[i] = {gray.pixels[i], 0.0f};
    dft_2d(spec, kW, kH, false);

    float max_amp = 0;
    std::vector<float> amp(spec.size()), phase(spec.size());
    for (size_t i = 0; i < spec.size(); ++i) {
        amp[i] = std::abs(spec[i]);
        phase[i] = std::arg(spec[i]);
        max_amp = std::max(max_amp, amp[i]);
    }
    if (max_amp <= 0) {
        SaliencyMap zero;
        zero.width = frame.width;
        zero.height = frame.height;
        zero.values.assign(static_cast<size_t>(frame.width) * frame.height, 0.0f);
        return zero;
    }
    float tiny = 1e-9f * max_amp;
    std::vector<float> log_amp(spec.size());
    for (size_t i = 0; i < spec.size(); ++i) log_amp[i] = std::log(amp[i] + tiny);
    std::vector<float> avg = log_amp;
    box3_filter(avg, kW, kH);
    for (size_t i = 0; i < spec.size(); ++i) {
        if (amp[i] < tiny) {
            // No energy at this frequency: contributes nothing to the residual.
            spec[i] = {0.0f, 0.0f};
            continue;
        }
        float resid = std::exp(log_amp[i] - avg[i]);
        spec[i] = std::polar(resid, phase[i]);
    }
    dft_2d(spec, kW, kH, true);

    std::vector<float> sal(spec.size());
    for (size_t i = 0; i < spec.size(); ++i) sal[i] = std::norm(spec[i]);
    box3_filter(sal, kW, kH);
    box3_filter(sal, kW, kH);

    Frame small;
    small.width = kW;
    small.height = kH;
    small.channels = 1;
    float mx = *std::max_element(sal.begin(), sal.end());
    small.pixels.resize(sal.size());
    for (size_t i = 0; i < sal.size(); ++i) small.pixels[i] = mx > 0 ? sal[i] / mx : 0.0f;
    Frame up = preprocess(small, frame.width, frame.height);

    SaliencyMap map;
    map.width = frame.width;
    map.height = frame.height;
    map.values = std::move(up.pixels);
    normalize_map(map);
    return map;
}

std::vector<double> pool_flatten(const SaliencyMap& map, const PoolSpec& spec) {
    if (map.width <= 0 || map.height <= 0)
        throw std::domain_error("pool_flatten: empty map");
    if (spec.grid_rows <= 0 || spec.grid_cols <= 0)
        throw std::domain_error("pool_flatten: grid must be positive");
    std::vector<double> out(static_cast<size_t>(spec.grid_rows) * spec.grid_cols, 0.0);
    double cell_h = static_cast<double>(map.height) / spec.grid_rows;
    double cell_w = static_cast<double>(map.width) / spec.grid_cols;
    for (int gr = 0; gr < spec.grid_rows; ++gr) {
        double r0 = gr * cell_h, r1 = (gr + 1) * cell_h;
        int pr0 = static_cast<int>(std::floor(r0));
        int pr1 = std::min(map.height, static_cast<int>(std::ceil(r1)));
        for (int gc = 0; gc < spec.grid_cols; ++gc) {
            double c0 = gc * cell_w, c1 = (gc + 1) * cell_w;
            int pc0 = static_cast<int>(std::floor(c0));
            int pc1 = std::min(map.width, static_cast<int>(std::ceil(c1)));
            double acc = 0.0, wsum = 0.0, mx = 0.0;
            for (int r = pr0; r < pr1; ++r) {
                double wr = std::min<double>(r + 1, r1) - std::max<double>(r, r0);
                if (wr <= 0) continue;
                for (int c = pc0; c < pc1; ++c) {
                    double wc = std::min<double>(c + 1, c1) - std::max<double>(c, c0);
                    if (wc <= 0) continue;
                    double w = wr * wc;
                    acc += w * map.at(r, c);
                    wsum += w;
                    mx = std::max(mx, static_cast<double>(map.at(r, c)));
                }
            }
            out[static_cast<size_t>(gr) * spec.grid_cols + gc] =
                spec.mode == PoolSpec::Mode::Mean ? (wsum > 0 ? acc / wsum : 0.0) : mx;
        }
    }
    return out;
}

void write_smap(const SaliencyMap& map, const std::string& path) {
    std::filesystem::path p(path);
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream os(path, std::ios::binary);
    if (!os) throw ParseError("write_smap: cannot open " + path);
    os.write("SMAP", 4);
    write_u32_le(os, 1);
    write_u32_le(os, static_cast<uint32_t>(map.width));
    write_u32_le(os, static_cast<uint32_t>(map.height));
    for (float v : map.values) write_f32_le(os, v);
    if (!os) throw ParseError("write_smap: write failed for " + path);
}

SaliencyMap read_smap(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ParseError("read_smap: cannot open " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::strncmp(magic, "SMAP", 4) != 0)
        throw ParseError("read_smap: bad magic in " + path);
    uint32_t version = read_u32_le(is);
    if (version != 1)
        throw ParseError("read_smap: unsupported version " + std::to_string(version) + " in " + path);
    SaliencyMap map;
    map.width = static_cast<int>(read_u32_le(is));
    map.height = static_cast<int>(read_u32_le(is));
    if (!is || map.width <= 0 || map.height <= 0)
        throw ParseError("read_smap: bad dimensions in " + path);
    map.values.resize(static_cast<size_t>(map.width) * map.height);
    for (float& v : map.values) v = read_f32_le(is);
    if (!is) throw ParseError("read_smap: truncated file " + path);
    return map;
}

namespace {

class PrecomputedProvider final : public SaliencyProvider {
public:
    explicit PrecomputedProvider(std::string root) : root_(std::move(root)) {}
    SaliencyMap map_for(const std::string& session_id, int frame_index) const override {
        std::filesystem::path p = std::filesystem::path(root_) / session_id /
                                  (std::to_string(frame_index) + ".smap");
        if (!std::filesystem::exists(p))
            throw ParseError("precomputed saliency missing for session '" + session_id +
                             "' frame " + std::to_string(frame_index) + " (" + p.string() + ")");
        return read_smap(p.string());
    }
    std::string name() const override { return "precomputed"; }

private:
    std::string root_;
};

class CenterBiasProvider final : public SaliencyProvider {
public:
    CenterBiasProvider(int w, int h) : map_(center_bias_map(w, h)) {}
    SaliencyMap map_for(const std::string&, int) const override { return map_; }
    std::string name() const override { return "center-bias"; }

private:
    SaliencyMap map_;
};

class SpectralResidualProvider final : public SaliencyProvider {
public:
    explicit SpectralResidualProvider(std::function<Frame(const std::string&, int)> src)
        : src_(std::move(src)) {}
    SaliencyMap map_for(const std::string& sid, int frame) const override {
        return spectral_residual(src_(sid, frame));
    }
    std::string name() const override { return "spectral-residual"; }

private:
    std::function<Frame(const std::string&, int)> src_;
};

class FunctionProvider final : public SaliencyProvider {
public:
    FunctionProvider(std::string name, std::function<SaliencyMap(const std::string&, int)> fn)
        : name_(std::move(name)), fn_(std::move(fn)) {}
    SaliencyMap map_for(const std::string& sid, int frame) const override { return fn_(sid, frame); }
    std::string name() const override { return name_; }

private:
    std::string name_;
    std::function<SaliencyMap(const std::string&, int)> fn_;
};

}  // namespace

std::unique_ptr<SaliencyProvider> make_precomputed_provider(std::string root_dir) {
    return std::make_unique<PrecomputedProvider>(std::move(root_dir));
}

std::unique_ptr<SaliencyProvider> make_center_bias_provider(int width, int height) {
    return std::make_unique<CenterBiasProvider>(width, height);
}

std::unique_ptr<SaliencyProvider> make_spectral_residual_provider(
    std::function<Frame(const std::string&, int)> frame_source) {
    return std::make_unique<SpectralResidualProvider>(std::move(frame_source));
}

std::unique_ptr<SaliencyProvider> make_function_provider(
    std::string name, std::function<SaliencyMap(const std::string&, int)> fn) {
    return std::make_unique<FunctionProvider>(std::move(name), std::move(fn));
}

}  // namespace gazecast
