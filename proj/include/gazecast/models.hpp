#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "gazecast/autodiff.hpp"
#include "gazecast/matrix.hpp"

namespace gazecast {

enum class Arch { Lstm, Tsmixer };

std::string arch_name(Arch a);
Arch arch_from_name(const std::string& name);

struct ModelDims {
    int input_dim = 112;  // F + 4
    int hidden = 128;
    int past = 15;    // p
    int horizon = 10; // q
    int blocks = 2;   // TSMixer only
};

/// Flat named parameter store. Iteration order is fixed at construction,
/// which keeps optimizer updates and checkpoints deterministic.
template <typename T>
struct ParamSet {
    Arch arch = Arch::Lstm;
    ModelDims dims;
    std::vector<std::pair<std::string, Mat<T>>> mats;

    Mat<T>* find(const std::string& name) {
        for (auto& [n, m] : mats)
            if (n == name) return &m;
        return nullptr;
    }
    const Mat<T>* find(const std::string& name) const {
        for (const auto& [n, m] : mats)
            if (n == name) return &m;
        return nullptr;
    }
};

using ParamSetF = ParamSet<float>;
using ParamSetD = ParamSet<double>;

template <typename T, typename U>
ParamSet<T> cast_params(const ParamSet<U>& src) {
    ParamSet<T> out;
    out.arch = src.arch;
    out.dims = src.dims;
    out.mats.reserve(src.mats.size());
    for (const auto& [n, m] : src.mats) out.mats.emplace_back(n, cast_mat<T>(m));
    return out;
}

/// Uniform init in [-1/sqrt(fan_in), 1/sqrt(fan_in)] per weight matrix;
/// biases zero except the LSTM forget gate, which starts at 1.
template <typename T>
ParamSet<T> init_params(Arch arch, const ModelDims& dims, uint64_t seed);

/// Parameter leaves bound into a tape, in ParamSet order.
template <typename T>
struct BoundParams {
    const ParamSet<T>* params = nullptr;
    std::vector<typename Tape<T>::Ref> refs;

    typename Tape<T>::Ref ref(const std::string& name) const {
        for (size_t i = 0; i < params->mats.size(); ++i)
            if (params->mats[i].first == name) return refs[i];
        throw std::invalid_argument("BoundParams: unknown parameter " + name);
    }
};

template <typename T>
BoundParams<T> bind_params(Tape<T>& tape, const ParamSet<T>& params) {
    BoundParams<T> bound;
    bound.params = &params;
    bound.refs.reserve(params.mats.size());
    for (const auto& [n, m] : params.mats) bound.refs.push_back(tape.input(m));
    return bound;
}

/// Single-layer LSTM over the p rows of the fused window, linear head on
/// the final hidden state, reshaped to q x 2. Gate order i, f, g, o.
template <typename T>
typename Tape<T>::Ref lstm_forward(Tape<T>& tape, const BoundParams<T>& bp,
                                   typename Tape<T>::Ref window);

/// TSMixer: per block, pre-norm time mixing (p x p map over positions) and
/// pre-norm two-layer feature MLP, each with a residual; then a temporal
/// projection p -> q and a linear head to 2 outputs.
template <typename T>
typename Tape<T>::Ref tsmixer_forward(Tape<T>& tape, const BoundParams<T>& bp,
                                      typename Tape<T>::Ref window);

/// Dispatch on the parameter set's architecture tag.
template <typename T>
typename Tape<T>::Ref model_forward(Tape<T>& tape, const BoundParams<T>& bp,
                                    typename Tape<T>::Ref window);

/// Convenience single-sample inference (no gradients kept).
MatF predict(const ParamSetF& params, const MatF& window);

enum class LossKind { SphericalMse, Angular };

/// In-graph loss between a q x 2 prediction and a constant target:
/// azimuth difference wrapped, then (az^2+el^2)/2 (or (|az|+|el|)/2),
/// mean over the q steps.
template <typename T>
typename Tape<T>::Ref prediction_loss(Tape<T>& tape, typename Tape<T>::Ref pred,
                                      const Mat<T>& target, LossKind kind);

/// Versioned binary checkpoint: magic "GZCK", u32 LE version(=1),
/// architecture tag string, dims, then each named matrix as
/// (name, u32 rows, u32 cols, f32 LE values row-major).
void save_checkpoint(const ParamSetF& params, const std::string& path);
ParamSetF load_checkpoint(const std::string& path);

// ---- implementation ----

template <typename T>
ParamSet<T> init_params(Arch arch, const ModelDims& dims, uint64_t seed) {
    std::mt19937_64 rng(seed);
    auto uniform = [&rng](int rows, int cols, int fan_in) {
        T bound = T(1) / std::sqrt(static_cast<T>(fan_in));
        std::uniform_real_distribution<double> dist(-bound, bound);
        Mat<T> m(rows, cols);
        for (T& v : m.data) v = static_cast<T>(dist(rng));
        return m;
    };
    ParamSet<T> p;
    p.arch = arch;
    p.dims = dims;
    int D = dims.input_dim, H = dims.hidden, P = dims.past, Q = dims.horizon;
    if (arch == Arch::Lstm) {
        p.mats.emplace_back("w_x", uniform(D, 4 * H, D));
        p.mats.emplace_back("w_h", uniform(H, 4 * H, H));
        Mat<T> b(1, 4 * H);
        for (int j = H; j < 2 * H; ++j) b.at(0, j) = T(1);  // forget gate
        p.mats.emplace_back("b", std::move(b));
        p.mats.emplace_back("head_w", uniform(H, 2 * Q, H));
        p.mats.emplace_back("head_b", Mat<T>(1, 2 * Q));
    } else {
        for (int k = 0; k < dims.blocks; ++k) {
            std::string pre = "block" + std::to_string(k) + ".";
            Mat<T> g1(1, D, T(1)), g2(1, D, T(1));
            p.mats.emplace_back(pre + "norm1_gamma", std::move(g1));
            p.mats.emplace_back(pre + "norm1_beta", Mat<T>(1, D));
            p.mats.emplace_back(pre + "time_w", uniform(P, P, P));
            p.mats.emplace_back(pre + "norm2_gamma", std::move(g2));
            p.mats.emplace_back(pre + "norm2_beta", Mat<T>(1, D));
            p.mats.emplace_back(pre + "mlp_w1", uniform(D, H, D));
            p.mats.emplace_back(pre + "mlp_b1", Mat<T>(1, H));
            p.mats.emplace_back(pre + "mlp_w2", uniform(H, D, H));
            p.mats.emplace_back(pre + "mlp_b2", Mat<T>(1, D));
        }
        p.mats.emplace_back("proj_w", uniform(Q, P, P));
        p.mats.emplace_back("head_w", uniform(D, 2, D));
        p.mats.emplace_back("head_b", Mat<T>(1, 2));
    }
    return p;
}

template <typename T>
typename Tape<T>::Ref lstm_forward(Tape<T>& tape, const BoundParams<T>& bp,
                                   typename Tape<T>::Ref window) {
    const ModelDims& d = bp.params->dims;
    const Mat<T>& W = tape.value(window);
    if (W.rows != d.past || W.cols != d.input_dim)
        throw std::invalid_argument("lstm_forward: window " + W.shape_str() + " does not match p=" +
                                    std::to_string(d.past) + ", input_dim=" +
                                    std::to_string(d.input_dim));
    int H = d.hidden;
    auto wx = bp.ref("w_x"), wh = bp.ref("w_h"), b = bp.ref("b");
    auto h = tape.constant(Mat<T>(1, H));
    auto c = tape.constant(Mat<T>(1, H));
    for (int t = 0; t < d.past; ++t) {
        auto x = tape.slice_rows(window, t, 1);
        auto gates = tape.add(tape.add(tape.matmul(x, wx), tape.matmul(h, wh)), b);
        auto i = tape.sigmoid_(tape.slice_cols(gates, 0, H));
        auto f = tape.sigmoid_(tape.slice_cols(gates, H, H));
        auto g = tape.tanh_(tape.slice_cols(gates, 2 * H, H));
        auto o = tape.sigmoid_(tape.slice_cols(gates, 3 * H, H));
        c = tape.add(tape.mul(f, c), tape.mul(i, g));
        h = tape.mul(o, tape.tanh_(c));
    }
    auto out = tape.add(tape.matmul(h, bp.ref("head_w")), bp.ref("head_b"));
    return tape.reshape(out, d.horizon, 2);
}

template <typename T>
typename Tape<T>::Ref tsmixer_forward(Tape<T>& tape, const BoundParams<T>& bp,
                                      typename Tape<T>::Ref window) {
    const ModelDims& d = bp.params->dims;
    const Mat<T>& W = tape.value(window);
    if (W.rows != d.past || W.cols != d.input_dim)
        throw std::invalid_argument("tsmixer_forward: window " + W.shape_str() +
                                    " does not match p=" + std::to_string(d.past) +
                                    ", input_dim=" + std::to_string(d.input_dim));
    const T eps = T(1e-5);
    auto x = window;
    for (int k = 0; k < d.blocks; ++k) {
        std::string pre = "block" + std::to_string(k) + ".";
        auto n1 = tape.add(tape.mul(tape.layer_norm_rows(x, eps), bp.ref(pre + "norm1_gamma")),
                           bp.ref(pre + "norm1_beta"));
        x = tape.add(x, tape.relu(tape.matmul(bp.ref(pre + "time_w"), n1)));
        auto n2 = tape.add(tape.mul(tape.layer_norm_rows(x, eps), bp.ref(pre + "norm2_gamma")),
                           bp.ref(pre + "norm2_beta"));
        auto hid = tape.relu(tape.add(tape.matmul(n2, bp.ref(pre + "mlp_w1")),
                                      bp.ref(pre + "mlp_b1")));
        x = tape.add(x, tape.add(tape.matmul(hid, bp.ref(pre + "mlp_w2")),
                                 bp.ref(pre + "mlp_b2")));
    }
    auto projected = tape.matmul(bp.ref("proj_w"), x);  // q x D
    return tape.add(tape.matmul(projected, bp.ref("head_w")), bp.ref("head_b"));
}

template <typename T>
typename Tape<T>::Ref model_forward(Tape<T>& tape, const BoundParams<T>& bp,
                                    typename Tape<T>::Ref window) {
    return bp.params->arch == Arch::Lstm ? lstm_forward(tape, bp, window)
                                         : tsmixer_forward(tape, bp, window);
}

template <typename T>
typename Tape<T>::Ref prediction_loss(Tape<T>& tape, typename Tape<T>::Ref pred,
                                      const Mat<T>& target, LossKind kind) {
    auto diff = tape.sub(pred, tape.constant(target));
    auto az = tape.wrap_deg(tape.slice_cols(diff, 0, 1));
    auto el = tape.slice_cols(diff, 1, 1);
    if (kind == LossKind::SphericalMse) {
        auto m = tape.add(tape.mean(tape.square(az)), tape.mean(tape.square(el)));
        return tape.scale(m, T(0.5));
    }
    auto m = tape.add(tape.mean(tape.abs_(az)), tape.mean(tape.abs_(el)));
    return tape.scale(m, T(0.5));
}

}  // namespace gazecast
