#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "gazecast/matrix.hpp"

namespace gazecast {

/// Reverse-mode tape over dense matrices. One tape per computation graph,
/// confined to a single thread. Calling backward() twice without zero_grad()
/// accumulates gradients.
template <typename T>
class Tape {
public:
    struct Ref {
        int id = -1;
        bool valid() const { return id >= 0; }
    };

    Ref input(Mat<T> v) {
        nodes_.push_back(Node{std::move(v), {}, nullptr});
        nodes_.back().grad = Mat<T>(nodes_.back().val.rows, nodes_.back().val.cols);
        return Ref{static_cast<int>(nodes_.size()) - 1};
    }

    Ref constant(Mat<T> v) { return input(std::move(v)); }

    Ref scalar(T v) { return input(Mat<T>(1, 1, v)); }

    const Mat<T>& value(Ref r) const { return node(r).val; }
    const Mat<T>& grad(Ref r) const { return node(r).grad; }

    Ref matmul(Ref a, Ref b) {
        const Mat<T>& A = value(a);
        const Mat<T>& B = value(b);
        if (A.cols != B.rows)
            throw std::invalid_argument("matmul: shape mismatch " + A.shape_str() + " * " + B.shape_str());
        Mat<T> out(A.rows, B.cols);
        for (int i = 0; i < A.rows; ++i)
            for (int k = 0; k < A.cols; ++k) {
                T aik = A.at(i, k);
                if (aik == T(0)) continue;
                const T* brow = &B.data[static_cast<size_t>(k) * B.cols];
                T* orow = &out.data[static_cast<size_t>(i) * out.cols];
                for (int j = 0; j < B.cols; ++j) orow[j] += aik * brow[j];
            }
        return record(std::move(out), [a, b](Tape& t, const Node& n) {
            const Mat<T>& A = t.value(a);
            const Mat<T>& B = t.value(b);
            Mat<T>& ga = t.mut_grad(a);
            Mat<T>& gb = t.mut_grad(b);
            // dA = dOut * B^T ; dB = A^T * dOut
            for (int i = 0; i < A.rows; ++i)
                for (int j = 0; j < B.cols; ++j) {
                    T go = n.grad.at(i, j);
                    if (go == T(0)) continue;
                    for (int k = 0; k < A.cols; ++k) {
                        ga.at(i, k) += go * B.at(k, j);
                        gb.at(k, j) += A.at(i, k) * go;
                    }
                }
        });
    }

    /// Elementwise add; b may also be 1xN, broadcast over the rows of a.
    Ref add(Ref a, Ref b) { return add_like(a, b, T(1)); }

    Ref sub(Ref a, Ref b) { return add_like(a, b, T(-1)); }

    /// Elementwise multiply; b may also be 1xN, broadcast over rows of a.
    Ref mul(Ref a, Ref b) {
        const Mat<T>& A = value(a);
        const Mat<T>& B = value(b);
        bool bc = (B.rows == 1 && A.rows != 1 && B.cols == A.cols);
        if (!bc && !A.same_shape(B))
            throw std::invalid_argument("mul: shape mismatch " + A.shape_str() + " vs " + B.shape_str());
        Mat<T> out(A.rows, A.cols);
        for (int i = 0; i < A.rows; ++i)
            for (int j = 0; j < A.cols; ++j) out.at(i, j) = A.at(i, j) * B.at(bc ? 0 : i, j);
        return record(std::move(out), [a, b, bc](Tape& t, const Node& n) {
            const Mat<T>& A = t.value(a);
            const Mat<T>& B = t.value(b);
            Mat<T>& ga = t.mut_grad(a);
            Mat<T>& gb = t.mut_grad(b);
            for (int i = 0; i < A.rows; ++i)
                for (int j = 0; j < A.cols; ++j) {
                    T go = n.grad.at(i, j);
                    ga.at(i, j) += go * B.at(bc ? 0 : i, j);
                    gb.at(bc ? 0 : i, j) += go * A.at(i, j);
                }
        });
    }

    Ref scale(Ref a, T s) {
        return unary(a, [s](T x) { return s * x; }, [s](T, T) { return s; });
    }

    Ref tanh_(Ref a) {
        return unary(a, [](T x) { return std::tanh(x); },
                     [](T, T y) { return T(1) - y * y; });
    }

    Ref sigmoid_(Ref a) {
        return unary(a, [](T x) { return T(1) / (T(1) + std::exp(-x)); },
                     [](T, T y) { return y * (T(1) - y); });
    }

    Ref relu(Ref a) {
        return unary(a, [](T x) { return x > T(0) ? x : T(0); },
                     [](T x, T) { return x > T(0) ? T(1) : T(0); });
    }

    Ref square(Ref a) {
        return unary(a, [](T x) { return x * x; }, [](T x, T) { return T(2) * x; });
    }

    Ref abs_(Ref a) {
        return unary(a, [](T x) { return std::abs(x); },
                     [](T x, T) { return x > T(0) ? T(1) : (x < T(0) ? T(-1) : T(0)); });
    }

    /// Elementwise wrap of a degree angle into [-180, 180]. The wrap is a
    /// piecewise shift by a multiple of 360, so gradient passes through.
    Ref wrap_deg(Ref a) {
        return unary(a,
                     [](T x) {
                         T y = x;
                         if (y > T(180)) y -= T(360);
                         if (y < T(-180)) y += T(360);
                         return y;
                     },
                     [](T, T) { return T(1); });
    }

    Ref transpose(Ref a) {
        const Mat<T>& A = value(a);
        Mat<T> out(A.cols, A.rows);
        for (int i = 0; i < A.rows; ++i)
            for (int j = 0; j < A.cols; ++j) out.at(j, i) = A.at(i, j);
        return record(std::move(out), [a](Tape& t, const Node& n) {
            Mat<T>& ga = t.mut_grad(a);
            for (int i = 0; i < ga.rows; ++i)
                for (int j = 0; j < ga.cols; ++j) ga.at(i, j) += n.grad.at(j, i);
        });
    }

    Ref concat_cols(Ref a, Ref b) {
        const Mat<T>& A = value(a);
        const Mat<T>& B = value(b);
        if (A.rows != B.rows)
            throw std::invalid_argument("concat_cols: row mismatch " + A.shape_str() + " vs " + B.shape_str());
        Mat<T> out(A.rows, A.cols + B.cols);
        for (int i = 0; i < A.rows; ++i) {
            for (int j = 0; j < A.cols; ++j) out.at(i, j) = A.at(i, j);
            for (int j = 0; j < B.cols; ++j) out.at(i, A.cols + j) = B.at(i, j);
        }
        int acols = A.cols;
        return record(std::move(out), [a, b, acols](Tape& t, const Node& n) {
            Mat<T>& ga = t.mut_grad(a);
            Mat<T>& gb = t.mut_grad(b);
            for (int i = 0; i < ga.rows; ++i) {
                for (int j = 0; j < ga.cols; ++j) ga.at(i, j) += n.grad.at(i, j);
                for (int j = 0; j < gb.cols; ++j) gb.at(i, j) += n.grad.at(i, acols + j);
            }
        });
    }

    Ref slice_cols(Ref a, int begin, int count) {
        const Mat<T>& A = value(a);
        if (begin < 0 || count < 1 || begin + count > A.cols)
            throw std::invalid_argument("slice_cols: [" + std::to_string(begin) + "," +
                                        std::to_string(begin + count) + ") out of " + A.shape_str());
        Mat<T> out(A.rows, count);
        for (int i = 0; i < A.rows; ++i)
            for (int j = 0; j < count; ++j) out.at(i, j) = A.at(i, begin + j);
        return record(std::move(out), [a, begin, count](Tape& t, const Node& n) {
            Mat<T>& ga = t.mut_grad(a);
            for (int i = 0; i < ga.rows; ++i)
                for (int j = 0; j < count; ++j) ga.at(i, begin + j) += n.grad.at(i, j);
        });
    }

    Ref slice_rows(Ref a, int begin, int count) {
        const Mat<T>& A = value(a);
        if (begin < 0 || count < 1 || begin + count > A.rows)
            throw std::invalid_argument("slice_rows: [" + std::to_string(begin) + "," +
                                        std::to_string(begin + count) + ") out of " + A.shape_str());
        Mat<T> out(count, A.cols);
        for (int i = 0; i < count; ++i)
            for (int j = 0; j < A.cols; ++j) out.at(i, j) = A.at(begin + i, j);
        return record(std::move(out), [a, begin, count](Tape& t, const Node& n) {
            Mat<T>& ga = t.mut_grad(a);
            for (int i = 0; i < count; ++i)
                for (int j = 0; j < ga.cols; ++j) ga.at(begin + i, j) += n.grad.at(i, j);
        });
    }

    /// Row-major reinterpretation; element count must match.
    Ref reshape(Ref a, int r, int c) {
        const Mat<T>& A = value(a);
        if (static_cast<size_t>(r) * c != A.size())
            throw std::invalid_argument("reshape: " + A.shape_str() + " to " + std::to_string(r) +
                                        "x" + std::to_string(c));
        Mat<T> out(r, c);
        out.data = A.data;
        return record(std::move(out), [a](Tape& t, const Node& n) {
            Mat<T>& ga = t.mut_grad(a);
            for (size_t i = 0; i < ga.data.size(); ++i) ga.data[i] += n.grad.data[i];
        });
    }

    Ref sum(Ref a) {
        const Mat<T>& A = value(a);
        T s = T(0);
        for (const T& x : A.data) s += x;
        return record(Mat<T>(1, 1, s), [a](Tape& t, const Node& n) {
            Mat<T>& ga = t.mut_grad(a);
            T go = n.grad.at(0, 0);
            for (T& g : ga.data) g += go;
        });
    }

    Ref mean(Ref a) {
        const Mat<T>& A = value(a);
        if (A.size() == 0) throw std::invalid_argument("mean: empty matrix");
        T s = T(0);
        for (const T& x : A.data) s += x;
        T inv = T(1) / static_cast<T>(A.size());
        return record(Mat<T>(1, 1, s * inv), [a, inv](Tape& t, const Node& n) {
            Mat<T>& ga = t.mut_grad(a);
            T go = n.grad.at(0, 0) * inv;
            for (T& g : ga.data) g += go;
        });
    }

    /// Per-row mean/variance normalization over the columns, with no affine
    /// term (apply a learned scale/shift separately via mul/add broadcast).
    Ref layer_norm_rows(Ref a, T eps) {
        const Mat<T>& A = value(a);
        Mat<T> out(A.rows, A.cols);
        Mat<T> inv_std(A.rows, 1);
        for (int i = 0; i < A.rows; ++i) {
            T mu = T(0);
            for (int j = 0; j < A.cols; ++j) mu += A.at(i, j);
            mu /= static_cast<T>(A.cols);
            T var = T(0);
            for (int j = 0; j < A.cols; ++j) {
                T d = A.at(i, j) - mu;
                var += d * d;
            }
            var /= static_cast<T>(A.cols);
            T is = T(1) / std::sqrt(var + eps);
            inv_std.at(i, 0) = is;
            for (int j = 0; j < A.cols; ++j) out.at(i, j) = (A.at(i, j) - mu) * is;
        }
        Mat<T> y = out;
        return record(std::move(out), [a, y, inv_std](Tape& t, const Node& n) {
            Mat<T>& ga = t.mut_grad(a);
            int cols = ga.cols;
            for (int i = 0; i < ga.rows; ++i) {
                T mean_g = T(0), mean_gy = T(0);
                for (int j = 0; j < cols; ++j) {
                    mean_g += n.grad.at(i, j);
                    mean_gy += n.grad.at(i, j) * y.at(i, j);
                }
                mean_g /= static_cast<T>(cols);
                mean_gy /= static_cast<T>(cols);
                T is = inv_std.at(i, 0);
                for (int j = 0; j < cols; ++j)
                    ga.at(i, j) += (n.grad.at(i, j) - mean_g - y.at(i, j) * mean_gy) * is;
            }
        });
    }

    /// Backpropagate from a scalar root. Grads accumulate across calls.
    void backward(Ref root) {
        const Mat<T>& R = value(root);
        if (R.rows != 1 || R.cols != 1)
            throw std::invalid_argument("backward: root must be scalar, got " + R.shape_str());
        // each pass runs on clean adjoints so earlier passes are not
        // re-propagated; accumulated gradients are folded back in afterwards
        std::vector<Mat<T>> saved;
        saved.reserve(nodes_.size());
        for (Node& n : nodes_) {
            saved.push_back(std::move(n.grad));
            n.grad = Mat<T>(n.val.rows, n.val.cols);
        }
        mut_grad(root).at(0, 0) = T(1);
        for (int i = root.id; i >= 0; --i)
            if (nodes_[i].back) nodes_[i].back(*this, nodes_[i]);
        for (size_t i = 0; i < nodes_.size(); ++i)
            for (size_t j = 0; j < saved[i].data.size(); ++j)
                nodes_[i].grad.data[j] += saved[i].data[j];
    }

    void zero_grad() {
        for (Node& n : nodes_)
            for (T& g : n.grad.data) g = T(0);
    }

    size_t num_nodes() const { return nodes_.size(); }

private:
    struct Node {
        Mat<T> val;
        Mat<T> grad;
        std::function<void(Tape&, const Node&)> back;
    };

    const Node& node(Ref r) const {
        if (!r.valid() || r.id >= static_cast<int>(nodes_.size()))
            throw std::invalid_argument("Tape: invalid node reference");
        return nodes_[r.id];
    }

    Mat<T>& mut_grad(Ref r) { return nodes_[r.id].grad; }

    Ref record(Mat<T> val, std::function<void(Tape&, const Node&)> back) {
        Node n;
        n.grad = Mat<T>(val.rows, val.cols);
        n.val = std::move(val);
        n.back = std::move(back);
        nodes_.push_back(std::move(n));
        return Ref{static_cast<int>(nodes_.size()) - 1};
    }

    template <typename Fwd, typename Bwd>
    Ref unary(Ref a, Fwd fwd, Bwd dfdx) {
        const Mat<T>& A = value(a);
        Mat<T> out(A.rows, A.cols);
        for (size_t i = 0; i < A.data.size(); ++i) out.data[i] = fwd(A.data[i]);
        Mat<T> y = out;
        return record(std::move(out), [a, y, dfdx](Tape& t, const Node& n) {
            const Mat<T>& A = t.value(a);
            Mat<T>& ga = t.mut_grad(a);
            for (size_t i = 0; i < ga.data.size(); ++i)
                ga.data[i] += n.grad.data[i] * dfdx(A.data[i], y.data[i]);
        });
    }

    Ref add_like(Ref a, Ref b, T sign) {
        const Mat<T>& A = value(a);
        const Mat<T>& B = value(b);
        bool bc = (B.rows == 1 && A.rows != 1 && B.cols == A.cols);
        if (!bc && !A.same_shape(B))
            throw std::invalid_argument("add/sub: shape mismatch " + A.shape_str() + " vs " + B.shape_str());
        Mat<T> out(A.rows, A.cols);
        for (int i = 0; i < A.rows; ++i)
            for (int j = 0; j < A.cols; ++j) out.at(i, j) = A.at(i, j) + sign * B.at(bc ? 0 : i, j);
        return record(std::move(out), [a, b, bc, sign](Tape& t, const Node& n) {
            Mat<T>& ga = t.mut_grad(a);
            Mat<T>& gb = t.mut_grad(b);
            for (int i = 0; i < ga.rows; ++i)
                for (int j = 0; j < ga.cols; ++j) {
                    ga.at(i, j) += n.grad.at(i, j);
                    gb.at(bc ? 0 : i, j) += sign * n.grad.at(i, j);
                }
        });
    }

    std::vector<Node> nodes_;
};

using TapeF = Tape<float>;
using TapeD = Tape<double>;

/// Max relative error between analytic gradients and central finite
/// differences. `build` constructs the scalar loss on a fresh tape from the
/// given parameter leaves; call with 64-bit parameters only.
template <typename Build>
double grad_check(std::vector<Mat<double>*> params, Build build, double eps) {
    if (eps <= 0) throw std::invalid_argument("grad_check: eps must be positive");
    auto eval = [&]() {
        Tape<double> tape;
        std::vector<Tape<double>::Ref> refs;
        refs.reserve(params.size());
        for (Mat<double>* p : params) refs.push_back(tape.input(*p));
        auto root = build(tape, refs);
        return std::pair<double, std::vector<Mat<double>>>{
            tape.value(root).at(0, 0), [&] {
                tape.backward(root);
                std::vector<Mat<double>> grads;
                for (auto r : refs) grads.push_back(tape.grad(r));
                return grads;
            }()};
    };
    auto [loss0, analytic] = eval();
    (void)loss0;

    auto eval_loss = [&]() {
        Tape<double> tape;
        std::vector<Tape<double>::Ref> refs;
        for (Mat<double>* p : params) refs.push_back(tape.input(*p));
        return tape.value(build(tape, refs)).at(0, 0);
    };

    double max_rel = 0.0;
    for (size_t pi = 0; pi < params.size(); ++pi) {
        for (size_t i = 0; i < params[pi]->data.size(); ++i) {
            double orig = params[pi]->data[i];
            params[pi]->data[i] = orig + eps;
            double lp = eval_loss();
            params[pi]->data[i] = orig - eps;
            double lm = eval_loss();
            params[pi]->data[i] = orig;
            double numeric = (lp - lm) / (2 * eps);
            double a = analytic[pi].data[i];
            double rel = std::abs(a - numeric) / std::max(1e-8, std::abs(a) + std::abs(numeric));
            if (rel > max_rel) max_rel = rel;
        }
    }
    return max_rel;
}

}  // namespace gazecast
