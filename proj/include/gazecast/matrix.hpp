#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace gazecast {

/// Dense row-major matrix. The only tensor rank the toolkit needs;
/// sequences are handled as loops over per-step matrices.
template <typename T>
struct Mat {
    int rows = 0;
    int cols = 0;
    std::vector<T> data;

    Mat() = default;
    Mat(int r, int c, T fill = T(0))
        : rows(r), cols(c), data(static_cast<size_t>(r) * static_cast<size_t>(c), fill) {
        if (r < 0 || c < 0) throw std::invalid_argument("Mat: negative dimension");
    }

    T& at(int r, int c) { return data[static_cast<size_t>(r) * cols + c]; }
    const T& at(int r, int c) const { return data[static_cast<size_t>(r) * cols + c]; }

    size_t size() const { return data.size(); }
    bool same_shape(const Mat& o) const { return rows == o.rows && cols == o.cols; }

    std::string shape_str() const {
        return std::to_string(rows) + "x" + std::to_string(cols);
    }
};

using MatF = Mat<float>;
using MatD = Mat<double>;

template <typename T, typename U>
Mat<T> cast_mat(const Mat<U>& m) {
    Mat<T> out(m.rows, m.cols);
    for (size_t i = 0; i < m.data.size(); ++i) out.data[i] = static_cast<T>(m.data[i]);
    return out;
}

}  // namespace gazecast
