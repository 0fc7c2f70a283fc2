#include "kenn/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace kenn {

Tensor::Tensor(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Tensor::Tensor(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), data_(std::move(values)) {
    if (data_.size() != rows_ * cols_) {
        throw ShapeError("tensor: " + std::to_string(data_.size()) + " values for shape " +
                         shape_str());
    }
}

Tensor::Tensor(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = rows.size();
    cols_ = rows_ == 0 ? 0 : rows.begin()->size();
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
        if (r.size() != cols_) throw ShapeError("tensor: ragged initializer");
        data_.insert(data_.end(), r.begin(), r.end());
    }
}

double Tensor::item() const {
    if (rows_ != 1 || cols_ != 1) throw ShapeError("item() on tensor of shape " + shape_str());
    return data_[0];
}

std::string Tensor::shape_str() const {
    std::ostringstream os;
    os << '(' << rows_ << 'x' << cols_ << ')';
    return os.str();
}

bool Tensor::all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

namespace ops {

namespace {

void require_same(const Tensor& a, const Tensor& b, const char* op) {
    if (!a.same_shape(b)) {
        throw ShapeError(std::string(op) + ": shape mismatch " + a.shape_str() + " vs " +
                         b.shape_str());
    }
}

Tensor checked(Tensor t, const char* op) {
    if (!t.all_finite()) throw NumericError(std::string(op) + ": non-finite result");
    return t;
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.cols() != b.rows()) {
        throw ShapeError("matmul: " + a.shape_str() + " x " + b.shape_str());
    }
    Tensor out(a.rows(), b.cols());
    const std::size_t n = b.cols();
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double* o = out.row(i).data();
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            const double* br = b.row(k).data();
            for (std::size_t j = 0; j < n; ++j) o[j] += aik * br[j];
        }
    }
    return checked(std::move(out), "matmul");
}

Tensor matmul_at_b(const Tensor& a, const Tensor& b) {
    if (a.rows() != b.rows()) {
        throw ShapeError("matmul_at_b: " + a.shape_str() + " x " + b.shape_str());
    }
    Tensor out(a.cols(), b.cols());
    const std::size_t n = b.cols();
    for (std::size_t r = 0; r < a.rows(); ++r) {
        const double* br = b.row(r).data();
        for (std::size_t i = 0; i < a.cols(); ++i) {
            const double ari = a(r, i);
            if (ari == 0.0) continue;
            double* o = out.row(i).data();
            for (std::size_t j = 0; j < n; ++j) o[j] += ari * br[j];
        }
    }
    return checked(std::move(out), "matmul_at_b");
}

Tensor matmul_a_bt(const Tensor& a, const Tensor& b) {
    if (a.cols() != b.cols()) {
        throw ShapeError("matmul_a_bt: " + a.shape_str() + " x " + b.shape_str());
    }
    Tensor out(a.rows(), b.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const double* ar = a.row(i).data();
        for (std::size_t j = 0; j < b.rows(); ++j) {
            const double* br = b.row(j).data();
            double s = 0.0;
            for (std::size_t k = 0; k < a.cols(); ++k) s += ar[k] * br[k];
            out(i, j) = s;
        }
    }
    return checked(std::move(out), "matmul_a_bt");
}

Tensor transpose(const Tensor& a) {
    Tensor out(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
    return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
    require_same(a, b, "add");
    Tensor out = a;
    auto& o = out.values();
    const auto& bv = b.values();
    for (std::size_t i = 0; i < o.size(); ++i) o[i] += bv[i];
    return checked(std::move(out), "add");
}

Tensor sub(const Tensor& a, const Tensor& b) {
    require_same(a, b, "sub");
    Tensor out = a;
    auto& o = out.values();
    const auto& bv = b.values();
    for (std::size_t i = 0; i < o.size(); ++i) o[i] -= bv[i];
    return checked(std::move(out), "sub");
}

Tensor hadamard(const Tensor& a, const Tensor& b) {
    require_same(a, b, "hadamard");
    Tensor out = a;
    auto& o = out.values();
    const auto& bv = b.values();
    for (std::size_t i = 0; i < o.size(); ++i) o[i] *= bv[i];
    return checked(std::move(out), "hadamard");
}

Tensor add_row_broadcast(const Tensor& a, const Tensor& row) {
    if (row.rows() != 1 || row.cols() != a.cols()) {
        throw ShapeError("add_row_broadcast: " + a.shape_str() + " + " + row.shape_str());
    }
    Tensor out = a;
    for (std::size_t i = 0; i < out.rows(); ++i) {
        auto r = out.row(i);
        for (std::size_t j = 0; j < r.size(); ++j) r[j] += row(0, j);
    }
    return checked(std::move(out), "add_row_broadcast");
}

Tensor scale(const Tensor& a, double s) {
    Tensor out = a;
    for (auto& v : out.values()) v *= s;
    return checked(std::move(out), "scale");
}

Tensor scale_cols(const Tensor& a, std::span<const double> factors) {
    if (factors.size() != a.cols()) {
        throw ShapeError("scale_cols: " + std::to_string(factors.size()) + " factors for " +
                         a.shape_str());
    }
    Tensor out = a;
    for (std::size_t i = 0; i < out.rows(); ++i) {
        auto r = out.row(i);
        for (std::size_t j = 0; j < r.size(); ++j) r[j] *= factors[j];
    }
    return checked(std::move(out), "scale_cols");
}

Tensor relu(const Tensor& a) {
    Tensor out = a;
    for (auto& v : out.values()) v = v > 0.0 ? v : 0.0;
    return checked(std::move(out), "relu");
}

double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

double softplus(double x) {
    return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double softplus_inverse(double y) {
    if (!(y > 0.0)) throw NumericError("softplus_inverse: argument must be positive");
    // log(exp(y) - 1), rearranged to stay finite for large y.
    return y + std::log(-std::expm1(-y));
}

Tensor sigmoid(const Tensor& a) {
    Tensor out = a;
    for (auto& v : out.values()) v = sigmoid(v);
    return checked(std::move(out), "sigmoid");
}

Tensor softplus(const Tensor& a) {
    Tensor out = a;
    for (auto& v : out.values()) v = softplus(v);
    return checked(std::move(out), "softplus");
}

Tensor softmax_rows(const Tensor& a) {
    if (a.cols() == 0) throw ShapeError("softmax_rows: zero columns");
    if (!a.all_finite()) throw NumericError("softmax_rows: non-finite input");
    Tensor out = a;
    for (std::size_t i = 0; i < out.rows(); ++i) {
        auto r = out.row(i);
        const double mx = *std::max_element(r.begin(), r.end());
        double total = 0.0;
        for (auto& v : r) {
            v = std::exp(v - mx);
            total += v;
        }
        for (auto& v : r) v /= total;
    }
    return out;
}

Tensor concat_cols(std::span<const Tensor> parts) {
    if (parts.empty()) return {};
    const std::size_t rows = parts.front().rows();
    std::size_t cols = 0;
    for (const auto& p : parts) {
        if (p.rows() != rows) {
            throw ShapeError("concat_cols: row mismatch " + p.shape_str() + " vs " +
                             std::to_string(rows));
        }
        cols += p.cols();
    }
    Tensor out(rows, cols);
    for (std::size_t i = 0; i < rows; ++i) {
        auto o = out.row(i);
        std::size_t off = 0;
        for (const auto& p : parts) {
            auto src = p.row(i);
            std::copy(src.begin(), src.end(), o.begin() + static_cast<std::ptrdiff_t>(off));
            off += p.cols();
        }
    }
    return out;
}

Tensor select_cols(const Tensor& a, std::span<const std::size_t> cols) {
    for (auto c : cols) {
        if (c >= a.cols()) {
            throw IndexError("select_cols: column " + std::to_string(c) + " out of range for " +
                             a.shape_str());
        }
    }
    Tensor out(a.rows(), cols.size());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        auto src = a.row(i);
        auto o = out.row(i);
        for (std::size_t j = 0; j < cols.size(); ++j) o[j] = src[cols[j]];
    }
    return out;
}

Tensor scatter_add_cols(std::size_t target_cols, std::span<const std::size_t> cols,
                        const Tensor& src) {
    if (src.cols() != cols.size()) {
        throw ShapeError("scatter_add_cols: " + std::to_string(cols.size()) + " columns for " +
                         src.shape_str());
    }
    for (auto c : cols) {
        if (c >= target_cols) {
            throw IndexError("scatter_add_cols: column " + std::to_string(c) +
                             " out of range for width " + std::to_string(target_cols));
        }
    }
    Tensor out(src.rows(), target_cols);
    for (std::size_t i = 0; i < src.rows(); ++i) {
        auto s = src.row(i);
        auto o = out.row(i);
        for (std::size_t j = 0; j < cols.size(); ++j) o[cols[j]] += s[j];
    }
    return out;
}

Tensor gather_rows(const Tensor& src, std::span<const std::size_t> index) {
    Tensor out(index.size(), src.cols());
    for (std::size_t k = 0; k < index.size(); ++k) {
        if (index[k] >= src.rows()) {
            throw IndexError("gather_rows: index " + std::to_string(index[k]) +
                             " out of range for " + src.shape_str());
        }
        auto s = src.row(index[k]);
        std::copy(s.begin(), s.end(), out.row(k).begin());
    }
    return out;
}

Tensor scatter_add_rows(std::size_t target_rows, std::span<const std::size_t> index,
                        const Tensor& src) {
    if (src.rows() != index.size()) {
        throw ShapeError("scatter_add_rows: " + std::to_string(index.size()) + " indices for " +
                         src.shape_str());
    }
    Tensor out(target_rows, src.cols());
    for (std::size_t k = 0; k < index.size(); ++k) {
        if (index[k] >= target_rows) {
            throw IndexError("scatter_add_rows: index " + std::to_string(index[k]) +
                             " out of range for " + std::to_string(target_rows) + " rows");
        }
        auto s = src.row(k);
        auto o = out.row(index[k]);
        for (std::size_t j = 0; j < s.size(); ++j) o[j] += s[j];
    }
    return checked(std::move(out), "scatter_add_rows");
}

Tensor sum_rows(const Tensor& a) {
    Tensor out(1, a.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        auto r = a.row(i);
        for (std::size_t j = 0; j < r.size(); ++j) out(0, j) += r[j];
    }
    return out;
}

double sum_all(const Tensor& a) {
    double s = 0.0;
    for (double v : a.values()) s += v;
    return s;
}

double dot(const Tensor& a, const Tensor& b) {
    require_same(a, b, "dot");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a.values()[i] * b.values()[i];
    return s;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
    require_same(a, b, "max_abs_diff");
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        m = std::max(m, std::abs(a.values()[i] - b.values()[i]));
    return m;
}

}  // namespace ops
}  // namespace kenn
