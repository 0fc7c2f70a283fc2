#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "kenn/error.hpp"

namespace kenn {

using RowIndex = std::vector<std::size_t>;

// Dense row-major matrix of doubles. Only 2-D; batches live in rows.
class Tensor {
public:
    Tensor() = default;
    Tensor(std::size_t rows, std::size_t cols, double fill = 0.0);
    Tensor(std::size_t rows, std::size_t cols, std::vector<double> values);
    Tensor(std::initializer_list<std::initializer_list<double>> rows);

    static Tensor scalar(double v) { return Tensor(1, 1, v); }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

    std::vector<double>& values() { return data_; }
    const std::vector<double>& values() const { return data_; }
    double item() const;

    bool same_shape(const Tensor& other) const {
        return rows_ == other.rows_ && cols_ == other.cols_;
    }
    std::string shape_str() const;

    bool all_finite() const;

    friend bool operator==(const Tensor&, const Tensor&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

// Pure kernels. Every kernel throws ShapeError on incompatible shapes and
// NumericError if the result is not finite.
namespace ops {

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor matmul_at_b(const Tensor& a, const Tensor& b);  // aᵀ·b
Tensor matmul_a_bt(const Tensor& a, const Tensor& b);  // a·bᵀ
Tensor transpose(const Tensor& a);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor hadamard(const Tensor& a, const Tensor& b);
Tensor add_row_broadcast(const Tensor& a, const Tensor& row);
Tensor scale(const Tensor& a, double s);
Tensor scale_cols(const Tensor& a, std::span<const double> factors);
Tensor relu(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor softplus(const Tensor& a);
Tensor softmax_rows(const Tensor& a);
Tensor concat_cols(std::span<const Tensor> parts);
Tensor select_cols(const Tensor& a, std::span<const std::size_t> cols);
Tensor scatter_add_cols(std::size_t target_cols, std::span<const std::size_t> cols, const Tensor& src);
Tensor gather_rows(const Tensor& src, std::span<const std::size_t> index);
Tensor scatter_add_rows(std::size_t target_rows, std::span<const std::size_t> index, const Tensor& src);
Tensor sum_rows(const Tensor& a);  // column sums as a 1×cols row
double sum_all(const Tensor& a);
double dot(const Tensor& a, const Tensor& b);
double max_abs_diff(const Tensor& a, const Tensor& b);

double sigmoid(double x);
double softplus(double x);
// Inverse of softplus for y > 0.
double softplus_inverse(double y);

}  // namespace ops

}  // namespace kenn
