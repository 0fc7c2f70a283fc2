#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "kenn/tensor.hpp"

namespace kenn::ad {

class Tape;

// Handle to a value recorded on a Tape. Cheap to copy; valid while the tape lives.
struct Var {
    Tape* tape = nullptr;
    std::size_t id = 0;

    const Tensor& value() const;
    std::size_t rows() const { return value().rows(); }
    std::size_t cols() const { return value().cols(); }
};

// Append-only record of a computation. Single owner; build a fresh tape per
// forward/backward pass.
class Tape {
public:
    using BackwardFn = std::function<void(Tape&, std::size_t self)>;

    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Var constant(Tensor value);
    // Trainable leaf. Its gradient is available after backward().
    Var parameter(Tensor value);

    // Used by the op implementations. `fn` is only stored when some input
    // requires a gradient.
    Var record(Tensor value, std::span<const Var> inputs, BackwardFn fn);

    void backward(Var output);

    const Tensor& value(Var v) const { return nodes_.at(v.id).value; }
    // Gradient of the last backward() output w.r.t. v; zeros if v was unreached.
    Tensor grad(Var v) const;
    bool requires_grad(Var v) const { return nodes_.at(v.id).requires_grad; }

    // Called from backward functions.
    const Tensor& grad_ref(std::size_t id) const { return nodes_[id].grad; }
    void accumulate(Var target, const Tensor& g);

    const std::vector<std::size_t>& parameters() const { return params_; }
    std::size_t size() const { return nodes_.size(); }

private:
    struct Node {
        Tensor value;
        Tensor grad;
        bool requires_grad = false;
        BackwardFn backward;
    };

    std::vector<Node> nodes_;
    std::vector<std::size_t> params_;
    bool backward_done_ = false;
};

Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var add_row_broadcast(Var a, Var row);
Var scale(Var a, double s);
Var neg(Var a);
// a · s where s is a tracked 1×1 tensor.
Var scale_by(Var a, Var s);
Var scale_cols(Var a, std::vector<double> factors);
Var relu(Var a);
Var sigmoid(Var a);
Var softplus(Var a);
Var softmax_rows(Var a);
Var concat_cols(std::span<const Var> parts);
Var select_cols(Var a, std::vector<std::size_t> cols);
Var scatter_add_cols(std::size_t target_cols, std::vector<std::size_t> cols, Var src);
Var gather_rows(Var src, const RowIndex& index);
Var scatter_add_rows(std::size_t target_rows, const RowIndex& index, Var src);
Var sum_all(Var a);

inline constexpr double kBceEpsilon = 1e-7;

// Mean binary cross-entropy over entries with mask = 1. Predictions are
// clamped to [eps, 1 - eps].
Var bce_loss(Var y, const Tensor& labels, const Tensor& mask);

using ScalarProgram = std::function<Var(Tape&, std::span<const Var>)>;

// Max over all parameter coordinates of |g_ad - g_fd| / max(1, |g_fd|), with
// central differences of the given step.
double check_gradient(const ScalarProgram& f, std::span<const Tensor> params,
                      double step = 1e-5);

}  // namespace kenn::ad
