#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "kenn/tensor.hpp"

namespace kenn {

enum class OptimizerKind { Sgd, Adam };

struct OptimizerConfig {
    OptimizerKind kind = OptimizerKind::Adam;
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Stateful first-order optimizer. `lr_scale` (one entry per parameter, or
// empty) multiplies the base learning rate, which lets clause weights use a
// different step size from the network weights.
class Optimizer {
public:
    explicit Optimizer(OptimizerConfig config) : config_(config) {}

    void step(std::span<Tensor> params, std::span<const Tensor> grads,
              std::span<const double> lr_scale = {});

    const OptimizerConfig& config() const { return config_; }
    std::size_t steps_taken() const { return t_; }

private:
    OptimizerConfig config_;
    std::vector<Tensor> m_;
    std::vector<Tensor> v_;
    std::size_t t_ = 0;
};

}  // namespace kenn
