#include "kenn/optim.hpp"

#include <cmath>

namespace kenn {

void Optimizer::step(std::span<Tensor> params, std::span<const Tensor> grads,
                     std::span<const double> lr_scale) {
    if (params.size() != grads.size()) {
        throw ShapeError("optimizer: " + std::to_string(params.size()) + " params but " +
                         std::to_string(grads.size()) + " grads");
    }
    if (!lr_scale.empty() && lr_scale.size() != params.size()) {
        throw ShapeError("optimizer: lr_scale length mismatch");
    }
    for (std::size_t p = 0; p < params.size(); ++p) {
        if (!params[p].same_shape(grads[p])) {
            throw ShapeError("optimizer: param " + params[p].shape_str() + " vs grad " +
                             grads[p].shape_str());
        }
    }

    ++t_;
    if (config_.kind == OptimizerKind::Adam && m_.empty()) {
        for (const auto& p : params) {
            m_.emplace_back(p.rows(), p.cols());
            v_.emplace_back(p.rows(), p.cols());
        }
    }

    const double b1t = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
    const double b2t = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));

    for (std::size_t p = 0; p < params.size(); ++p) {
        const double lr = config_.lr * (lr_scale.empty() ? 1.0 : lr_scale[p]);
        auto& x = params[p].values();
        const auto& g = grads[p].values();
        if (config_.kind == OptimizerKind::Sgd) {
            for (std::size_t i = 0; i < x.size(); ++i) x[i] -= lr * g[i];
        } else {
            auto& m = m_[p].values();
            auto& v = v_[p].values();
            for (std::size_t i = 0; i < x.size(); ++i) {
                m[i] = config_.beta1 * m[i] + (1.0 - config_.beta1) * g[i];
                v[i] = config_.beta2 * v[i] + (1.0 - config_.beta2) * g[i] * g[i];
                const double mhat = m[i] / b1t;
                const double vhat = v[i] / b2t;
                x[i] -= lr * mhat / (std::sqrt(vhat) + config_.eps);
            }
        }
        if (!params[p].all_finite()) throw NumericError("optimizer: non-finite update");
    }
}

}  // namespace kenn
