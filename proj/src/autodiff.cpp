#include "kenn/autodiff.hpp"

#include <algorithm>
#include <cmath>

namespace kenn::ad {

const Tensor& Var::value() const { return tape->value(*this); }

Var Tape::constant(Tensor value) {
    if (!value.all_finite()) throw NumericError("constant: non-finite value");
    nodes_.push_back(Node{std::move(value), {}, false, {}});
    return {this, nodes_.size() - 1};
}

Var Tape::parameter(Tensor value) {
    if (!value.all_finite()) throw NumericError("parameter: non-finite value");
    nodes_.push_back(Node{std::move(value), {}, true, {}});
    params_.push_back(nodes_.size() - 1);
    return {this, nodes_.size() - 1};
}

Var Tape::record(Tensor value, std::span<const Var> inputs, BackwardFn fn) {
    bool tracked = false;
    for (const auto& in : inputs) {
        if (in.tape != this) throw Error("op mixes vars from different tapes");
        tracked = tracked || nodes_[in.id].requires_grad;
    }
    nodes_.push_back(Node{std::move(value), {}, tracked, tracked ? std::move(fn) : BackwardFn{}});
    return {this, nodes_.size() - 1};
}

void Tape::accumulate(Var target, const Tensor& g) {
    Node& n = nodes_[target.id];
    if (!n.requires_grad) return;
    if (!g.same_shape(n.value)) {
        throw ShapeError("gradient shape " + g.shape_str() + " does not match value " +
                         n.value.shape_str());
    }
    if (n.grad.empty() && !n.value.empty()) {
        n.grad = g;
    } else {
        auto& dst = n.grad.values();
        for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += g.values()[i];
    }
}

void Tape::backward(Var output) {
    if (backward_done_) throw Error("backward() called twice on the same tape");
    Node& out = nodes_.at(output.id);
    if (out.value.rows() != 1 || out.value.cols() != 1) {
        throw ShapeError("backward() needs a scalar output, got " + out.value.shape_str());
    }
    backward_done_ = true;
    if (!out.requires_grad) return;
    out.grad = Tensor::scalar(1.0);
    for (std::size_t id = output.id + 1; id-- > 0;) {
        Node& n = nodes_[id];
        if (!n.backward || n.grad.empty()) continue;
        if (!n.grad.all_finite()) throw NumericError("backward: non-finite gradient");
        n.backward(*this, id);
    }
}

Tensor Tape::grad(Var v) const {
    const Node& n = nodes_.at(v.id);
    if (n.grad.empty()) return Tensor(n.value.rows(), n.value.cols());
    return n.grad;
}

namespace {

Var record1(Var a, Tensor value, Tape::BackwardFn fn) {
    const Var in[] = {a};
    return a.tape->record(std::move(value), in, std::move(fn));
}

Var record2(Var a, Var b, Tensor value, Tape::BackwardFn fn) {
    const Var in[] = {a, b};
    return a.tape->record(std::move(value), in, std::move(fn));
}

}  // namespace

Var matmul(Var a, Var b) {
    return record2(a, b, ops::matmul(a.value(), b.value()), [a, b](Tape& t, std::size_t self) {
        const Tensor& g = t.grad_ref(self);
        if (t.requires_grad(a)) t.accumulate(a, ops::matmul_a_bt(g, b.value()));
        if (t.requires_grad(b)) t.accumulate(b, ops::matmul_at_b(a.value(), g));
    });
}

Var add(Var a, Var b) {
    return record2(a, b, ops::add(a.value(), b.value()), [a, b](Tape& t, std::size_t self) {
        t.accumulate(a, t.grad_ref(self));
        t.accumulate(b, t.grad_ref(self));
    });
}

Var sub(Var a, Var b) {
    return record2(a, b, ops::sub(a.value(), b.value()), [a, b](Tape& t, std::size_t self) {
        t.accumulate(a, t.grad_ref(self));
        t.accumulate(b, ops::scale(t.grad_ref(self), -1.0));
    });
}

Var add_row_broadcast(Var a, Var row) {
    return record2(a, row, ops::add_row_broadcast(a.value(), row.value()),
                   [a, row](Tape& t, std::size_t self) {
                       t.accumulate(a, t.grad_ref(self));
                       if (t.requires_grad(row)) t.accumulate(row, ops::sum_rows(t.grad_ref(self)));
                   });
}

Var scale(Var a, double s) {
    return record1(a, ops::scale(a.value(), s), [a, s](Tape& t, std::size_t self) {
        t.accumulate(a, ops::scale(t.grad_ref(self), s));
    });
}

Var neg(Var a) { return scale(a, -1.0); }

Var scale_by(Var a, Var s) {
    const double sv = s.value().item();
    return record2(a, s, ops::scale(a.value(), sv), [a, s](Tape& t, std::size_t self) {
        const Tensor& g = t.grad_ref(self);
        if (t.requires_grad(a)) t.accumulate(a, ops::scale(g, s.value().item()));
        if (t.requires_grad(s)) t.accumulate(s, Tensor::scalar(ops::dot(g, a.value())));
    });
}

Var scale_cols(Var a, std::vector<double> factors) {
    Tensor out = ops::scale_cols(a.value(), factors);
    return record1(a, std::move(out), [a, f = std::move(factors)](Tape& t, std::size_t self) {
        t.accumulate(a, ops::scale_cols(t.grad_ref(self), f));
    });
}

Var relu(Var a) {
    return record1(a, ops::relu(a.value()), [a](Tape& t, std::size_t self) {
        Tensor g = t.grad_ref(self);
        const auto& x = a.value().values();
        auto& gv = g.values();
        for (std::size_t i = 0; i < gv.size(); ++i)
            if (x[i] <= 0.0) gv[i] = 0.0;
        t.accumulate(a, g);
    });
}

Var sigmoid(Var a) {
    return record1(a, ops::sigmoid(a.value()), [a](Tape& t, std::size_t self) {
        Tensor g = t.grad_ref(self);
        const auto& y = t.value({&t, self}).values();
        auto& gv = g.values();
        for (std::size_t i = 0; i < gv.size(); ++i) gv[i] *= y[i] * (1.0 - y[i]);
        t.accumulate(a, g);
    });
}

Var softplus(Var a) {
    return record1(a, ops::softplus(a.value()), [a](Tape& t, std::size_t self) {
        Tensor g = t.grad_ref(self);
        const auto& x = a.value().values();
        auto& gv = g.values();
        for (std::size_t i = 0; i < gv.size(); ++i) gv[i] *= ops::sigmoid(x[i]);
        t.accumulate(a, g);
    });
}

Var softmax_rows(Var a) {
    return record1(a, ops::softmax_rows(a.value()), [a](Tape& t, std::size_t self) {
        const Tensor& y = t.value({&t, self});
        const Tensor& g = t.grad_ref(self);
        Tensor dz(y.rows(), y.cols());
        for (std::size_t i = 0; i < y.rows(); ++i) {
            auto yr = y.row(i);
            auto gr = g.row(i);
            double inner = 0.0;
            for (std::size_t j = 0; j < yr.size(); ++j) inner += yr[j] * gr[j];
            auto dr = dz.row(i);
            for (std::size_t j = 0; j < yr.size(); ++j) dr[j] = yr[j] * (gr[j] - inner);
        }
        t.accumulate(a, dz);
    });
}

Var concat_cols(std::span<const Var> parts) {
    if (parts.empty()) throw ShapeError("concat_cols: no inputs");
    std::vector<Tensor> values;
    values.reserve(parts.size());
    for (const auto& p : parts) values.push_back(p.value());
    std::vector<Var> inputs(parts.begin(), parts.end());
    Tape* tape = parts.front().tape;
    return tape->record(ops::concat_cols(values), inputs, [inputs](Tape& t, std::size_t self) {
        const Tensor& g = t.grad_ref(self);
        std::size_t off = 0;
        for (const auto& in : inputs) {
            const std::size_t w = in.cols();
            if (t.requires_grad(in)) {
                std::vector<std::size_t> cols(w);
                for (std::size_t j = 0; j < w; ++j) cols[j] = off + j;
                t.accumulate(in, ops::select_cols(g, cols));
            }
            off += w;
        }
    });
}

Var select_cols(Var a, std::vector<std::size_t> cols) {
    Tensor out = ops::select_cols(a.value(), cols);
    const std::size_t width = a.cols();
    return record1(a, std::move(out), [a, width, c = std::move(cols)](Tape& t, std::size_t self) {
        t.accumulate(a, ops::scatter_add_cols(width, c, t.grad_ref(self)));
    });
}

Var scatter_add_cols(std::size_t target_cols, std::vector<std::size_t> cols, Var src) {
    Tensor out = ops::scatter_add_cols(target_cols, cols, src.value());
    return record1(src, std::move(out), [src, c = std::move(cols)](Tape& t, std::size_t self) {
        t.accumulate(src, ops::select_cols(t.grad_ref(self), c));
    });
}

// The index vectors belong to a GroundingIndex or Split that outlives the tape,
// so they are captured by pointer.
Var gather_rows(Var src, const RowIndex& index) {
    const std::size_t n = src.rows();
    return record1(src, ops::gather_rows(src.value(), index),
                   [src, n, idx = &index](Tape& t, std::size_t self) {
                       t.accumulate(src, ops::scatter_add_rows(n, *idx, t.grad_ref(self)));
                   });
}

Var scatter_add_rows(std::size_t target_rows, const RowIndex& index, Var src) {
    return record1(src, ops::scatter_add_rows(target_rows, index, src.value()),
                   [src, idx = &index](Tape& t, std::size_t self) {
                       t.accumulate(src, ops::gather_rows(t.grad_ref(self), *idx));
                   });
}

Var sum_all(Var a) {
    return record1(a, Tensor::scalar(ops::sum_all(a.value())), [a](Tape& t, std::size_t self) {
        const double g = t.grad_ref(self).item();
        t.accumulate(a, Tensor(a.rows(), a.cols(), g));
    });
}

Var bce_loss(Var y, const Tensor& labels, const Tensor& mask) {
    const Tensor& yv = y.value();
    if (!yv.same_shape(labels) || !yv.same_shape(mask)) {
        throw ShapeError("bce_loss: shapes " + yv.shape_str() + ", " + labels.shape_str() + ", " +
                         mask.shape_str());
    }
    double count = 0.0;
    double total = 0.0;
    for (std::size_t i = 0; i < yv.size(); ++i) {
        if (mask.values()[i] == 0.0) continue;
        const double p = std::clamp(yv.values()[i], kBceEpsilon, 1.0 - kBceEpsilon);
        const double l = labels.values()[i];
        total -= l * std::log(p) + (1.0 - l) * std::log(1.0 - p);
        count += 1.0;
    }
    if (count == 0.0) throw DataError("bce_loss: empty mask");
    const double loss = total / count;
    if (!std::isfinite(loss)) throw NumericError("bce_loss: non-finite loss");
    return record1(y, Tensor::scalar(loss),
                   [y, labels, mask, count](Tape& t, std::size_t self) {
                       const double g = t.grad_ref(self).item() / count;
                       const Tensor& yv = y.value();
                       Tensor dy(yv.rows(), yv.cols());
                       for (std::size_t i = 0; i < yv.size(); ++i) {
                           if (mask.values()[i] == 0.0) continue;
                           const double raw = yv.values()[i];
                           if (raw < kBceEpsilon || raw > 1.0 - kBceEpsilon) continue;
                           const double l = labels.values()[i];
                           dy.values()[i] = g * (-l / raw + (1.0 - l) / (1.0 - raw));
                       }
                       t.accumulate(y, dy);
                   });
}

double check_gradient(const ScalarProgram& f, std::span<const Tensor> params, double step) {
    std::vector<Tensor> analytic;
    {
        Tape tape;
        std::vector<Var> vars;
        for (const auto& p : params) vars.push_back(tape.parameter(p));
        Var out = f(tape, vars);
        tape.backward(out);
        for (const auto& v : vars) {
            Tensor g = tape.grad(v);
            if (!g.all_finite()) throw NumericError("check_gradient: non-finite gradient");
            analytic.push_back(std::move(g));
        }
    }

    std::vector<Tensor> point(params.begin(), params.end());
    auto evaluate = [&]() {
        Tape tape;
        std::vector<Var> vars;
        for (const auto& p : point) vars.push_back(tape.constant(p));
        return f(tape, vars).value().item();
    };

    double worst = 0.0;
    for (std::size_t p = 0; p < point.size(); ++p) {
        for (std::size_t i = 0; i < point[p].size(); ++i) {
            double& x = point[p].values()[i];
            const double saved = x;
            x = saved + step;
            const double up = evaluate();
            x = saved - step;
            const double down = evaluate();
            x = saved;
            const double fd = (up - down) / (2.0 * step);
            const double ad = analytic[p].values()[i];
            worst = std::max(worst, std::abs(ad - fd) / std::max(1.0, std::abs(fd)));
        }
    }
    return worst;
}

}  // namespace kenn::ad
