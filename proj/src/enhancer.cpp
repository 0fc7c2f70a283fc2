#include "kenn/enhancer.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace kenn {

namespace {

double slot_value(std::span<const double> row, std::size_t col, const char* what) {
    if (col >= row.size()) {
        throw ShapeError(std::string("literal_preactivations: missing ") + what + " column " +
                         std::to_string(col));
    }
    return row[col];
}

}  // namespace

std::vector<double> literal_preactivations(const Knowledge& knowledge, const Clause& clause,
                                           std::span<const double> x_row,
                                           std::span<const double> y_row,
                                           std::span<const double> edge_row) {
    std::vector<double> z;
    z.reserve(clause.literals.size());
    for (const auto& lit : clause.literals) {
        const std::size_t col = knowledge.column(lit);
        double v = 0.0;
        switch (lit.args) {
            case Args::X: v = slot_value(x_row, col, "x"); break;
            case Args::Y: v = slot_value(y_row, col, "y"); break;
            case Args::XY: v = slot_value(edge_row, col, "binary"); break;
        }
        z.push_back(lit.negated ? -v : v);
    }
    return z;
}

std::vector<double> boost_hard(std::span<const double> z_c) {
    std::vector<double> phi(z_c.size(), 0.0);
    if (z_c.empty()) return phi;
    phi[static_cast<std::size_t>(std::max_element(z_c.begin(), z_c.end()) - z_c.begin())] = 1.0;
    return phi;
}

std::vector<double> boost_soft(std::span<const double> z_c, double temperature) {
    std::vector<double> phi(z_c.size(), 0.0);
    if (z_c.empty()) return phi;
    const double mx = *std::max_element(z_c.begin(), z_c.end());
    double total = 0.0;
    for (std::size_t i = 0; i < z_c.size(); ++i) {
        phi[i] = std::exp((z_c[i] - mx) / temperature);
        total += phi[i];
    }
    for (auto& p : phi) p /= total;
    return phi;
}

std::vector<double> clause_delta(const Clause& clause, double weight, std::span<const double> z_c,
                                 BoostMode mode, double temperature) {
    if (z_c.size() != clause.literals.size()) {
        throw ShapeError("clause_delta: " + std::to_string(z_c.size()) + " pre-activations for " +
                         std::to_string(clause.literals.size()) + " literals");
    }
    auto phi = mode == BoostMode::Hard ? boost_hard(z_c) : boost_soft(z_c, temperature);
    for (std::size_t i = 0; i < phi.size(); ++i) {
        phi[i] *= clause.literals[i].negated ? -weight : weight;
    }
    return phi;
}

double godel_satisfaction(std::span<const double> z_c) {
    double best = 0.0;
    for (double z : z_c) best = std::max(best, ops::sigmoid(z));
    return best;
}

std::pair<Tensor, Tensor> rke_forward_bruteforce(const Knowledge& knowledge, const Tensor& z_U,
                                                 const Tensor& z_B, std::span<const Edge> edges,
                                                 std::span<const double> weights, BoostMode mode,
                                                 double temperature) {
    if (weights.size() != knowledge.clauses.size()) {
        throw ShapeError("rke_forward_bruteforce: one weight per clause required");
    }
    Tensor out_u = z_U;
    Tensor out_b = z_B;
    for (std::size_t ci = 0; ci < knowledge.clauses.size(); ++ci) {
        const Clause& clause = knowledge.clauses[ci];
        if (clause.kind == ClauseKind::Unary) {
            for (std::size_t a = 0; a < z_U.rows(); ++a) {
                const auto z = literal_preactivations(knowledge, clause, z_U.row(a));
                const auto d = clause_delta(clause, weights[ci], z, mode, temperature);
                for (std::size_t i = 0; i < d.size(); ++i)
                    out_u(a, knowledge.column(clause.literals[i])) += d[i];
            }
            continue;
        }
        for (std::size_t e = 0; e < edges.size(); ++e) {
            const std::size_t a = edges[e].src;
            const std::size_t b = edges[e].dst;
            const auto z = literal_preactivations(knowledge, clause, z_U.row(a), z_U.row(b),
                                                  z_B.row(e));
            const auto d = clause_delta(clause, weights[ci], z, mode, temperature);
            for (std::size_t i = 0; i < d.size(); ++i) {
                const auto& lit = clause.literals[i];
                const std::size_t col = knowledge.column(lit);
                switch (lit.args) {
                    case Args::X: out_u(a, col) += d[i]; break;
                    case Args::Y: out_u(b, col) += d[i]; break;
                    case Args::XY: out_b(e, col) += d[i]; break;
                }
            }
        }
    }
    return {std::move(out_u), std::move(out_b)};
}

std::vector<std::array<double, 3>> stacked_hard_recurrence(double z_a, double z_b, double z_c,
                                                           double w1, double w2,
                                                           std::size_t layers) {
    Knowledge k;
    k.catalog = Catalog({"A", "B", "C"}, {});
    k.clauses.push_back(parse_clause("_:nA(x),B(x)", k.catalog));
    k.clauses.push_back(parse_clause("_:nB(x),C(x)", k.catalog));
    k.unary_clauses = {0, 1};
    const double weights[] = {w1, w2};

    std::vector<std::array<double, 3>> trajectory{{z_a, z_b, z_c}};
    Tensor z{{z_a, z_b, z_c}};
    const Tensor none(0, 0);
    for (std::size_t l = 0; l < layers; ++l) {
        z = rke_forward_bruteforce(k, z, none, {}, weights, BoostMode::Hard).first;
        trajectory.push_back({z(0, 0), z(0, 1), z(0, 2)});
    }
    return trajectory;
}

namespace {

// Residues of one clause over a pre-activation matrix whose columns hold the
// literal atoms, scattered back to a matrix of the same width.
ad::Var clause_residues(ad::Var z, const std::vector<std::size_t>& cols,
                        const std::vector<double>& signs, ad::Var weight, double temperature) {
    ad::Var zc = ad::scale_cols(ad::select_cols(z, cols), signs);
    if (temperature != 1.0) zc = ad::scale(zc, 1.0 / temperature);
    ad::Var phi = ad::softmax_rows(zc);
    ad::Var d = ad::scale_by(ad::scale_cols(phi, signs), weight);
    return ad::scatter_add_cols(z.cols(), cols, d);
}

ad::Var accumulate(std::optional<ad::Var>& acc, ad::Var term) {
    acc = acc ? ad::add(*acc, term) : term;
    return *acc;
}

}  // namespace

ad::Var ke_forward_unary(const Knowledge& knowledge, ad::Var z_U,
                         std::span<const ad::Var> clause_weights, double temperature) {
    if (z_U.cols() != knowledge.catalog.unary().size()) {
        throw ShapeError("ke_forward_unary: z_U has " + std::to_string(z_U.cols()) +
                         " columns, catalog has " + std::to_string(knowledge.catalog.unary().size()));
    }
    if (clause_weights.size() != knowledge.clauses.size()) {
        throw ShapeError("ke_forward_unary: one weight per clause required");
    }
    std::optional<ad::Var> delta;
    for (auto ci : knowledge.unary_clauses) {
        const Clause& clause = knowledge.clauses[ci];
        std::vector<std::size_t> cols;
        std::vector<double> signs;
        for (const auto& lit : clause.literals) {
            cols.push_back(knowledge.column(lit));
            signs.push_back(lit.negated ? -1.0 : 1.0);
        }
        accumulate(delta, clause_residues(z_U, cols, signs, clause_weights[ci], temperature));
    }
    if (!delta) return z_U.tape->constant(Tensor(z_U.rows(), z_U.cols()));
    return *delta;
}

RkeOutput rke_forward(const Knowledge& knowledge, const GroundingIndex& index, ad::Var z_U,
                      ad::Var z_B, std::span<const ad::Var> clause_weights, double temperature) {
    if (z_U.rows() != index.num_constants || z_U.cols() != index.num_unary) {
        throw ShapeError("rke_forward: z_U " + z_U.value().shape_str() +
                         " does not match the grounding index");
    }
    if (z_B.rows() != index.rows_per_clause() || z_B.cols() != index.num_binary) {
        throw ShapeError("rke_forward: z_B " + z_B.value().shape_str() +
                         " does not match the grounding index");
    }
    ad::Var z_u = ad::add(z_U, ke_forward_unary(knowledge, z_U, clause_weights, temperature));
    if (index.clauses.empty() || index.rows_per_clause() == 0) return {z_u, z_B};

    // Pre-elab: z_M = [z_U[x] | z_U[y] | z_B], one row per grounding.
    const ad::Var parts[] = {ad::gather_rows(z_U, index.x_rows), ad::gather_rows(z_U, index.y_rows),
                             z_B};
    ad::Var z_m = ad::concat_cols(parts);

    std::optional<ad::Var> delta_m;
    for (const auto& gc : index.clauses) {
        std::vector<std::size_t> cols;
        std::vector<double> signs;
        for (const auto& slot : gc.literals) {
            cols.push_back(slot.joined_column);
            signs.push_back(slot.sign);
        }
        accumulate(delta_m, clause_residues(z_m, cols, signs, clause_weights[gc.clause], temperature));
    }

    // Post-elab: sum the residues of every occurrence of each atom.
    const std::size_t qu = index.num_unary;
    std::vector<std::size_t> x_cols(qu), y_cols(qu), b_cols(index.num_binary);
    for (std::size_t j = 0; j < qu; ++j) {
        x_cols[j] = j;
        y_cols[j] = qu + j;
    }
    for (std::size_t j = 0; j < b_cols.size(); ++j) b_cols[j] = 2 * qu + j;

    ad::Var from_x = ad::scatter_add_rows(index.num_constants, index.x_rows,
                                          ad::select_cols(*delta_m, x_cols));
    ad::Var from_y = ad::scatter_add_rows(index.num_constants, index.y_rows,
                                          ad::select_cols(*delta_m, y_cols));
    z_u = ad::add(z_u, ad::add(from_x, from_y));
    ad::Var z_b = ad::add(z_B, ad::select_cols(*delta_m, b_cols));
    return {z_u, z_b};
}

namespace {

std::vector<ad::Var> constant_weights(ad::Tape& tape, std::span<const double> weights) {
    std::vector<ad::Var> out;
    for (double w : weights) out.push_back(tape.constant(Tensor::scalar(w)));
    return out;
}

}  // namespace

Tensor ke_forward_unary(const Knowledge& knowledge, const Tensor& z_U,
                        std::span<const double> weights, double temperature) {
    ad::Tape tape;
    auto w = constant_weights(tape, weights);
    return ke_forward_unary(knowledge, tape.constant(z_U), w, temperature).value();
}

std::pair<Tensor, Tensor> rke_forward(const Knowledge& knowledge, const GroundingIndex& index,
                                      const Tensor& z_U, const Tensor& z_B,
                                      std::span<const double> weights, double temperature) {
    ad::Tape tape;
    auto w = constant_weights(tape, weights);
    auto out = rke_forward(knowledge, index, tape.constant(z_U), tape.constant(z_B), w, temperature);
    return {out.z_U.value(), out.z_B.value()};
}

Tensor binary_preactivations(const Tensor& truth, double saturation) {
    Tensor out(truth.rows(), truth.cols());
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const double v = truth.values()[i];
        double z = 0.0;
        if (v >= 1.0) {
            z = saturation;
        } else if (v <= 0.0) {
            z = -saturation;
        } else {
            z = std::clamp(std::log(v / (1.0 - v)), -saturation, saturation);
        }
        out.values()[i] = z;
    }
    return out;
}

KennModel::KennModel(Knowledge knowledge, ModelSpec spec, std::uint64_t seed)
    : knowledge_(std::move(knowledge)), spec_(std::move(spec)) {
    const std::size_t q = knowledge_.catalog.unary().size();
    if (spec_.input_dim == 0) throw ConfigError("model: input_dim must be positive");
    if (q == 0) throw ConfigError("model: no unary predicates to predict");
    if (!(spec_.temperature > 0.0)) throw ConfigError("model: temperature must be positive");

    std::mt19937_64 rng(seed);
    std::vector<std::size_t> dims{spec_.input_dim};
    dims.insert(dims.end(), spec_.hidden.begin(), spec_.hidden.end());
    dims.push_back(q);
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        const double limit = std::sqrt(6.0 / static_cast<double>(dims[l] + dims[l + 1]));
        std::uniform_real_distribution<double> init(-limit, limit);
        Tensor w(dims[l], dims[l + 1]);
        for (auto& v : w.values()) v = init(rng);
        mlp_.emplace_back(params_.size(), params_.size() + 1);
        params_.push_back(std::move(w));
        params_.emplace_back(1, dims[l + 1]);
        names_.push_back("mlp." + std::to_string(l) + ".weight");
        names_.push_back("mlp." + std::to_string(l) + ".bias");
        clause_param_.insert(clause_param_.end(), {false, false});
    }

    std::vector<std::optional<std::size_t>> shared(knowledge_.clauses.size());
    for (std::size_t l = 0; l < spec_.ke_layers; ++l) {
        RelationalKE layer;
        for (std::size_t ci = 0; ci < knowledge_.clauses.size(); ++ci) {
            ClauseEnhancer ce{ci, knowledge_.clauses[ci].weight, std::nullopt};
            if (ce.weight.learnable) {
                if (spec_.share_weights && shared[ci]) {
                    ce.param = shared[ci];
                } else {
                    if (!(ce.weight.value > 0.0)) {
                        throw ConfigError("learnable clause weight init must be positive");
                    }
                    ce.param = params_.size();
                    params_.push_back(Tensor::scalar(ops::softplus_inverse(ce.weight.value)));
                    names_.push_back(spec_.share_weights
                                         ? "ke.shared.clause." + std::to_string(ci)
                                         : "ke." + std::to_string(l) + ".clause." + std::to_string(ci));
                    clause_param_.push_back(true);
                    shared[ci] = ce.param;
                }
            } else if (!(ce.weight.value >= 0.0)) {
                throw ConfigError("fixed clause weight must be non-negative");
            }
            layer.enhancers.push_back(ce);
        }
        layers_.push_back(std::move(layer));
    }
}

ad::Var KennModel::base_forward(ad::Tape& tape, const Tensor& features,
                                std::span<const ad::Var> params) const {
    if (features.cols() != spec_.input_dim) {
        throw ShapeError("model: features have " + std::to_string(features.cols()) +
                         " columns, expected " + std::to_string(spec_.input_dim));
    }
    ad::Var h = tape.constant(features);
    for (std::size_t l = 0; l < mlp_.size(); ++l) {
        h = ad::add_row_broadcast(ad::matmul(h, params[mlp_[l].first]), params[mlp_[l].second]);
        if (l + 1 < mlp_.size()) h = ad::relu(h);
    }
    return h;
}

ForwardPass KennModel::forward(ad::Tape& tape, const Tensor& features, const Tensor& binary_given,
                               const GroundingIndex& index, bool track) const {
    ForwardPass pass;
    for (const auto& p : params_) pass.params.push_back(track ? tape.parameter(p) : tape.constant(p));

    ad::Var z_u = base_forward(tape, features, pass.params);
    if (binary_given.rows() != index.rows_per_clause()) {
        throw ShapeError("model: binary facts for " + std::to_string(binary_given.rows()) +
                         " pairs but the grounding index has " +
                         std::to_string(index.rows_per_clause()));
    }
    ad::Var z_b = tape.constant(binary_preactivations(binary_given, spec_.binary_saturation));

    for (const auto& layer : layers_) {
        std::vector<ad::Var> weights;
        weights.reserve(layer.enhancers.size());
        for (const auto& ce : layer.enhancers) {
            weights.push_back(ce.param ? ad::softplus(pass.params[*ce.param])
                                       : tape.constant(Tensor::scalar(ce.weight.value)));
        }
        auto out = rke_forward(knowledge_, index, z_u, z_b, weights, spec_.temperature);
        z_u = out.z_U;
        z_b = out.z_B;
    }
    pass.z_U = z_u;
    pass.z_B = z_b;
    pass.y_U = ad::sigmoid(z_u);
    pass.y_B = ad::sigmoid(z_b);
    return pass;
}

Tensor KennModel::predict(const GraphData& data) const {
    auto index = build_grounding_index(knowledge_, data.num_constants(), data.edges);
    return predict(data, index);
}

Tensor KennModel::predict(const GraphData& data, const GroundingIndex& index) const {
    if (!(data.catalog == knowledge_.catalog)) {
        throw ConfigError("model catalog does not match the data schema");
    }
    ad::Tape tape;
    return forward(tape, data.features, data.binary_given, index, false).y_U.value();
}

std::vector<std::vector<double>> KennModel::effective_weights() const {
    std::vector<std::vector<double>> out;
    for (const auto& layer : layers_) {
        std::vector<double> row;
        for (const auto& ce : layer.enhancers) {
            row.push_back(ce.param ? ops::softplus(params_[*ce.param].item()) : ce.weight.value);
        }
        out.push_back(std::move(row));
    }
    return out;
}

void KennModel::set_params(std::vector<Tensor> params) {
    if (params.size() != params_.size()) {
        throw ShapeError("model: expected " + std::to_string(params_.size()) + " parameters, got " +
                         std::to_string(params.size()));
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (!params[i].same_shape(params_[i])) {
            throw ShapeError("model: parameter " + names_[i] + " has shape " +
                             params[i].shape_str() + ", expected " + params_[i].shape_str());
        }
    }
    params_ = std::move(params);
}

Knowledge with_fixed_weights(Knowledge knowledge, double w) {
    for (auto& c : knowledge.clauses) c.weight = ClauseWeight::fixed(w);
    return knowledge;
}

}  // namespace kenn
