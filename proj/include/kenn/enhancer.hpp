#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "kenn/autodiff.hpp"
#include "kenn/clause.hpp"
#include "kenn/graph.hpp"

namespace kenn {

enum class BoostMode { Soft, Hard };

// ---------------------------------------------------------------------------
// Scalar reference path. Used by tests, the brute-force oracle and the
// stacked-layer analysis; the model itself runs on the tape path below.

// Literal pre-activations of one grounding: the atom pre-activation for a
// positive literal, its negation for a negated one. `x_row`/`y_row` are z_U
// rows of the constants bound to x and y, `edge_row` the z_B row of the pair.
std::vector<double> literal_preactivations(const Knowledge& knowledge, const Clause& clause,
                                           std::span<const double> x_row,
                                           std::span<const double> y_row = {},
                                           std::span<const double> edge_row = {});

// One-hot at the argmax; ties go to the lowest index.
std::vector<double> boost_hard(std::span<const double> z_c);
std::vector<double> boost_soft(std::span<const double> z_c, double temperature = 1.0);

// Residue proposed for the atom of each literal: +w·φ_i for positive
// literals, -w·φ_i for negated ones.
std::vector<double> clause_delta(const Clause& clause, double weight, std::span<const double> z_c,
                                 BoostMode mode, double temperature = 1.0);

// Literal implementation of the enhancement equations with plain loops over
// clauses, groundings and literals. `weights` has one entry per clause of
// `knowledge`. Returns the updated (z_U, z_B).
std::pair<Tensor, Tensor> rke_forward_bruteforce(const Knowledge& knowledge, const Tensor& z_U,
                                                 const Tensor& z_B, std::span<const Edge> edges,
                                                 std::span<const double> weights,
                                                 BoostMode mode = BoostMode::Soft,
                                                 double temperature = 1.0);

// Pre-activations (A, B, C) per layer for c1 = ¬A ∨ B, c2 = ¬B ∨ C with hard
// boosting and the same weights in every layer. Entry 0 is the input.
std::vector<std::array<double, 3>> stacked_hard_recurrence(double z_a, double z_b, double z_c,
                                                           double w1, double w2,
                                                           std::size_t layers);

// Gödel (max) t-conorm of the literal truth values σ(z_c).
double godel_satisfaction(std::span<const double> z_c);

// ---------------------------------------------------------------------------
// Differentiable layers.

// `clause_weights` holds one 1×1 var per clause of `knowledge` (entries for
// clauses of the other kind are ignored).
ad::Var ke_forward_unary(const Knowledge& knowledge, ad::Var z_U,
                         std::span<const ad::Var> clause_weights, double temperature = 1.0);

struct RkeOutput {
    ad::Var z_U;
    ad::Var z_B;
};

RkeOutput rke_forward(const Knowledge& knowledge, const GroundingIndex& index, ad::Var z_U,
                      ad::Var z_B, std::span<const ad::Var> clause_weights,
                      double temperature = 1.0);

// Tensor convenience wrappers with constant weights.
Tensor ke_forward_unary(const Knowledge& knowledge, const Tensor& z_U,
                        std::span<const double> weights, double temperature = 1.0);
std::pair<Tensor, Tensor> rke_forward(const Knowledge& knowledge, const GroundingIndex& index,
                                      const Tensor& z_U, const Tensor& z_B,
                                      std::span<const double> weights, double temperature = 1.0);

// ---------------------------------------------------------------------------
// Model.

struct ClauseEnhancer {
    std::size_t clause = 0;             // index into Knowledge::clauses
    ClauseWeight weight;
    std::optional<std::size_t> param;   // model parameter holding ω when learnable
};

// One enhancer per clause, in knowledge order; K_U / K_B membership comes from
// the clause kind.
struct RelationalKE {
    std::vector<ClauseEnhancer> enhancers;
};

struct ModelSpec {
    std::size_t input_dim = 0;
    std::vector<std::size_t> hidden{50, 50, 50};
    std::size_t ke_layers = 3;
    bool share_weights = false;
    double temperature = 1.0;
    double binary_saturation = 25.0;
};

// Given truth values in [0, 1] mapped to pre-activations: 1 → +s, 0 → -s,
// anything in between to its logit clamped to [-s, s].
Tensor binary_preactivations(const Tensor& truth, double saturation);

struct ForwardPass {
    ad::Var z_U;  // final unary pre-activations
    ad::Var z_B;
    ad::Var y_U;
    ad::Var y_B;
    std::vector<ad::Var> params;
};

class KennModel {
public:
    KennModel(Knowledge knowledge, ModelSpec spec, std::uint64_t seed);

    const Knowledge& knowledge() const { return knowledge_; }
    const ModelSpec& spec() const { return spec_; }
    const std::vector<RelationalKE>& layers() const { return layers_; }

    std::vector<Tensor>& params() { return params_; }
    const std::vector<Tensor>& params() const { return params_; }
    const std::vector<std::string>& param_names() const { return names_; }
    bool is_clause_weight(std::size_t param) const { return clause_param_[param]; }

    // `track` registers parameters as trainable leaves; otherwise they enter
    // the tape as constants.
    ForwardPass forward(ad::Tape& tape, const Tensor& features, const Tensor& binary_given,
                        const GroundingIndex& index, bool track = true) const;

    // Base network only: z_U = MLP(features).
    ad::Var base_forward(ad::Tape& tape, const Tensor& features,
                         std::span<const ad::Var> params) const;

    // σ of the final unary pre-activations over every edge of `data`.
    Tensor predict(const GraphData& data) const;
    Tensor predict(const GraphData& data, const GroundingIndex& index) const;

    // Effective clause weight per layer (outer) and clause (inner).
    std::vector<std::vector<double>> effective_weights() const;

    // Used by checkpoint loading.
    void set_params(std::vector<Tensor> params);

private:
    Knowledge knowledge_;
    ModelSpec spec_;
    std::vector<Tensor> params_;
    std::vector<std::string> names_;
    std::vector<bool> clause_param_;
    std::vector<std::pair<std::size_t, std::size_t>> mlp_;  // (weight, bias) param ids
    std::vector<RelationalKE> layers_;
};

// Copy of `knowledge` with every clause weight fixed to `w`.
Knowledge with_fixed_weights(Knowledge knowledge, double w);

}  // namespace kenn
