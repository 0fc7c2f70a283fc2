#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "kenn/clause.hpp"
#include "kenn/tensor.hpp"

namespace kenn {

struct Edge {
    std::size_t src = 0;
    std::size_t dst = 0;

    friend bool operator==(const Edge&, const Edge&) = default;
};

// Constants with features and one-hot labels over the unary catalog, plus an
// edge list whose binary predicates are given as data.
struct GraphData {
    Catalog catalog;
    Tensor features;      // m × n
    Tensor labels;        // m × |unary catalog|, one-hot
    std::vector<Edge> edges;
    Tensor binary_given;  // |edges| × |binary catalog|, truth values in [0, 1]
    std::vector<std::string> node_ids;

    std::size_t num_constants() const { return features.rows(); }
    std::size_t num_edges() const { return edges.size(); }
    std::vector<std::size_t> label_index() const;

    // Throws DataError if any invariant is broken.
    void validate(bool allow_self_loops = false) const;
};

struct LoadOptions {
    bool symmetrize = false;
    bool allow_self_loops = false;
};

// Node file: `id \t f_0 \t ... \t f_{n-1} \t label`. Edge file: `src \t dst`
// with an optional third column naming the binary predicate (defaults to the
// first one). Duplicate edges are kept and reported through `warnings`.
GraphData load_graph(const std::filesystem::path& node_file,
                     const std::filesystem::path& edge_file, const Catalog& schema,
                     const LoadOptions& options = {}, std::vector<std::string>* warnings = nullptr);

void write_graph(const GraphData& data, const std::filesystem::path& node_file,
                 const std::filesystem::path& edge_file);

// Adds (dst, src) for every edge whose reverse is not already present.
GraphData symmetrized(const GraphData& data);

// Constants `nodes` (renumbered in the given order) and edges `edge_ids`, which
// must only touch those constants.
GraphData induced_subgraph(const GraphData& data, std::span<const std::size_t> nodes,
                           std::span<const std::size_t> edge_ids);

enum class SplitMode { Inductive, Transductive };

std::string_view to_string(SplitMode mode);
SplitMode parse_split_mode(std::string_view text);

struct Split {
    SplitMode mode = SplitMode::Inductive;
    std::vector<std::size_t> train_nodes;
    std::vector<std::size_t> test_nodes;
    std::vector<std::size_t> train_edges;  // indices into GraphData::edges
    std::vector<std::size_t> eval_edges;

    friend bool operator==(const Split&, const Split&) = default;
};

// Balanced split: round(fraction·m) training nodes, with per-class counts
// differing by at most one.
Split make_split(const GraphData& data, double fraction, SplitMode mode, std::uint64_t seed);

enum class LiteralSource { UnaryX, UnaryY, Binary };

struct LiteralSlot {
    LiteralSource source = LiteralSource::UnaryX;
    std::size_t column = 0;         // column in z_U or z_B
    std::size_t joined_column = 0;  // column in z_M = [z_U[x] | z_U[y] | z_B]
    double sign = 1.0;              // -1 for negated literals
};

struct GroundedClause {
    std::size_t clause = 0;  // index into Knowledge::clauses
    std::vector<LiteralSlot> literals;
};

// Gather/scatter plan for binary clauses over a fixed edge list. Row r of z_M
// joins z_U[x_rows[r]], z_U[y_rows[r]] and z_B[r]; residues in the x and y
// blocks are scattered back through x_rows / y_rows for every unary column,
// and the z_B block maps to edge rows one-to-one.
struct GroundingIndex {
    std::size_t num_constants = 0;
    std::size_t num_unary = 0;
    std::size_t num_binary = 0;
    RowIndex x_rows;
    RowIndex y_rows;
    std::vector<GroundedClause> clauses;

    std::size_t rows_per_clause() const { return x_rows.size(); }
    std::size_t total_grounding_rows() const { return x_rows.size() * clauses.size(); }
    std::size_t joined_width() const { return 2 * num_unary + num_binary; }
};

GroundingIndex build_grounding_index(const Knowledge& knowledge, std::size_t num_constants,
                                     std::span<const Edge> edges);
GroundingIndex build_grounding_index(const Knowledge& knowledge, const GraphData& data,
                                     std::span<const std::size_t> edge_subset);

// All m² ordered pairs, self pairs included.
std::vector<Edge> dense_pairs(std::size_t m);

struct SynthParams {
    std::size_t nodes = 600;
    std::size_t classes = 6;
    std::size_t feat_dim = 120;
    double p_in = 0.10;
    double p_out = 0.004;
    std::uint64_t seed = 0;
    std::size_t words_per_class = 20;
    double p_word_on = 0.20;    // chance a class signature word is present
    double p_word_noise = 0.02; // chance any word is present
};

// Stochastic-block citation graph with class-conditional bag-of-words
// features. Classes are named C0..C{k-1}; the binary predicate is Cite.
GraphData synth_citation_graph(const SynthParams& params);

}  // namespace kenn
