#pragma once

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "kenn/clause.hpp"
#include "kenn/graph.hpp"
#include "kenn/tensor.hpp"

namespace kenn::testing {

inline Tensor random_tensor(std::mt19937_64& rng, std::size_t rows, std::size_t cols,
                            double lo = -1.0, double hi = 1.0) {
    std::uniform_real_distribution<double> u(lo, hi);
    Tensor t(rows, cols);
    for (auto& v : t.values()) v = u(rng);
    return t;
}

inline double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// Smokers example from the knowledge language description.
inline Knowledge smokers_knowledge(const std::string& text) {
    return parse_knowledge(text, std::vector<std::string>{"Smoker", "Cancer"},
                           std::vector<std::string>{"Friends"});
}

// Labelled graph over `m` nodes with random features and the given edges.
inline GraphData toy_graph(std::size_t m, std::size_t features, const Catalog& catalog,
                           std::vector<Edge> edges, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    GraphData g;
    g.catalog = catalog;
    g.features = random_tensor(rng, m, features);
    const std::size_t q = catalog.unary().size();
    g.labels = Tensor(m, q);
    for (std::size_t i = 0; i < m; ++i) g.labels(i, i % q) = 1.0;
    g.edges = std::move(edges);
    g.binary_given = Tensor(g.edges.size(), catalog.binary().size(), 1.0);
    for (std::size_t i = 0; i < m; ++i) g.node_ids.push_back("n" + std::to_string(i));
    return g;
}

}  // namespace kenn::testing
