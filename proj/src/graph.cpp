#include "kenn/graph.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <unordered_map>

namespace kenn {

std::vector<std::size_t> GraphData::label_index() const {
    std::vector<std::size_t> out(labels.rows());
    for (std::size_t i = 0; i < labels.rows(); ++i) {
        auto r = labels.row(i);
        out[i] = static_cast<std::size_t>(std::max_element(r.begin(), r.end()) - r.begin());
    }
    return out;
}

void GraphData::validate(bool allow_self_loops) const {
    const std::size_t m = num_constants();
    if (labels.rows() != m || labels.cols() != catalog.unary().size()) {
        throw DataError("labels shape " + labels.shape_str() + " does not match " +
                        std::to_string(m) + " constants x " +
                        std::to_string(catalog.unary().size()) + " unary predicates");
    }
    for (std::size_t i = 0; i < m; ++i) {
        double total = 0.0;
        for (double v : labels.row(i)) {
            if (v != 0.0 && v != 1.0) throw DataError("labels must be one-hot");
            total += v;
        }
        if (total != 1.0) throw DataError("label row " + std::to_string(i) + " is not one-hot");
    }
    if (binary_given.rows() != edges.size() || binary_given.cols() != catalog.binary().size()) {
        throw DataError("binary_given shape " + binary_given.shape_str() + " does not match " +
                        std::to_string(edges.size()) + " edges");
    }
    for (double v : binary_given.values()) {
        if (!(v >= 0.0 && v <= 1.0)) throw DataError("binary truth values must lie in [0, 1]");
    }
    for (const auto& e : edges) {
        if (e.src >= m || e.dst >= m) {
            throw DataError("edge (" + std::to_string(e.src) + ", " + std::to_string(e.dst) +
                            ") endpoint out of range");
        }
        if (!allow_self_loops && e.src == e.dst) {
            throw DataError("self-loop on constant " + std::to_string(e.src));
        }
    }
}

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (true) {
        auto tab = line.find('\t', pos);
        out.push_back(line.substr(pos, tab == std::string::npos ? std::string::npos : tab - pos));
        if (tab == std::string::npos) break;
        pos = tab + 1;
    }
    if (!out.empty() && !out.back().empty() && out.back().back() == '\r') out.back().pop_back();
    return out;
}

std::string where(const std::filesystem::path& file, std::size_t line) {
    return file.string() + ":" + std::to_string(line) + ": ";
}

}  // namespace

GraphData load_graph(const std::filesystem::path& node_file,
                     const std::filesystem::path& edge_file, const Catalog& schema,
                     const LoadOptions& options, std::vector<std::string>* warnings) {
    std::ifstream nodes(node_file);
    if (!nodes) throw DataError("cannot open node file " + node_file.string());

    GraphData g;
    g.catalog = schema;
    std::unordered_map<std::string, std::size_t> id_to_row;
    std::vector<double> feats;
    std::vector<std::size_t> label_cols;
    std::size_t n_features = 0;
    bool first = true;

    std::string line;
    std::size_t line_no = 0;
    while (std::getline(nodes, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        auto fields = split_tabs(line);
        if (fields.size() < 2) throw DataError(where(node_file, line_no) + "expected id and label");
        const std::size_t n = fields.size() - 2;
        if (first) {
            n_features = n;
            first = false;
        } else if (n != n_features) {
            throw DataError(where(node_file, line_no) + "ragged row: " + std::to_string(n) +
                            " features, expected " + std::to_string(n_features));
        }
        if (!id_to_row.emplace(fields.front(), g.node_ids.size()).second) {
            throw DataError(where(node_file, line_no) + "duplicate node id '" + fields.front() + "'");
        }
        g.node_ids.push_back(fields.front());
        for (std::size_t j = 1; j <= n; ++j) {
            double v = 0.0;
            const auto& f = fields[j];
            auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
            if (ec != std::errc{} || ptr != f.data() + f.size() || !std::isfinite(v)) {
                throw DataError(where(node_file, line_no) + "bad feature value '" + f + "'");
            }
            feats.push_back(v);
        }
        auto col = schema.unary_column(fields.back());
        if (!col) throw DataError(where(node_file, line_no) + "unknown label '" + fields.back() + "'");
        label_cols.push_back(*col);
    }

    const std::size_t m = g.node_ids.size();
    g.features = Tensor(m, n_features, std::move(feats));
    g.labels = Tensor(m, schema.unary().size());
    for (std::size_t i = 0; i < m; ++i) g.labels(i, label_cols[i]) = 1.0;

    std::ifstream edges(edge_file);
    if (!edges) throw DataError("cannot open edge file " + edge_file.string());
    std::map<std::pair<std::size_t, std::size_t>, std::size_t> pair_row;
    std::vector<std::vector<double>> given;
    line_no = 0;
    while (std::getline(edges, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        auto fields = split_tabs(line);
        if (fields.size() != 2 && fields.size() != 3) {
            throw DataError(where(edge_file, line_no) + "expected 'src<TAB>dst[<TAB>relation]'");
        }
        auto s = id_to_row.find(fields[0]);
        auto d = id_to_row.find(fields[1]);
        if (s == id_to_row.end() || d == id_to_row.end()) {
            throw DataError(where(edge_file, line_no) + "endpoint out of range: '" +
                            (s == id_to_row.end() ? fields[0] : fields[1]) + "'");
        }
        if (s->second == d->second && !options.allow_self_loops) {
            throw DataError(where(edge_file, line_no) + "self-loop on '" + fields[0] + "'");
        }
        if (schema.binary().empty()) {
            throw DataError(where(edge_file, line_no) + "edges given but no binary predicate declared");
        }
        std::size_t rel = 0;
        if (fields.size() == 3) {
            auto col = schema.binary_column(fields[2]);
            if (!col) throw DataError(where(edge_file, line_no) + "unknown relation '" + fields[2] + "'");
            rel = *col;
        }
        const auto key = std::make_pair(s->second, d->second);
        auto [it, inserted] = pair_row.emplace(key, g.edges.size());
        if (!inserted && given[it->second][rel] == 1.0) {
            if (warnings) {
                warnings->push_back(where(edge_file, line_no) + "duplicate edge " + fields[0] +
                                    " -> " + fields[1] + " kept");
            }
            inserted = true;
        }
        if (inserted) {
            g.edges.push_back({key.first, key.second});
            given.emplace_back(schema.binary().size(), 0.0);
            given.back()[rel] = 1.0;
        } else {
            given[it->second][rel] = 1.0;
        }
    }
    g.binary_given = Tensor(g.edges.size(), schema.binary().size());
    for (std::size_t r = 0; r < given.size(); ++r)
        for (std::size_t c = 0; c < given[r].size(); ++c) g.binary_given(r, c) = given[r][c];

    if (options.symmetrize) g = symmetrized(g);
    g.validate(options.allow_self_loops);
    return g;
}

void write_graph(const GraphData& data, const std::filesystem::path& node_file,
                 const std::filesystem::path& edge_file) {
    const auto labels = data.label_index();
    auto id = [&](std::size_t i) {
        return data.node_ids.size() == data.num_constants() ? data.node_ids[i] : std::to_string(i);
    };
    {
        std::ofstream out(node_file);
        if (!out) throw DataError("cannot write " + node_file.string());
        for (std::size_t i = 0; i < data.num_constants(); ++i) {
            out << id(i);
            for (double v : data.features.row(i)) out << '\t' << v;
            out << '\t' << data.catalog.unary()[labels[i]] << '\n';
        }
    }
    std::ofstream out(edge_file);
    if (!out) throw DataError("cannot write " + edge_file.string());
    for (std::size_t e = 0; e < data.edges.size(); ++e) {
        for (std::size_t c = 0; c < data.catalog.binary().size(); ++c) {
            if (data.binary_given(e, c) < 0.5) continue;
            out << id(data.edges[e].src) << '\t' << id(data.edges[e].dst);
            if (data.catalog.binary().size() > 1) out << '\t' << data.catalog.binary()[c];
            out << '\n';
        }
    }
}

GraphData symmetrized(const GraphData& data) {
    std::set<std::pair<std::size_t, std::size_t>> present;
    for (const auto& e : data.edges) present.emplace(e.src, e.dst);
    GraphData out = data;
    std::vector<double> given = data.binary_given.values();
    const std::size_t qb = data.binary_given.cols();
    for (std::size_t r = 0; r < data.edges.size(); ++r) {
        const auto& e = data.edges[r];
        if (present.count({e.dst, e.src})) continue;
        present.emplace(e.dst, e.src);
        out.edges.push_back({e.dst, e.src});
        for (std::size_t c = 0; c < qb; ++c) given.push_back(data.binary_given(r, c));
    }
    out.binary_given = Tensor(out.edges.size(), qb, std::move(given));
    return out;
}

GraphData induced_subgraph(const GraphData& data, std::span<const std::size_t> nodes,
                           std::span<const std::size_t> edge_ids) {
    constexpr auto kAbsent = static_cast<std::size_t>(-1);
    std::vector<std::size_t> remap(data.num_constants(), kAbsent);
    for (std::size_t i = 0; i < nodes.size(); ++i) remap.at(nodes[i]) = i;

    GraphData out;
    out.catalog = data.catalog;
    out.features = ops::gather_rows(data.features, nodes);
    out.labels = ops::gather_rows(data.labels, nodes);
    if (data.node_ids.size() == data.num_constants()) {
        for (auto n : nodes) out.node_ids.push_back(data.node_ids[n]);
    }
    out.binary_given = ops::gather_rows(data.binary_given, edge_ids);
    for (auto e : edge_ids) {
        const auto& edge = data.edges.at(e);
        if (remap[edge.src] == kAbsent || remap[edge.dst] == kAbsent) {
            throw DataError("induced_subgraph: edge " + std::to_string(e) +
                            " leaves the node subset");
        }
        out.edges.push_back({remap[edge.src], remap[edge.dst]});
    }
    return out;
}

std::string_view to_string(SplitMode mode) {
    return mode == SplitMode::Inductive ? "inductive" : "transductive";
}

SplitMode parse_split_mode(std::string_view text) {
    if (text == "inductive") return SplitMode::Inductive;
    if (text == "transductive") return SplitMode::Transductive;
    throw ConfigError("split mode must be 'inductive' or 'transductive', got '" +
                      std::string(text) + "'");
}

Split make_split(const GraphData& data, double fraction, SplitMode mode, std::uint64_t seed) {
    if (!(fraction > 0.0 && fraction < 1.0)) {
        throw ConfigError("train fraction must lie in (0, 1)");
    }
    const std::size_t m = data.num_constants();
    const std::size_t q = data.labels.cols();
    const auto labels = data.label_index();
    std::vector<std::vector<std::size_t>> by_class(q);
    for (std::size_t i = 0; i < m; ++i) by_class[labels[i]].push_back(i);

    std::mt19937_64 rng(seed);
    const auto n_train = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(m)));
    if (n_train == 0) throw DataError("train fraction selects no nodes");

    std::vector<std::size_t> quota(q, n_train / q);
    std::vector<std::size_t> order(q);
    for (std::size_t c = 0; c < q; ++c) order[c] = c;
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t k = 0; k < n_train % q; ++k) ++quota[order[k]];

    Split split;
    split.mode = mode;
    std::vector<char> in_train(m, 0);
    for (std::size_t c = 0; c < q; ++c) {
        auto& members = by_class[c];
        if (members.size() < quota[c]) {
            throw DataError("class '" + data.catalog.unary()[c] + "' has " +
                            std::to_string(members.size()) + " nodes, balanced split needs " +
                            std::to_string(quota[c]));
        }
        std::shuffle(members.begin(), members.end(), rng);
        for (std::size_t k = 0; k < quota[c]; ++k) in_train[members[k]] = 1;
    }
    for (std::size_t i = 0; i < m; ++i) (in_train[i] ? split.train_nodes : split.test_nodes).push_back(i);

    for (std::size_t e = 0; e < data.edges.size(); ++e) {
        const auto& edge = data.edges[e];
        if (mode == SplitMode::Transductive) {
            split.train_edges.push_back(e);
            split.eval_edges.push_back(e);
        } else if (in_train[edge.src] && in_train[edge.dst]) {
            split.train_edges.push_back(e);
        } else if (!in_train[edge.src] && !in_train[edge.dst]) {
            split.eval_edges.push_back(e);
        }
    }
    return split;
}

GroundingIndex build_grounding_index(const Knowledge& knowledge, std::size_t num_constants,
                                     std::span<const Edge> edges) {
    GroundingIndex idx;
    idx.num_constants = num_constants;
    idx.num_unary = knowledge.catalog.unary().size();
    idx.num_binary = knowledge.catalog.binary().size();
    idx.x_rows.reserve(edges.size());
    idx.y_rows.reserve(edges.size());
    for (const auto& e : edges) {
        if (e.src >= num_constants || e.dst >= num_constants) {
            throw DataError("grounding index: edge endpoint out of range");
        }
        idx.x_rows.push_back(e.src);
        idx.y_rows.push_back(e.dst);
    }
    for (auto ci : knowledge.binary_clauses) {
        GroundedClause gc;
        gc.clause = ci;
        for (const auto& lit : knowledge.clauses[ci].literals) {
            LiteralSlot slot;
            slot.column = knowledge.column(lit);
            slot.sign = lit.negated ? -1.0 : 1.0;
            switch (lit.args) {
                case Args::X:
                    slot.source = LiteralSource::UnaryX;
                    slot.joined_column = slot.column;
                    break;
                case Args::Y:
                    slot.source = LiteralSource::UnaryY;
                    slot.joined_column = idx.num_unary + slot.column;
                    break;
                case Args::XY:
                    slot.source = LiteralSource::Binary;
                    slot.joined_column = 2 * idx.num_unary + slot.column;
                    break;
            }
            gc.literals.push_back(slot);
        }
        idx.clauses.push_back(std::move(gc));
    }
    return idx;
}

GroundingIndex build_grounding_index(const Knowledge& knowledge, const GraphData& data,
                                     std::span<const std::size_t> edge_subset) {
    if (!(knowledge.catalog == data.catalog)) {
        throw ConfigError("knowledge catalog does not match the data schema");
    }
    std::vector<Edge> edges;
    edges.reserve(edge_subset.size());
    for (auto e : edge_subset) edges.push_back(data.edges.at(e));
    return build_grounding_index(knowledge, data.num_constants(), edges);
}

std::vector<Edge> dense_pairs(std::size_t m) {
    std::vector<Edge> out;
    out.reserve(m * m);
    for (std::size_t a = 0; a < m; ++a)
        for (std::size_t b = 0; b < m; ++b) out.push_back({a, b});
    return out;
}

GraphData synth_citation_graph(const SynthParams& p) {
    auto prob_ok = [](double v) { return v >= 0.0 && v <= 1.0; };
    if (!prob_ok(p.p_in) || !prob_ok(p.p_out) || !prob_ok(p.p_word_on) || !prob_ok(p.p_word_noise)) {
        throw ConfigError("synthetic graph: probabilities must lie in [0, 1]");
    }
    if (p.classes == 0 || p.nodes % p.classes != 0) {
        throw ConfigError("synthetic graph: node count must be a positive multiple of the class count");
    }
    if (p.feat_dim < p.classes * p.words_per_class) {
        throw ConfigError("synthetic graph: feat_dim must hold words_per_class words for every class");
    }

    std::vector<std::string> names;
    for (std::size_t c = 0; c < p.classes; ++c) names.push_back("C" + std::to_string(c));
    GraphData g;
    g.catalog = Catalog(names, {"Cite"});

    std::mt19937_64 rng(p.seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const std::size_t block = p.nodes / p.classes;
    g.features = Tensor(p.nodes, p.feat_dim);
    g.labels = Tensor(p.nodes, p.classes);
    for (std::size_t i = 0; i < p.nodes; ++i) {
        const std::size_t c = i / block;
        g.labels(i, c) = 1.0;
        g.node_ids.push_back(std::to_string(i));
        for (std::size_t f = 0; f < p.feat_dim; ++f) {
            const bool signature = f / p.words_per_class == c;
            const double on = signature ? p.p_word_on : 0.0;
            if (unif(rng) < on || unif(rng) < p.p_word_noise) g.features(i, f) = 1.0;
        }
    }
    for (std::size_t i = 0; i < p.nodes; ++i) {
        for (std::size_t j = i + 1; j < p.nodes; ++j) {
            const double prob = i / block == j / block ? p.p_in : p.p_out;
            const bool link = unif(rng) < prob;
            const bool flip = unif(rng) < 0.5;
            if (link) g.edges.push_back(flip ? Edge{j, i} : Edge{i, j});
        }
    }
    g.binary_given = Tensor(g.edges.size(), 1, 1.0);
    return g;
}

}  // namespace kenn
