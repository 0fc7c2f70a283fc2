#include "kenn/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <functional>
#include <iomanip>
#include <map>
#include <mutex>
#include <numeric>
#include <random>
#include <thread>

namespace kenn {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::vector<std::size_t> iota_rows(std::size_t n) {
    std::vector<std::size_t> out(n);
    std::iota(out.begin(), out.end(), std::size_t{0});
    return out;
}

// Model initialisation and split sampling draw from separate streams.
std::uint64_t model_seed(std::uint64_t seed) { return seed ^ 0x5eed'0f'ce11'ab1eULL; }

}  // namespace

PhaseGraphs phase_graphs(const GraphData& data, const Split& split) {
    PhaseGraphs pg;
    if (split.mode == SplitMode::Inductive) {
        pg.train = induced_subgraph(data, split.train_nodes, split.train_edges);
        pg.train_rows = iota_rows(split.train_nodes.size());
        pg.eval = induced_subgraph(data, split.test_nodes, split.eval_edges);
        pg.eval_rows = iota_rows(split.test_nodes.size());
    } else {
        const auto all = iota_rows(data.num_constants());
        pg.train = induced_subgraph(data, all, split.train_edges);
        pg.train_rows = split.train_nodes;
        pg.eval = induced_subgraph(data, all, split.eval_edges);
        pg.eval_rows = split.test_nodes;
    }
    return pg;
}

ModelSpec model_spec(const TrainConfig& config, std::size_t input_dim) {
    ModelSpec spec;
    spec.input_dim = input_dim;
    spec.hidden = config.hidden;
    spec.ke_layers = config.ke_layers;
    spec.share_weights = config.share_weights;
    spec.temperature = config.temperature;
    spec.binary_saturation = config.binary_saturation;
    return spec;
}

TrainResult train_on(const TrainConfig& config, const Knowledge& knowledge, const GraphData& graph,
                     std::span<const std::size_t> rows, std::uint64_t seed) {
    if (rows.empty()) throw DataError("train: no training nodes");
    const auto start = Clock::now();
    KennModel model(knowledge, model_spec(config, graph.features.cols()), model_seed(seed));
    const auto index = build_grounding_index(knowledge, graph.num_constants(), graph.edges);

    Tensor mask(graph.labels.rows(), graph.labels.cols());
    for (auto r : rows) {
        for (auto& v : mask.row(r)) v = 1.0;
    }

    std::vector<double> lr_scale(model.params().size(), 1.0);
    if (config.clause_lr) {
        for (std::size_t p = 0; p < lr_scale.size(); ++p) {
            if (model.is_clause_weight(p)) lr_scale[p] = *config.clause_lr / config.optimizer.lr;
        }
    }

    Optimizer optimizer(config.optimizer);
    double loss_value = 0.0;
    std::vector<Tensor> grads(model.params().size());
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        try {
            ad::Tape tape;
            auto pass = model.forward(tape, graph.features, graph.binary_given, index, true);
            ad::Var loss = ad::bce_loss(pass.y_U, graph.labels, mask);
            loss_value = loss.value().item();
            tape.backward(loss);
            for (std::size_t p = 0; p < grads.size(); ++p) grads[p] = tape.grad(pass.params[p]);
            optimizer.step(model.params(), grads, lr_scale);
        } catch (const NumericError& e) {
            throw NumericError("training diverged at epoch " + std::to_string(epoch) +
                               " (last loss " + std::to_string(loss_value) + "): " + e.what());
        }
    }
    return {std::move(model), loss_value, seconds_since(start)};
}

TrainResult train(const TrainConfig& config, const Knowledge& knowledge, const GraphData& data,
                  const Split& split, std::uint64_t seed) {
    if (split.mode == SplitMode::Inductive) {
        const auto graph = induced_subgraph(data, split.train_nodes, split.train_edges);
        return train_on(config, knowledge, graph, iota_rows(graph.num_constants()), seed);
    }
    const auto graph = induced_subgraph(data, iota_rows(data.num_constants()), split.train_edges);
    return train_on(config, knowledge, graph, split.train_nodes, seed);
}

double accuracy(const Tensor& predictions, const Tensor& labels, std::span<const std::size_t> rows) {
    if (rows.empty()) throw DataError("evaluate: empty test set");
    if (!predictions.same_shape(labels)) {
        throw ShapeError("accuracy: predictions " + predictions.shape_str() + " vs labels " +
                         labels.shape_str());
    }
    std::size_t correct = 0;
    for (auto r : rows) {
        auto p = predictions.row(r);
        auto l = labels.row(r);
        const auto guess = std::max_element(p.begin(), p.end()) - p.begin();
        const auto truth = std::max_element(l.begin(), l.end()) - l.begin();
        if (guess == truth) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(rows.size());
}

double evaluate(const KennModel& model, const GraphData& data, const Split& split) {
    std::vector<std::size_t> rows;
    GraphData graph;
    if (split.mode == SplitMode::Inductive) {
        graph = induced_subgraph(data, split.test_nodes, split.eval_edges);
        rows = iota_rows(graph.num_constants());
    } else {
        graph = induced_subgraph(data, iota_rows(data.num_constants()), split.eval_edges);
        rows = split.test_nodes;
    }
    if (rows.empty()) throw DataError("evaluate: empty test set");
    return accuracy(model.predict(graph), graph.labels, rows);
}

namespace {

// One split and one baseline for (fraction, seed), then a KENN model per
// layer count.
std::vector<RunResult> run_cell(const ExperimentConfig& config, const Knowledge& knowledge,
                                const GraphData& data, double fraction, std::uint64_t seed,
                                std::span<const std::size_t> layer_counts,
                                const std::function<void(const RunResult&)>& on_result) {
    const Split split = make_split(data, fraction, config.mode, seed);
    TrainConfig nn_cfg = config.train;
    nn_cfg.ke_layers = 0;
    auto nn = train(nn_cfg, knowledge, data, split, seed);
    const double acc_nn = evaluate(nn.model, data, split);

    std::vector<RunResult> out;
    for (auto layers : layer_counts) {
        RunResult r;
        r.seed = seed;
        r.fraction = fraction;
        r.mode = config.mode;
        r.layers = layers;
        r.accuracy_nn = acc_nn;
        r.accuracy_kenn = acc_nn;
        r.train_time_s = nn.train_time_s;
        if (layers > 0) {
            TrainConfig kenn_cfg = config.train;
            kenn_cfg.ke_layers = layers;
            auto kenn = train(kenn_cfg, knowledge, data, split, seed);
            const auto start = Clock::now();
            r.accuracy_kenn = evaluate(kenn.model, data, split);
            r.eval_time_s = seconds_since(start);
            r.train_time_s = kenn.train_time_s;
            r.clause_weights = kenn.model.effective_weights();
        }
        r.improvement = r.accuracy_kenn - r.accuracy_nn;
        if (on_result) on_result(r);
        out.push_back(std::move(r));
    }
    return out;
}

}  // namespace

RunResult run_single(const ExperimentConfig& config, const Knowledge& knowledge,
                     const GraphData& data, double fraction, std::uint64_t seed,
                     std::size_t layers) {
    const std::size_t counts[] = {layers};
    return run_cell(config, knowledge, data, fraction, seed, counts, nullptr).front();
}

ExperimentTable run_experiment(const ExperimentConfig& config, const Knowledge& knowledge,
                               const GraphData& data, std::ostream* log) {
    struct Task {
        double fraction;
        std::uint64_t seed;
    };
    std::vector<Task> tasks;
    for (double f : config.fractions)
        for (auto s : config.seeds) tasks.push_back({f, s});

    std::vector<std::vector<RunResult>> results(tasks.size());
    std::vector<std::string> errors(tasks.size());
    std::mutex log_mutex;
    std::atomic<std::size_t> next{0};

    auto worker = [&]() {
        for (std::size_t t = next++; t < tasks.size(); t = next++) {
            const auto [fraction, seed] = tasks[t];
            try {
                results[t] = run_cell(config, knowledge, data, fraction, seed, config.layers,
                                      [&](const RunResult& r) {
                                          if (!log) return;
                                          std::lock_guard lock(log_mutex);
                                          *log << "[fraction=" << fraction << " seed=" << seed
                                               << "] layers=" << r.layers
                                               << " acc_nn=" << r.accuracy_nn
                                               << " acc_kenn=" << r.accuracy_kenn
                                               << " improvement=" << r.improvement << std::endl;
                                      });
            } catch (const std::exception& e) {
                errors[t] = "fraction=" + std::to_string(fraction) + " seed=" + std::to_string(seed) +
                            ": " + e.what();
                if (log) {
                    std::lock_guard lock(log_mutex);
                    *log << "[fraction=" << fraction << " seed=" << seed << "] FAILED: " << e.what()
                         << std::endl;
                }
            }
        }
    };

    const std::size_t jobs = std::max<std::size_t>(1, std::min(config.jobs, tasks.size()));
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t j = 0; j < jobs; ++j) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    ExperimentTable table;
    for (std::size_t t = 0; t < tasks.size(); ++t) {
        for (auto& r : results[t]) table.runs.push_back(std::move(r));
        if (!errors[t].empty()) table.failures.push_back(errors[t]);
    }
    table.summary = summarize(table.runs);
    return table;
}

std::vector<CellSummary> summarize(std::span<const RunResult> runs) {
    std::vector<CellSummary> out;
    std::map<std::pair<double, std::size_t>, std::vector<const RunResult*>> cells;
    std::vector<std::pair<double, std::size_t>> order;
    for (const auto& r : runs) {
        auto key = std::make_pair(r.fraction, r.layers);
        if (!cells.count(key)) order.push_back(key);
        cells[key].push_back(&r);
    }
    auto stddev = [](const std::vector<double>& xs, double mean) {
        if (xs.size() < 2) return 0.0;
        double ss = 0.0;
        for (double x : xs) ss += (x - mean) * (x - mean);
        return std::sqrt(ss / static_cast<double>(xs.size() - 1));
    };
    for (const auto& key : order) {
        const auto& members = cells[key];
        CellSummary c;
        c.fraction = key.first;
        c.layers = key.second;
        c.runs = members.size();
        std::vector<double> imp, acc;
        for (const auto* r : members) {
            c.mean_acc_nn += r->accuracy_nn;
            c.mean_acc_kenn += r->accuracy_kenn;
            c.mean_improvement += r->improvement;
            imp.push_back(r->improvement);
            acc.push_back(r->accuracy_kenn);
        }
        const double n = static_cast<double>(c.runs);
        c.mean_acc_nn /= n;
        c.mean_acc_kenn /= n;
        c.mean_improvement /= n;
        c.std_improvement = stddev(imp, c.mean_improvement);
        c.std_acc_kenn = stddev(acc, c.mean_acc_kenn);
        out.push_back(c);
    }
    return out;
}

void ExperimentTable::write_csv(std::ostream& out) const {
    out << "fraction,mode,layers,seed,acc_nn,acc_kenn,improvement,train_time_s\n";
    out << std::setprecision(10);
    for (const auto& r : runs) {
        out << r.fraction << ',' << to_string(r.mode) << ',' << r.layers << ',' << r.seed << ','
            << r.accuracy_nn << ',' << r.accuracy_kenn << ',' << r.improvement << ','
            << r.train_time_s << '\n';
    }
}

void ExperimentTable::write_summary_csv(std::ostream& out) const {
    out << "fraction,layers,runs,mean_acc_nn,mean_acc_kenn,mean_improvement,std_improvement\n";
    out << std::setprecision(10);
    for (const auto& c : summary) {
        out << c.fraction << ',' << c.layers << ',' << c.runs << ',' << c.mean_acc_nn << ','
            << c.mean_acc_kenn << ',' << c.mean_improvement << ',' << c.std_improvement << '\n';
    }
}

std::vector<BenchRow> benchmark_scaling(const Knowledge& knowledge, std::span<const BenchSize> sizes,
                                        std::size_t layers, std::size_t reps, std::uint64_t seed) {
    const std::size_t qu = knowledge.catalog.unary().size();
    const std::size_t qb = knowledge.catalog.binary().size();
    std::vector<BenchRow> rows;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);

    for (const auto& size : sizes) {
        if (size.constants < 2) throw ConfigError("benchmark: need at least two constants");
        std::vector<Edge> edges;
        if (size.dense) {
            edges = dense_pairs(size.constants);
        } else {
            std::uniform_int_distribution<std::size_t> pick(0, size.constants - 1);
            edges.reserve(size.edges);
            while (edges.size() < size.edges) {
                Edge e{pick(rng), pick(rng)};
                if (e.src != e.dst) edges.push_back(e);
            }
        }
        const auto index = build_grounding_index(knowledge, size.constants, edges);
        Tensor z_u(size.constants, qu);
        for (auto& v : z_u.values()) v = normal(rng);
        Tensor z_b(edges.size(), qb);
        for (auto& v : z_b.values()) v = normal(rng) > 0.0 ? 25.0 : -25.0;
        const double omega = ops::softplus_inverse(kDefaultClauseWeightInit);

        std::vector<double> times;
        for (std::size_t rep = 0; rep <= reps; ++rep) {
            const auto start = Clock::now();
            ad::Tape tape;
            ad::Var zu = tape.parameter(z_u);
            ad::Var zb = tape.constant(z_b);
            for (std::size_t l = 0; l < layers; ++l) {
                std::vector<ad::Var> weights;
                for (std::size_t c = 0; c < knowledge.clauses.size(); ++c)
                    weights.push_back(ad::softplus(tape.parameter(Tensor::scalar(omega))));
                auto out = rke_forward(knowledge, index, zu, zb, weights);
                zu = out.z_U;
                zb = out.z_B;
            }
            ad::Var total = ad::sum_all(zu);
            if (zb.cols() > 0 && zb.rows() > 0) total = ad::add(total, ad::sum_all(zb));
            tape.backward(total);
            if (rep > 0) times.push_back(seconds_since(start));  // rep 0 warms up
        }
        std::sort(times.begin(), times.end());
        BenchRow row;
        row.constants = size.constants;
        row.edges = edges.size();
        row.grounding_rows = index.total_grounding_rows();
        row.seconds = times.empty() ? 0.0 : times[times.size() / 2];
        const double work = static_cast<double>(row.grounding_rows * std::max<std::size_t>(layers, 1));
        row.seconds_per_row = work > 0.0 ? row.seconds / work : 0.0;
        rows.push_back(row);
    }
    return rows;
}

nlohmann::json weight_report(const KennModel& model) {
    const auto& k = model.knowledge();
    const auto weights = model.effective_weights();
    nlohmann::json clauses = nlohmann::json::array();
    for (std::size_t ci = 0; ci < k.clauses.size(); ++ci) {
        nlohmann::json per_layer = nlohmann::json::array();
        for (const auto& layer : weights) per_layer.push_back(layer[ci]);
        clauses.push_back({
            {"index", ci},
            {"clause", canonical_string(k.clauses[ci])},
            {"kind", k.clauses[ci].kind == ClauseKind::Unary ? "unary" : "binary"},
            {"learnable", k.clauses[ci].weight.learnable},
            {"weights", per_layer},
        });
    }
    return {
        {"layers", weights.size()},
        {"share_weights", model.spec().share_weights},
        {"clauses", clauses},
    };
}

Knowledge homophily_knowledge(const Catalog& catalog, double learnable_init) {
    if (catalog.binary().empty()) throw ConfigError("homophily knowledge needs a binary predicate");
    const auto& rel = catalog.binary().front();
    std::string text;
    for (const auto& t : catalog.unary()) {
        text += "_:n" + t + "(x),n" + rel + "(x,y)," + t + "(y)\n";
    }
    return parse_knowledge(text, catalog.unary(), catalog.binary(), learnable_init);
}

}  // namespace kenn
