#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "kenn/enhancer.hpp"
#include "kenn/graph.hpp"
#include "kenn/optim.hpp"

namespace kenn {

struct TrainConfig {
    std::size_t epochs = 300;
    OptimizerConfig optimizer;
    // Learning rate for clause weights; the network learning rate when unset.
    std::optional<double> clause_lr;
    std::vector<std::size_t> hidden{50, 50, 50};
    std::size_t ke_layers = 3;
    bool share_weights = false;
    double temperature = 1.0;
    double binary_saturation = 25.0;
};

// Graphs seen by each phase. Inductive: the train graph holds only training
// nodes and the edges among them, the eval graph only test nodes. Transductive:
// both hold every node, with the loss/accuracy restricted to `*_rows`.
struct PhaseGraphs {
    GraphData train;
    std::vector<std::size_t> train_rows;
    GraphData eval;
    std::vector<std::size_t> eval_rows;
};

PhaseGraphs phase_graphs(const GraphData& data, const Split& split);

ModelSpec model_spec(const TrainConfig& config, std::size_t input_dim);

struct TrainResult {
    KennModel model;
    double final_loss = 0.0;
    double train_time_s = 0.0;
};

// Full-batch training of the base network and clause weights on masked
// binary cross-entropy over the training nodes.
TrainResult train(const TrainConfig& config, const Knowledge& knowledge, const GraphData& data,
                  const Split& split, std::uint64_t seed);

// Same, on a graph where every constant in `rows` is supervised.
TrainResult train_on(const TrainConfig& config, const Knowledge& knowledge, const GraphData& graph,
                     std::span<const std::size_t> rows, std::uint64_t seed);

// Fraction of `rows` whose argmax prediction matches the label.
double accuracy(const Tensor& predictions, const Tensor& labels, std::span<const std::size_t> rows);

double evaluate(const KennModel& model, const GraphData& data, const Split& split);

struct RunResult {
    std::uint64_t seed = 0;
    double fraction = 0.0;
    SplitMode mode = SplitMode::Inductive;
    std::size_t layers = 0;
    double accuracy_nn = 0.0;
    double accuracy_kenn = 0.0;
    double improvement = 0.0;
    std::vector<std::vector<double>> clause_weights;  // [layer][clause]
    double train_time_s = 0.0;
    double eval_time_s = 0.0;
};

struct ExperimentConfig {
    TrainConfig train;
    SplitMode mode = SplitMode::Inductive;
    std::vector<double> fractions{0.1};
    std::vector<std::size_t> layers{3};
    std::vector<std::uint64_t> seeds{0};
    std::size_t jobs = 1;
};

struct CellSummary {
    double fraction = 0.0;
    std::size_t layers = 0;
    std::size_t runs = 0;
    double mean_acc_nn = 0.0;
    double mean_acc_kenn = 0.0;
    double mean_improvement = 0.0;
    double std_improvement = 0.0;
    double std_acc_kenn = 0.0;
};

struct ExperimentTable {
    std::vector<RunResult> runs;
    std::vector<CellSummary> summary;
    std::vector<std::string> failures;

    void write_csv(std::ostream& out) const;
    void write_summary_csv(std::ostream& out) const;
};

// NN baseline and KENN for one (fraction, seed) and layer count.
RunResult run_single(const ExperimentConfig& config, const Knowledge& knowledge,
                     const GraphData& data, double fraction, std::uint64_t seed,
                     std::size_t layers);

// Grid over fractions × seeds × layer counts. Each (fraction, seed) gets one
// split and one baseline shared by its layer counts. Runs that throw are
// recorded in `failures` and the rest of the grid still completes.
ExperimentTable run_experiment(const ExperimentConfig& config, const Knowledge& knowledge,
                               const GraphData& data, std::ostream* log = nullptr);

std::vector<CellSummary> summarize(std::span<const RunResult> runs);

struct BenchSize {
    std::size_t constants = 0;
    std::size_t edges = 0;  // ignored when dense
    bool dense = false;
};

struct BenchRow {
    std::size_t constants = 0;
    std::size_t edges = 0;
    std::size_t grounding_rows = 0;  // binary grounding rows per layer
    double seconds = 0.0;            // median forward+backward time of the stack
    double seconds_per_row = 0.0;
};

// Times forward+backward of `layers` stacked enhancers alone on random
// pre-activations.
std::vector<BenchRow> benchmark_scaling(const Knowledge& knowledge, std::span<const BenchSize> sizes,
                                        std::size_t layers, std::size_t reps = 5,
                                        std::uint64_t seed = 0);

nlohmann::json weight_report(const KennModel& model);

// ¬T(x) ∨ ¬R(x,y) ∨ T(y) for every unary predicate T, with R the first
// binary predicate.
Knowledge homophily_knowledge(const Catalog& catalog, double learnable_init = kDefaultClauseWeightInit);

}  // namespace kenn
