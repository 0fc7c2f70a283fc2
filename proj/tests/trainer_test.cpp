#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "kenn/trainer.hpp"
#include "support.hpp"

namespace kenn {
namespace {

// Two linearly separable classes on a ring of 20 nodes.
GraphData separable_graph() {
    const Catalog cat({"C0", "C1"}, {"Cite"});
    std::vector<Edge> edges;
    for (std::size_t i = 0; i < 20; ++i) edges.push_back({i, (i + 2) % 20});
    GraphData g = testing::toy_graph(20, 2, cat, edges, 4);
    for (std::size_t i = 0; i < 20; ++i) {
        const double side = (i % 2 == 0) ? 1.0 : -1.0;
        g.features(i, 0) = side + 0.1 * g.features(i, 0);
        g.features(i, 1) = 0.1 * g.features(i, 1);
    }
    return g;
}

TrainConfig small_config(std::size_t layers, std::size_t epochs) {
    TrainConfig c;
    c.epochs = epochs;
    c.optimizer.lr = 0.01;
    c.hidden = {8};
    c.ke_layers = layers;
    return c;
}

std::vector<std::size_t> all_rows(std::size_t n) {
    std::vector<std::size_t> r(n);
    for (std::size_t i = 0; i < n; ++i) r[i] = i;
    return r;
}

TEST(Train, SeparableToyReachesPerfectTrainAccuracy) {
    const GraphData g = separable_graph();
    const Knowledge k = homophily_knowledge(g.catalog);
    const auto rows = all_rows(20);
    const TrainResult r = train_on(small_config(1, 200), k, g, rows, 0);
    EXPECT_EQ(accuracy(r.model.predict(g), g.labels, rows), 1.0);
    EXPECT_TRUE(std::isfinite(r.final_loss));
}

TEST(Train, DeterministicForFixedSeed) {
    const GraphData g = separable_graph();
    const Knowledge k = homophily_knowledge(g.catalog);
    const auto rows = all_rows(10);
    const TrainResult a = train_on(small_config(2, 30), k, g, rows, 7);
    const TrainResult b = train_on(small_config(2, 30), k, g, rows, 7);
    EXPECT_EQ(a.final_loss, b.final_loss);
    EXPECT_EQ(a.model.params(), b.model.params());
    const TrainResult c = train_on(small_config(2, 30), k, g, rows, 8);
    EXPECT_NE(a.model.params(), c.model.params());
}

TEST(Train, RejectsEmptyTrainingSet) {
    const GraphData g = separable_graph();
    EXPECT_THROW(train_on(small_config(1, 5), homophily_knowledge(g.catalog), g, {}, 0), DataError);
}

TEST(Accuracy, Examples) {
    const Tensor labels{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
    const auto rows = all_rows(3);
    EXPECT_EQ(accuracy(labels, labels, rows), 1.0);
    EXPECT_EQ(accuracy(ops::add(labels, Tensor(3, 3, 7.0)), labels, rows), 1.0);
    const Tensor wrong{{0, 1, 0}, {0, 1, 0}, {0, 1, 0}};
    EXPECT_NEAR(accuracy(wrong, labels, rows), 1.0 / 3.0, 1e-15);
    EXPECT_THROW(accuracy(labels, labels, {}), DataError);
    EXPECT_THROW(accuracy(Tensor(3, 2), labels, rows), ShapeError);
}

TEST(Accuracy, RandomPredictionsAreNearChance) {
    std::mt19937_64 rng(1);
    const std::size_t n = 6000, q = 6;
    Tensor labels(n, q);
    for (std::size_t i = 0; i < n; ++i) labels(i, i % q) = 1.0;
    const double acc = accuracy(testing::random_tensor(rng, n, q), labels, all_rows(n));
    // Binomial standard error at p = 1/6 is about 0.005.
    EXPECT_NEAR(acc, 1.0 / 6.0, 0.025);
}

TEST(Train, ZeroLayersEqualsModelWithClausesSilenced) {
    const GraphData g = separable_graph();
    const auto rows = all_rows(12);
    const Knowledge k = homophily_knowledge(g.catalog);
    const TrainResult base = train_on(small_config(0, 40), k, g, rows, 3);
    const TrainResult silenced = train_on(small_config(2, 40), with_fixed_weights(k, 0.0), g, rows, 3);
    EXPECT_LT(ops::max_abs_diff(base.model.predict(g), silenced.model.predict(g)), 1e-12);
}

// Inductive training only sees training nodes: changing anything about test
// nodes must leave the trained model untouched.
TEST(Train, InductiveTrainingIgnoresTestNodes) {
    const GraphData g = synth_citation_graph(
        {.nodes = 120, .classes = 3, .feat_dim = 20, .seed = 2, .words_per_class = 5});
    const Split split = make_split(g, 0.3, SplitMode::Inductive, 5);
    GraphData altered = g;
    std::mt19937_64 rng(0);
    for (std::size_t t : split.test_nodes) {
        for (std::size_t f = 0; f < g.features.cols(); ++f) altered.features(t, f) = 5.0 * (rng() % 2);
    }
    const Knowledge k = homophily_knowledge(g.catalog);
    const TrainResult a = train(small_config(2, 20), k, g, split, 1);
    const TrainResult b = train(small_config(2, 20), k, altered, split, 1);
    EXPECT_EQ(a.model.params(), b.model.params());

    const PhaseGraphs pg = phase_graphs(g, split);
    EXPECT_EQ(pg.train.num_constants(), split.train_nodes.size());
    EXPECT_EQ(pg.eval.num_constants(), split.test_nodes.size());
    EXPECT_EQ(pg.train.num_edges(), split.train_edges.size());
}

TEST(Experiment, SingleCellTable) {
    const GraphData g = synth_citation_graph(
        {.nodes = 90, .classes = 3, .feat_dim = 20, .seed = 1, .words_per_class = 5});
    ExperimentConfig cfg;
    cfg.train = small_config(1, 10);
    cfg.fractions = {0.5};
    cfg.layers = {0, 1};
    cfg.seeds = {4};
    std::ostringstream log;
    const ExperimentTable table = run_experiment(cfg, homophily_knowledge(g.catalog), g, &log);
    ASSERT_EQ(table.runs.size(), 2u);
    EXPECT_TRUE(table.failures.empty());
    for (const auto& r : table.runs) {
        EXPECT_NEAR(r.improvement, r.accuracy_kenn - r.accuracy_nn, 1e-15);
        EXPECT_EQ(r.accuracy_nn, table.runs[0].accuracy_nn);  // shared baseline
    }
    EXPECT_EQ(table.runs[0].improvement, 0.0);

    const RunResult single = run_single(cfg, homophily_knowledge(g.catalog), g, 0.5, 4, 1);
    EXPECT_EQ(single.accuracy_kenn, table.runs[1].accuracy_kenn);

    std::ostringstream csv;
    table.write_csv(csv);
    const std::string text = csv.str();
    EXPECT_EQ(text.substr(0, text.find('\n')),
              "fraction,mode,layers,seed,acc_nn,acc_kenn,improvement,train_time_s");
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 3);
    ASSERT_EQ(table.summary.size(), 2u);
    EXPECT_EQ(table.summary[0].runs, 1u);
}

TEST(Experiment, SummaryUsesSampleStd) {
    std::vector<RunResult> runs(3);
    const double imps[] = {0.1, 0.2, 0.6};
    for (int i = 0; i < 3; ++i) {
        runs[i].fraction = 0.1;
        runs[i].layers = 3;
        runs[i].improvement = imps[i];
        runs[i].accuracy_kenn = imps[i];
    }
    const auto s = summarize(runs);
    ASSERT_EQ(s.size(), 1u);
    EXPECT_NEAR(s[0].mean_improvement, 0.3, 1e-15);
    const double var = ((0.1 - 0.3) * (0.1 - 0.3) + (0.2 - 0.3) * (0.2 - 0.3) + (0.6 - 0.3) * (0.6 - 0.3)) / 2.0;
    EXPECT_NEAR(s[0].std_improvement, std::sqrt(var), 1e-15);
}

TEST(Bench, GroundingRowsFollowEdgesAndClauses) {
    const Catalog cat({"C0", "C1", "C2"}, {"Cite"});
    const Knowledge k = homophily_knowledge(cat);
    const BenchSize sizes[] = {{50, 100, false}, {50, 200, false}, {10, 0, true}};
    const auto rows = benchmark_scaling(k, sizes, 2, 1);
    ASSERT_EQ(rows.size(), 3u);
    EXPECT_EQ(rows[0].grounding_rows, 100u * 3);
    EXPECT_EQ(rows[1].grounding_rows, 200u * 3);
    EXPECT_EQ(rows[2].grounding_rows, 10u * 10 * 3);
    EXPECT_EQ(rows[2].edges, 100u);

    const Knowledge unary_only = parse_knowledge("_:nC0(x),C1(x)", cat.unary(), cat.binary());
    EXPECT_EQ(benchmark_scaling(unary_only, sizes, 1, 1)[0].grounding_rows, 0u);
}

TEST(WeightReport, ListsEveryClausePerLayer) {
    const Catalog cat({"C0", "C1"}, {"Cite"});
    Knowledge k = parse_knowledge("_:nC0(x),nCite(x,y),C0(y)\n0.25:nC0(x),nC1(x)", cat.unary(), cat.binary());
    ModelSpec spec;
    spec.input_dim = 3;
    spec.hidden = {4};
    spec.ke_layers = 2;
    const KennModel model(k, spec, 0);
    const auto report = weight_report(model);
    EXPECT_EQ(report["layers"], 2);
    ASSERT_EQ(report["clauses"].size(), 2u);
    EXPECT_EQ(report["clauses"][0]["kind"], "binary");
    EXPECT_EQ(report["clauses"][1]["learnable"], false);
    EXPECT_EQ(report["clauses"][1]["weights"], (nlohmann::json{0.25, 0.25}));
    EXPECT_EQ(report["clauses"][1]["clause"], "0.25:nC0(x),nC1(x)");
}

TEST(HomophilyKnowledge, OneClausePerClass) {
    const Knowledge k = homophily_knowledge(Catalog({"A", "B", "C"}, {"R", "S"}));
    ASSERT_EQ(k.clauses.size(), 3u);
    EXPECT_EQ(canonical_string(k.clauses[1]), "_:nB(x),nR(x,y),B(y)");
    EXPECT_THROW(homophily_knowledge(Catalog({"A"}, {})), ConfigError);
}

}  // namespace
}  // namespace kenn
