#include "cli.hpp"

#include <algorithm>
#include <iomanip>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "kenn/checkpoint.hpp"
#include "kenn/config.hpp"
#include "kenn/io.hpp"
#include "kenn/trainer.hpp"

namespace kenn::cli {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

struct Options {
    std::string config;
    std::vector<std::string> overrides;
    std::string knowledge_file;
    std::vector<std::string> unary;
    std::vector<std::string> binary;
};

// Thrown for problems found before any work starts.
struct Invalid {
    std::vector<std::string> errors;
};

json run_meta(const std::string& verb, const json& config) {
    return {{"artifact_version", KENN_VERSION},
            {"command", verb},
            {"seeds", config["seeds"]},
            {"config", config}};
}

void write_json(const fs::path& path, const json& doc) { write_file_atomic(path, doc.dump(2) + "\n"); }

fs::path out_dir(const json& config) { return config["output"]["dir"].get<std::string>(); }

json load_config(const Options& opt) {
    auto check = validate_config(opt.config, opt.overrides);
    if (!check.ok()) throw Invalid{check.errors};
    return check.normalized;
}

Setup setup_from(const json& config, std::ostream& err) {
    Setup s;
    try {
        s = load_setup(config);
    } catch (const ParseError& e) {
        throw Invalid{{e.what()}};
    } catch (const ConfigError& e) {
        throw Invalid{{e.what()}};
    } catch (const DataError& e) {
        throw Invalid{{e.what()}};
    }
    for (const auto& w : s.warnings) err << "warning: " << w << "\n";
    return s;
}

int cmd_parse_knowledge(const Options& opt, std::ostream& out) {
    std::vector<std::string> unary = opt.unary;
    std::vector<std::string> binary = opt.binary;
    if (!opt.config.empty()) {
        const json config = load_config(opt);
        unary = config["predicates"]["unary"].get<std::vector<std::string>>();
        binary = config["predicates"]["binary"].get<std::vector<std::string>>();
    }
    if (unary.empty() && binary.empty()) throw Invalid{{"declare predicates with --unary/--binary or --config"}};
    std::string text;
    try {
        text = read_file(opt.knowledge_file);
    } catch (const Error& e) {
        throw Invalid{{e.what()}};
    }
    Knowledge k;
    try {
        k = parse_knowledge(text, unary, binary);
    } catch (const ParseError& e) {
        throw Invalid{{opt.knowledge_file + ":" + std::to_string(e.line()) + ":" +
                       std::to_string(e.column()) + ": " + std::string(to_string(e.kind())) + ": " +
                       e.what()}};
    } catch (const ConfigError& e) {
        throw Invalid{{e.what()}};
    }
    for (const auto& c : k.clauses) out << canonical_string(c) << "\n";
    out << "K_U=" << k.unary_clauses.size() << " K_B=" << k.binary_clauses.size() << "\n";
    return kOk;
}

int cmd_ground_check(const Options& opt, std::ostream& out, std::ostream& err) {
    const json config = load_config(opt);
    const Setup s = setup_from(config, err);
    const auto& k = s.knowledge;
    const auto index = build_grounding_index(k, s.data.num_constants(), s.data.edges);
    const auto expected = grounding_count(k, s.data.num_constants(), s.data.num_edges());

    out << "constants=" << s.data.num_constants() << " edges=" << s.data.num_edges() << "\n";
    GroundingCount seen;
    for (std::size_t ci = 0; ci < k.clauses.size(); ++ci) {
        const bool unary = k.clauses[ci].kind == ClauseKind::Unary;
        const std::size_t rows = unary ? s.data.num_constants() : index.rows_per_clause();
        (unary ? seen.unary : seen.binary) += rows;
        out << ci << "\t" << (unary ? "unary" : "binary") << "\t" << rows << "\t"
            << canonical_string(k.clauses[ci]) << "\n";
    }
    out << "unary_rows=" << seen.unary << " binary_rows=" << seen.binary
        << " expected_unary=" << expected.unary << " expected_binary=" << expected.binary << "\n";
    if (seen != expected) {
        err << "error: grounding rows do not match |edges|·|K_B|\n";
        return kFailed;
    }
    return kOk;
}

Split first_split(const json& config, const Setup& s) {
    return make_split(s.data, config["split"]["fractions"][0].get<double>(), s.experiment.mode,
                      config["seeds"][0].get<std::uint64_t>());
}

int cmd_train(const Options& opt, std::ostream& out, std::ostream& err) {
    const json config = load_config(opt);
    const Setup s = setup_from(config, err);
    const auto seed = config["seeds"][0].get<std::uint64_t>();
    const Split split = first_split(config, s);
    auto result = train(s.experiment.train, s.knowledge, s.data, split, seed);
    const double acc = evaluate(result.model, s.data, split);

    const fs::path dir = out_dir(config);
    save_checkpoint(result.model, config["checkpoint"].get<std::string>());
    write_json(dir / "weights.json", weight_report(result.model));
    json meta = run_meta("train", config);
    meta["result"] = {{"final_loss", result.final_loss},
                      {"accuracy", acc},
                      {"train_time_s", result.train_time_s}};
    write_json(dir / "run_meta.json", meta);
    out << "layers=" << s.experiment.train.ke_layers << " seed=" << seed
        << " final_loss=" << result.final_loss << " accuracy=" << acc << "\n";
    return kOk;
}

int cmd_eval(const Options& opt, std::ostream& out, std::ostream& err) {
    const json config = load_config(opt);
    const Setup s = setup_from(config, err);
    const std::string path = config["checkpoint"];
    KennModel model = [&] {
        try {
            return load_checkpoint(path);
        } catch (const Error& e) {
            throw Invalid{{"checkpoint " + path + ": " + e.what()}};
        }
    }();
    if (!(model.knowledge().catalog == s.data.catalog)) {
        throw Invalid{{"checkpoint " + path + " was trained on a different predicate catalog"}};
    }
    if (model.spec().input_dim != s.data.features.cols()) {
        throw Invalid{{"checkpoint " + path + " expects " + std::to_string(model.spec().input_dim) +
                       " features, data has " + std::to_string(s.data.features.cols())}};
    }
    const Split split = first_split(config, s);
    const double acc = evaluate(model, s.data, split);
    json meta = run_meta("eval", config);
    meta["result"] = {{"accuracy", acc}, {"test_nodes", split.test_nodes.size()}};
    write_json(out_dir(config) / "eval.json", meta);
    out << "accuracy=" << acc << " test_nodes=" << split.test_nodes.size() << "\n";
    return kOk;
}

int cmd_experiment(const Options& opt, std::ostream& out, std::ostream& err) {
    const json config = load_config(opt);
    const Setup s = setup_from(config, err);
    const auto table = run_experiment(s.experiment, s.knowledge, s.data, &out);

    const fs::path dir = out_dir(config);
    std::ostringstream results, summary;
    table.write_csv(results);
    table.write_summary_csv(summary);
    write_file_atomic(dir / "results.csv", results.str());
    write_file_atomic(dir / "summary.csv", summary.str());

    json weights = json::array();
    for (const auto& r : table.runs) {
        if (r.layers == 0) continue;
        weights.push_back({{"fraction", r.fraction}, {"seed", r.seed}, {"layers", r.layers},
                           {"weights", r.clause_weights}});
    }
    write_json(dir / "weights.json", weights);
    json meta = run_meta("experiment", config);
    meta["failures"] = table.failures;
    write_json(dir / "run_meta.json", meta);

    out << std::fixed << std::setprecision(4);
    for (const auto& c : table.summary) {
        out << "fraction=" << c.fraction << " layers=" << c.layers << " runs=" << c.runs
            << " acc_nn=" << c.mean_acc_nn << " acc_kenn=" << c.mean_acc_kenn
            << " improvement=" << c.mean_improvement << " ± " << c.std_improvement << "\n";
    }
    for (const auto& f : table.failures) err << "run failed: " << f << "\n";
    return table.failures.empty() ? kOk : kFailed;
}

int cmd_bench(const Options& opt, std::ostream& out, std::ostream& err) {
    const json config = load_config(opt);
    const Setup s = setup_from(config, err);
    const auto sizes = bench_sizes(config);
    const auto rows = benchmark_scaling(s.knowledge, sizes, config["bench"]["layers"].get<std::size_t>(),
                                        config["bench"]["reps"].get<std::size_t>(),
                                        config["seeds"][0].get<std::uint64_t>());
    std::ostringstream csv;
    csv << "constants,edges,grounding_rows,seconds,seconds_per_row\n" << std::setprecision(10);
    for (const auto& r : rows) {
        csv << r.constants << ',' << r.edges << ',' << r.grounding_rows << ',' << r.seconds << ','
            << r.seconds_per_row << '\n';
    }
    const fs::path dir = out_dir(config);
    write_file_atomic(dir / "bench.csv", csv.str());
    write_json(dir / "run_meta.json", run_meta("bench", config));
    out << csv.str();
    return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Knowledge enhanced neural networks", "kenn"};
    app.set_version_flag("--version", KENN_VERSION);
    app.require_subcommand(1);
    Options opt;

    auto common = [&](CLI::App* sub, bool config_required) {
        auto* c = sub->add_option("--config", opt.config, "JSON config file");
        if (config_required) c->required();
        c->check(CLI::ExistingFile);
        sub->add_option("--override", opt.overrides, "dotted.key=value, repeatable");
        return sub;
    };
    auto* train_cmd = common(app.add_subcommand("train", "train one model and save a checkpoint"), true);
    auto* eval_cmd = common(app.add_subcommand("eval", "evaluate a saved checkpoint"), true);
    auto* exp_cmd = common(app.add_subcommand("experiment", "run the fraction × seed × layer grid"), true);
    auto* bench_cmd = common(app.add_subcommand("bench", "time the enhancer stack"), true);
    auto* ground_cmd = common(app.add_subcommand("ground-check", "count grounding rows per clause"), true);
    auto* parse_cmd = common(app.add_subcommand("parse-knowledge", "parse and print a knowledge file"), false);
    parse_cmd->add_option("file", opt.knowledge_file, "knowledge file")->required();
    parse_cmd->add_option("--unary", opt.unary, "unary predicates")->delimiter(',');
    parse_cmd->add_option("--binary", opt.binary, "binary predicates")->delimiter(',');

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kInvalid;
    }

    try {
        if (train_cmd->parsed()) return cmd_train(opt, out, err);
        if (eval_cmd->parsed()) return cmd_eval(opt, out, err);
        if (exp_cmd->parsed()) return cmd_experiment(opt, out, err);
        if (bench_cmd->parsed()) return cmd_bench(opt, out, err);
        if (ground_cmd->parsed()) return cmd_ground_check(opt, out, err);
        if (parse_cmd->parsed()) return cmd_parse_knowledge(opt, out);
    } catch (const Invalid& e) {
        for (const auto& msg : e.errors) err << "error: " << msg << "\n";
        return kInvalid;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kFailed;
    }
    return kInvalid;
}

}  // namespace kenn::cli
