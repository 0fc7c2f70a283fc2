#include "kenn/config.hpp"

#include <charconv>

#include "kenn/io.hpp"

namespace kenn {

using nlohmann::json;
namespace fs = std::filesystem;

json default_config() {
    const SynthParams synth;
    return {
        {"predicates", {{"unary", json::array()}, {"binary", json::array()}}},
        {"knowledge", ""},
        {"data",
         {{"source", "files"},
          {"nodes", ""},
          {"edges", ""},
          {"symmetrize", false},
          {"allow_self_loops", false},
          {"synthetic",
           {{"nodes", synth.nodes},
            {"classes", synth.classes},
            {"feat_dim", synth.feat_dim},
            {"p_in", synth.p_in},
            {"p_out", synth.p_out},
            {"seed", synth.seed},
            {"words_per_class", synth.words_per_class},
            {"p_word_on", synth.p_word_on},
            {"p_word_noise", synth.p_word_noise}}}}},
        {"split", {{"mode", "inductive"}, {"fractions", {0.1}}}},
        {"seeds", {0}},
        {"layers", {3}},
        {"training",
         {{"epochs", 300},
          {"optimizer", "adam"},
          {"lr", 1e-3},
          {"clause_lr", nullptr},
          {"beta1", 0.9},
          {"beta2", 0.999},
          {"eps", 1e-8},
          {"hidden", {50, 50, 50}},
          {"share_weights", false},
          {"temperature", 1.0},
          {"clause_weight_init", kDefaultClauseWeightInit},
          {"binary_saturation", 25.0}}},
        {"bench",
         {{"sizes", {{1000, 10000}, {1000, 20000}, {1000, 40000}}},
          {"dense", {100, 200}},
          {"layers", 1},
          {"reps", 5}}},
        {"output", {{"dir", "kenn_out"}}},
        {"checkpoint", ""},
        {"jobs", 1},
    };
}

namespace {

// Keys whose value is a list but may be given as a single scalar.
bool is_list_key(const std::string& path) {
    return path == "seeds" || path == "layers" || path == "split.fractions";
}

bool compatible(const json& def, const json& v) {
    if (def.is_null()) return v.is_null() || v.is_number();
    if (def.is_number()) return v.is_number();
    if (def.is_boolean()) return v.is_boolean();
    if (def.is_string()) return v.is_string();
    if (def.is_array()) return v.is_array();
    if (def.is_object()) return v.is_object();
    return false;
}

void merge(const json& raw, json& into, const std::string& prefix, std::vector<std::string>& errors) {
    for (auto it = raw.begin(); it != raw.end(); ++it) {
        const std::string path = prefix.empty() ? it.key() : prefix + "." + it.key();
        if (!into.contains(it.key())) {
            errors.push_back("unknown key '" + path + "'");
            continue;
        }
        json& slot = into[it.key()];
        json value = *it;
        if (is_list_key(path) && value.is_number()) value = json::array({value});
        if (!compatible(slot, value)) {
            errors.push_back("'" + path + "' has the wrong type (expected " +
                             std::string(slot.is_null() ? "number or null" : slot.type_name()) + ")");
            continue;
        }
        if (slot.is_object()) {
            merge(value, slot, path, errors);
        } else {
            slot = value;
        }
    }
}

std::string resolve(const std::string& p, const fs::path& base) {
    if (p.empty()) return p;
    fs::path path(p);
    if (path.is_relative()) path = base / path;
    return path.lexically_normal().string();
}

template <class F>
void check(std::vector<std::string>& errors, const std::string& what, F&& body) {
    try {
        body();
    } catch (const std::exception& e) {
        errors.push_back(what + ": " + e.what());
    }
}

SynthParams synth_params(const json& s) {
    SynthParams p;
    p.nodes = s["nodes"].get<std::size_t>();
    p.classes = s["classes"].get<std::size_t>();
    p.feat_dim = s["feat_dim"].get<std::size_t>();
    p.p_in = s["p_in"].get<double>();
    p.p_out = s["p_out"].get<double>();
    p.seed = s["seed"].get<std::uint64_t>();
    p.words_per_class = s["words_per_class"].get<std::size_t>();
    p.p_word_on = s["p_word_on"].get<double>();
    p.p_word_noise = s["p_word_noise"].get<double>();
    return p;
}

bool non_negative_int(const json& v) { return v.is_number_integer() && v.get<long long>() >= 0; }

}  // namespace

ConfigCheck normalize_config(const json& raw_in, const fs::path& base_dir) {
    ConfigCheck out;
    out.normalized = default_config();
    const json& raw =
        raw_in.is_object() && raw_in.contains("artifact_version") && raw_in.contains("config")
            ? raw_in["config"]
            : raw_in;
    if (!raw.is_object()) {
        out.errors.push_back("config must be a JSON object");
        return out;
    }
    merge(raw, out.normalized, "", out.errors);
    json& c = out.normalized;
    auto& errors = out.errors;

    c["knowledge"] = resolve(c["knowledge"], base_dir);
    c["data"]["nodes"] = resolve(c["data"]["nodes"], base_dir);
    c["data"]["edges"] = resolve(c["data"]["edges"], base_dir);
    c["checkpoint"] = resolve(c["checkpoint"], base_dir);
    c["output"]["dir"] = resolve(c["output"]["dir"], base_dir);
    if (c["checkpoint"].get<std::string>().empty()) {
        c["checkpoint"] = (fs::path(c["output"]["dir"].get<std::string>()) / "model.ckpt").string();
    }

    const std::string source = c["data"]["source"];
    if (source == "synthetic") {
        check(errors, "data.synthetic", [&] {
            const auto p = synth_params(c["data"]["synthetic"]);
            if (p.classes == 0 || p.nodes % p.classes != 0) {
                throw ConfigError("nodes must be a positive multiple of classes");
            }
            json unary = json::array();
            for (std::size_t k = 0; k < p.classes; ++k) unary.push_back("C" + std::to_string(k));
            if (c["predicates"]["unary"].empty()) c["predicates"]["unary"] = unary;
            if (c["predicates"]["binary"].empty()) c["predicates"]["binary"] = {"Cite"};
            if (c["predicates"]["unary"] != unary || c["predicates"]["binary"] != json{"Cite"}) {
                throw ConfigError("synthetic data defines predicates " + unary.dump() +
                                  " and [\"Cite\"]");
            }
        });
    } else if (source == "files") {
        for (const char* key : {"nodes", "edges"}) {
            const std::string p = c["data"][key];
            if (p.empty()) {
                errors.push_back(std::string("data.") + key + ": path is required");
            } else if (!fs::exists(p)) {
                errors.push_back(std::string("data.") + key + ": file not found: " + p);
            }
        }
    } else {
        errors.push_back("data.source must be 'files' or 'synthetic', got '" + source + "'");
    }

    std::optional<Catalog> catalog;
    check(errors, "predicates", [&] {
        const auto unary = c["predicates"]["unary"].get<std::vector<std::string>>();
        const auto binary = c["predicates"]["binary"].get<std::vector<std::string>>();
        if (unary.empty()) throw ConfigError("at least one unary predicate is required");
        catalog = Catalog(unary, binary);
    });

    const std::string knowledge = c["knowledge"];
    if (knowledge.empty()) {
        errors.push_back("knowledge: path is required");
    } else if (!fs::exists(knowledge)) {
        errors.push_back("knowledge: file not found: " + knowledge);
    } else if (catalog) {
        check(errors, "knowledge " + knowledge, [&] {
            parse_knowledge(read_file(knowledge), catalog->unary(), catalog->binary());
        });
    }

    check(errors, "split.mode", [&] { parse_split_mode(c["split"]["mode"].get<std::string>()); });
    if (c["split"]["fractions"].empty()) errors.push_back("split.fractions: empty list");
    for (const auto& f : c["split"]["fractions"]) {
        if (!f.is_number() || !(f.get<double>() > 0.0 && f.get<double>() < 1.0)) {
            errors.push_back("split.fractions: " + f.dump() + " is not in (0, 1)");
        }
    }
    if (c["seeds"].empty()) errors.push_back("seeds: empty list");
    for (const auto& s : c["seeds"]) {
        if (!non_negative_int(s)) errors.push_back("seeds: " + s.dump() + " is not a non-negative integer");
    }
    if (c["layers"].empty()) errors.push_back("layers: empty list");
    for (const auto& l : c["layers"]) {
        if (!non_negative_int(l)) errors.push_back("layers: " + l.dump() + " is not a non-negative integer");
    }

    const json& t = c["training"];
    if (!non_negative_int(t["epochs"]) || t["epochs"].get<long long>() == 0) {
        errors.push_back("training.epochs must be a positive integer");
    }
    if (t["optimizer"] != "adam" && t["optimizer"] != "sgd") {
        errors.push_back("training.optimizer must be 'adam' or 'sgd'");
    }
    for (const char* key : {"lr", "temperature", "clause_weight_init", "binary_saturation", "eps"}) {
        if (!(t[key].get<double>() > 0.0)) errors.push_back(std::string("training.") + key + " must be positive");
    }
    if (!t["clause_lr"].is_null() && !(t["clause_lr"].get<double>() > 0.0)) {
        errors.push_back("training.clause_lr must be positive or null");
    }
    for (const auto& h : t["hidden"]) {
        if (!non_negative_int(h) || h.get<long long>() == 0) {
            errors.push_back("training.hidden: " + h.dump() + " is not a positive integer");
        }
    }
    if (!non_negative_int(c["jobs"]) || c["jobs"].get<long long>() == 0) {
        errors.push_back("jobs must be a positive integer");
    }
    check(errors, "bench", [&] { bench_sizes(c); });
    return out;
}

ConfigCheck validate_config(const fs::path& config_path, std::span<const std::string> overrides) {
    ConfigCheck out;
    json raw;
    try {
        raw = json::parse(read_file(config_path));
    } catch (const std::exception& e) {
        out.errors.push_back("config " + config_path.string() + ": " + e.what());
        return out;
    }
    if (raw.is_object() && raw.contains("artifact_version") && raw.contains("config")) {
        raw = raw["config"];
    }
    std::vector<std::string> override_errors;
    for (const auto& o : overrides) {
        try {
            apply_override(raw, o);
        } catch (const std::exception& e) {
            override_errors.push_back(e.what());
        }
    }
    out = normalize_config(raw, fs::absolute(config_path).parent_path());
    out.errors.insert(out.errors.begin(), override_errors.begin(), override_errors.end());
    return out;
}

void apply_override(json& config, std::string_view assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string_view::npos || eq == 0) {
        throw ConfigError("override '" + std::string(assignment) + "' is not key=value");
    }
    const std::string key(assignment.substr(0, eq));
    const std::string text(assignment.substr(eq + 1));

    const json defaults = default_config();
    const json* def = &defaults;
    std::vector<std::string> parts;
    for (std::size_t pos = 0;;) {
        const auto dot = key.find('.', pos);
        parts.push_back(key.substr(pos, dot == std::string::npos ? std::string::npos : dot - pos));
        if (dot == std::string::npos) break;
        pos = dot + 1;
    }
    for (const auto& part : parts) {
        if (!def->is_object() || !def->contains(part)) {
            throw ConfigError("override: unknown key '" + key + "'");
        }
        def = &(*def)[part];
    }

    json value;
    const auto range = text.find("..");
    long long lo = 0;
    long long hi = 0;
    auto parse_int = [](std::string_view s, long long& v) {
        auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        return ec == std::errc{} && ptr == s.data() + s.size();
    };
    if (range != std::string::npos && parse_int(std::string_view(text).substr(0, range), lo) &&
        parse_int(std::string_view(text).substr(range + 2), hi)) {
        if (hi < lo) throw ConfigError("override: empty range '" + text + "'");
        value = json::array();
        for (long long v = lo; v <= hi; ++v) value.push_back(v);
    } else {
        value = json::parse(text, nullptr, false);
        if (value.is_discarded()) value = text;
    }

    if (!config.is_object()) config = json::object();
    json* slot = &config;
    for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
        if (!slot->contains(parts[i]) || !(*slot)[parts[i]].is_object()) (*slot)[parts[i]] = json::object();
        slot = &(*slot)[parts[i]];
    }
    (*slot)[parts.back()] = value;
}

std::vector<BenchSize> bench_sizes(const json& c) {
    std::vector<BenchSize> out;
    for (const auto& s : c["bench"]["sizes"]) {
        if (!s.is_array() || s.size() != 2 || !non_negative_int(s[0]) || !non_negative_int(s[1])) {
            throw ConfigError("bench.sizes entries must be [constants, edges]");
        }
        out.push_back({s[0].get<std::size_t>(), s[1].get<std::size_t>(), false});
    }
    for (const auto& m : c["bench"]["dense"]) {
        if (!non_negative_int(m)) throw ConfigError("bench.dense entries must be constant counts");
        out.push_back({m.get<std::size_t>(), 0, true});
    }
    if (!non_negative_int(c["bench"]["layers"]) || !non_negative_int(c["bench"]["reps"])) {
        throw ConfigError("bench.layers and bench.reps must be non-negative integers");
    }
    return out;
}

Setup load_setup(const json& c) {
    Setup s;
    const Catalog catalog(c["predicates"]["unary"].get<std::vector<std::string>>(),
                          c["predicates"]["binary"].get<std::vector<std::string>>());
    const json& t = c["training"];
    s.knowledge = parse_knowledge(read_file(c["knowledge"].get<std::string>()), catalog.unary(),
                                  catalog.binary(), t["clause_weight_init"].get<double>());

    const bool symmetrize = c["data"]["symmetrize"].get<bool>();
    if (c["data"]["source"] == "synthetic") {
        s.data = synth_citation_graph(synth_params(c["data"]["synthetic"]));
        if (symmetrize) s.data = symmetrized(s.data);
    } else {
        LoadOptions opts;
        opts.symmetrize = symmetrize;
        opts.allow_self_loops = c["data"]["allow_self_loops"].get<bool>();
        s.data = load_graph(c["data"]["nodes"].get<std::string>(), c["data"]["edges"].get<std::string>(),
                            catalog, opts, &s.warnings);
    }

    auto& e = s.experiment;
    e.mode = parse_split_mode(c["split"]["mode"].get<std::string>());
    e.fractions = c["split"]["fractions"].get<std::vector<double>>();
    e.layers = c["layers"].get<std::vector<std::size_t>>();
    e.seeds = c["seeds"].get<std::vector<std::uint64_t>>();
    e.jobs = c["jobs"].get<std::size_t>();
    e.train.epochs = t["epochs"].get<std::size_t>();
    e.train.optimizer.kind = t["optimizer"] == "sgd" ? OptimizerKind::Sgd : OptimizerKind::Adam;
    e.train.optimizer.lr = t["lr"].get<double>();
    e.train.optimizer.beta1 = t["beta1"].get<double>();
    e.train.optimizer.beta2 = t["beta2"].get<double>();
    e.train.optimizer.eps = t["eps"].get<double>();
    if (!t["clause_lr"].is_null()) e.train.clause_lr = t["clause_lr"].get<double>();
    e.train.hidden = t["hidden"].get<std::vector<std::size_t>>();
    e.train.share_weights = t["share_weights"].get<bool>();
    e.train.temperature = t["temperature"].get<double>();
    e.train.binary_saturation = t["binary_saturation"].get<double>();
    e.train.ke_layers = e.layers.front();
    return s;
}

}  // namespace kenn
