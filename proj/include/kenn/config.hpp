#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "kenn/clause.hpp"
#include "kenn/graph.hpp"
#include "kenn/trainer.hpp"

namespace kenn {

// Every recognised key with its default value. Keys outside this tree are
// rejected.
nlohmann::json default_config();

struct ConfigCheck {
    nlohmann::json normalized;
    std::vector<std::string> errors;

    bool ok() const { return errors.empty(); }
};

// Fills defaults, resolves relative paths against `base_dir` and collects every
// problem rather than stopping at the first. A run_meta.json document is
// accepted in place of a config and its embedded config is used.
ConfigCheck normalize_config(const nlohmann::json& raw, const std::filesystem::path& base_dir);

ConfigCheck validate_config(const std::filesystem::path& config_path,
                            std::span<const std::string> overrides = {});

// `dotted.key=value`. The value is read as JSON when it parses, as a string
// otherwise; `a..b` expands to the integer list [a, ..., b]. Throws
// ConfigError for unknown keys.
void apply_override(nlohmann::json& config, std::string_view assignment);

struct Setup {
    Knowledge knowledge;
    GraphData data;
    ExperimentConfig experiment;
    std::vector<std::string> warnings;
};

Setup load_setup(const nlohmann::json& normalized);

std::vector<BenchSize> bench_sizes(const nlohmann::json& normalized);

}  // namespace kenn
