#pragma once

#include "asap/pipeline.hpp"

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace asap {

enum class source_kind { constant, ramp, file };

struct source_spec
{
    source_kind kind = source_kind::constant;
    double rate = 1e6;
    double rate_start = 1e5;
    double rate_end = 1e7;
    double duration_s = 1.0;
    std::filesystem::path path;
};

/// Everything needed for one run: where events come from and how the
/// pipeline is configured.
struct scenario
{
    std::string name = "custom";
    source_spec source;
    pipeline_config pipeline;
};

using key_values = std::vector<std::pair<std::string, std::string>>;

/// Parses the flat `key = value` format. Blank lines and `#` comments are
/// skipped. Throws parse_error on a line without `=`.
key_values parse_config_text(std::string_view text);
key_values read_config_file(const std::filesystem::path& path);

/// Sets one dotted key. Throws config_error naming the key if it is unknown
/// or the value does not parse.
void apply_setting(scenario& s, const std::string& key, const std::string& value);
void apply_settings(scenario& s, const key_values& kv);

/// Settings of a bundled scenario (`constant`, `ramp`, `fig3`, `fig4`).
std::optional<key_values> bundled_scenario(std::string_view name);
std::vector<std::string> bundled_scenario_names();

/// Validates the whole scenario, throwing config_error on the first problem.
void validate(const scenario& s);

/// Opens the scenario's event source.
std::unique_ptr<stream_source> make_source(const scenario& s);

} // namespace asap
