#include "asap/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <sstream>

namespace asap {

namespace {

std::string_view trim(std::string_view s)
{
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos)
        return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

double to_double(const std::string& key, const std::string& value)
{
    double v = 0.0;
    const char* first = value.data();
    const char* last = value.data() + value.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{} || ptr != last || !std::isfinite(v))
        throw config_error(key, "expected a number, got '" + value + "'");
    return v;
}

/// Integer keys also accept exponent notation such as 1e6.
std::int64_t to_int(const std::string& key, const std::string& value)
{
    const double v = to_double(key, value);
    if (v != std::floor(v) || std::fabs(v) > 9.0e15)
        throw config_error(key, "expected an integer, got '" + value + "'");
    return static_cast<std::int64_t>(v);
}

std::size_t to_count(const std::string& key, const std::string& value)
{
    const auto v = to_int(key, value);
    if (v < 0)
        throw config_error(key, "must be >= 0");
    return static_cast<std::size_t>(v);
}

std::uint16_t to_dimension(const std::string& key, const std::string& value)
{
    const auto v = to_int(key, value);
    if (v < 1 || v > std::numeric_limits<std::uint16_t>::max())
        throw config_error(key, "must be in [1, 65535]");
    return static_cast<std::uint16_t>(v);
}

using setter = std::function<void(scenario&, const std::string&, const std::string&)>;

const std::map<std::string, setter, std::less<>>& setters()
{
    static const std::map<std::string, setter, std::less<>> table = {
        {"seed", [](scenario& s, const std::string& k, const std::string& v) {
             const auto n = to_int(k, v);
             if (n < 0)
                 throw config_error(k, "must be >= 0");
             s.pipeline.seed = static_cast<std::uint64_t>(n);
         }},
        {"mode", [](scenario& s, const std::string& k, const std::string& v) {
             if (v == "virtual")
                 s.pipeline.mode = timing_mode::virtual_time;
             else if (v == "realtime")
                 s.pipeline.mode = timing_mode::realtime;
             else
                 throw config_error(k, "expected virtual or realtime, got '" + v + "'");
         }},
        {"sensor.width", [](scenario& s, const std::string& k, const std::string& v) {
             s.pipeline.geometry.width = to_dimension(k, v);
         }},
        {"sensor.height", [](scenario& s, const std::string& k, const std::string& v) {
             s.pipeline.geometry.height = to_dimension(k, v);
         }},
        {"source.kind", [](scenario& s, const std::string& k, const std::string& v) {
             if (v == "constant")
                 s.source.kind = source_kind::constant;
             else if (v == "ramp")
                 s.source.kind = source_kind::ramp;
             else if (v == "file")
                 s.source.kind = source_kind::file;
             else
                 throw config_error(k, "expected constant, ramp or file, got '" + v + "'");
         }},
        {"source.rate", [](scenario& s, const std::string& k, const std::string& v) {
             s.source.rate = to_double(k, v);
         }},
        {"source.rate_start", [](scenario& s, const std::string& k, const std::string& v) {
             s.source.rate_start = to_double(k, v);
         }},
        {"source.rate_end", [](scenario& s, const std::string& k, const std::string& v) {
             s.source.rate_end = to_double(k, v);
         }},
        {"source.duration_s", [](scenario& s, const std::string& k, const std::string& v) {
             s.source.duration_s = to_double(k, v);
         }},
        {"source.path", [](scenario& s, const std::string&, const std::string& v) {
             s.source.path = v;
         }},
        {"gamma.a", [](scenario& s, const std::string& k, const std::string& v) {
             s.pipeline.gamma.a = to_double(k, v);
         }},
        {"gamma.beta", [](scenario& s, const std::string& k, const std::string& v) {
             s.pipeline.gamma.beta = to_double(k, v);
         }},
        {"gamma.min", [](scenario& s, const std::string& k, const std::string& v) {
             s.pipeline.gamma.gamma_min = to_double(k, v);
         }},
        {"gamma.rate_window_us", [](scenario& s, const std::string& k, const std::string& v) {
             s.pipeline.gamma.rate_window_us = to_int(k, v);
         }},
        {"gamma.fixed", [](scenario& s, const std::string& k, const std::string& v) {
             if (v == "off" || v.empty())
                 s.pipeline.fixed_gamma.reset();
             else
                 s.pipeline.fixed_gamma = to_double(k, v);
         }},
        {"packager.n_min", [](scenario& s, const std::string& k, const std::string& v) {
             s.pipeline.packager.n_min = to_count(k, v);
         }},
        {"packager.n_max", [](scenario& s, const std::string& k, const std::string& v) {
             s.pipeline.packager.n_max = to_count(k, v);
         }},
        {"packager.initial_size", [](scenario& s, const std::string& k, const std::string& v) {
             s.pipeline.packager.initial_size = to_count(k, v);
         }},
        {"packager.timeout_us", [](scenario& s, const std::string& k, const std::string& v) {
             s.pipeline.packager.timeout_us = to_int(k, v);
         }},
        {"packager.kappa", [](scenario& s, const std::string& k, const std::string& v) {
             s.pipeline.packager.kappa = to_double(k, v);
         }},
        {"packager.model_smoothing", [](scenario& s, const std::string& k, const std::string& v) {
             s.pipeline.packager.model_smoothing = to_double(k, v);
         }},
        {"consumer.kind", [](scenario& s, const std::string& k, const std::string& v) {
             if (v == "synthetic")
                 s.pipeline.consumer.kind = consumer_kind::synthetic;
             else if (v == "clustering")
                 s.pipeline.consumer.kind = consumer_kind::clustering;
             else
                 throw config_error(k, "expected synthetic or clustering, got '" + v + "'");
         }},
        {"consumer.o_us", [](scenario& s, const std::string& k, const std::string& v) {
             s.pipeline.consumer.synthetic.overhead_s = to_double(k, v) * 1e-6;
         }},
        {"consumer.c_ns", [](scenario& s, const std::string& k, const std::string& v) {
             s.pipeline.consumer.synthetic.per_event_s = to_double(k, v) * 1e-9;
         }},
        {"consumer.jitter", [](scenario& s, const std::string& k, const std::string& v) {
             s.pipeline.consumer.synthetic.jitter_fraction = to_double(k, v);
         }},
        {"consumer.radius_px", [](scenario& s, const std::string& k, const std::string& v) {
             s.pipeline.consumer.radius_px = to_double(k, v);
         }},
        {"consumer.ttl_us", [](scenario& s, const std::string& k, const std::string& v) {
             s.pipeline.consumer.ttl_us = to_int(k, v);
         }},
        {"pipeline.input_buffer_capacity", [](scenario& s, const std::string& k, const std::string& v) {
             s.pipeline.input_buffer_capacity = to_count(k, v);
         }},
    };
    return table;
}

const std::map<std::string, key_values, std::less<>>& bundled()
{
    static const std::map<std::string, key_values, std::less<>> table = {
        {"constant", {{"source.kind", "constant"}, {"source.rate", "1e6"}, {"source.duration_s", "1"}}},
        {"ramp",
         {{"source.kind", "ramp"},
          {"source.rate_start", "1e5"},
          {"source.rate_end", "1e7"},
          {"source.duration_s", "5"}}},
        // Vibration-ramp analogue: the rate crosses gamma.a halfway through.
        {"fig3",
         {{"source.kind", "ramp"},
          {"source.rate_start", "1e5"},
          {"source.rate_end", "1e7"},
          {"source.duration_s", "5"},
          {"gamma.a", "5e6"},
          {"consumer.kind", "synthetic"},
          {"consumer.o_us", "500"},
          {"consumer.c_ns", "100"}}},
        // Flight analogue: steady rate well under gamma.a.
        {"fig4",
         {{"source.kind", "constant"},
          {"source.rate", "1e6"},
          {"source.duration_s", "5"},
          {"gamma.a", "5e6"},
          {"consumer.kind", "synthetic"},
          {"consumer.o_us", "1000"},
          {"consumer.c_ns", "500"}}},
    };
    return table;
}

} // namespace

key_values parse_config_text(std::string_view text)
{
    key_values out;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto end = std::min(text.find('\n', pos), text.size());
        const auto line = trim(text.substr(pos, end - pos));
        ++line_no;
        pos = end + 1;
        if (line.empty() || line.front() == '#')
            continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos)
            throw parse_error(line_no, "expected key = value");
        const auto key = trim(line.substr(0, eq));
        if (key.empty())
            throw parse_error(line_no, "empty key");
        out.emplace_back(std::string(key), std::string(trim(line.substr(eq + 1))));
    }
    return out;
}

key_values read_config_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw config_error("config", "cannot read '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

void apply_setting(scenario& s, const std::string& key, const std::string& value)
{
    const auto& table = setters();
    const auto it = table.find(key);
    if (it == table.end())
        throw config_error(key, "unknown key");
    it->second(s, key, value);
}

void apply_settings(scenario& s, const key_values& kv)
{
    for (const auto& [k, v] : kv)
        apply_setting(s, k, v);
}

std::optional<key_values> bundled_scenario(std::string_view name)
{
    const auto& table = bundled();
    const auto it = table.find(name);
    if (it == table.end())
        return std::nullopt;
    return it->second;
}

std::vector<std::string> bundled_scenario_names()
{
    std::vector<std::string> names;
    for (const auto& [name, kv] : bundled())
        names.push_back(name);
    return names;
}

void validate(const scenario& s)
{
    const auto& src = s.source;
    switch (src.kind) {
    case source_kind::constant:
        if (!(src.rate > 0.0))
            throw config_error("source.rate", "must be > 0");
        if (!(src.duration_s > 0.0))
            throw config_error("source.duration_s", "must be > 0");
        break;
    case source_kind::ramp:
        if (!(src.rate_start > 0.0))
            throw config_error("source.rate_start", "must be > 0");
        if (!(src.rate_end > 0.0))
            throw config_error("source.rate_end", "must be > 0");
        if (!(src.duration_s > 0.0))
            throw config_error("source.duration_s", "must be > 0");
        break;
    case source_kind::file:
        if (src.path.empty())
            throw config_error("source.path", "required for file sources");
        if (!std::filesystem::is_regular_file(src.path))
            throw config_error("source.path", "no such file '" + src.path.string() + "'");
        break;
    }
    s.pipeline.validate();
}

std::unique_ptr<stream_source> make_source(const scenario& s)
{
    const auto& src = s.source;
    const auto& p = s.pipeline;
    switch (src.kind) {
    case source_kind::constant:
        return generate_constant_stream(src.rate, src.duration_s, p.geometry, p.seed);
    case source_kind::ramp:
        return generate_ramp_stream(src.rate_start, src.rate_end, src.duration_s, p.geometry, p.seed);
    case source_kind::file:
        break;
    }
    return read_event_file(src.path, p.geometry);
}

} // namespace asap
