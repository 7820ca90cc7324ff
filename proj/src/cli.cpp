#include "asap/cli.hpp"

#include "asap/config.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <ostream>

namespace asap::cli {

namespace fs = std::filesystem;

namespace {

/// Output file written under a temporary name and renamed on commit;
/// removed if never committed.
class staged_file
{
public:
    explicit staged_file(fs::path target)
        : target_(std::move(target)), temp_(target_.string() + ".partial")
    {
        out_.open(temp_, std::ios::binary | std::ios::trunc);
        if (!out_)
            throw config_error("out", "cannot write '" + target_.string() + "'");
    }

    staged_file(const staged_file&) = delete;
    staged_file& operator=(const staged_file&) = delete;

    ~staged_file()
    {
        if (!committed_) {
            out_.close();
            std::error_code ec;
            fs::remove(temp_, ec);
        }
    }

    std::ostream& stream() { return out_; }

    void commit()
    {
        out_.close();
        if (!out_)
            throw std::runtime_error("write failed: " + target_.string());
        fs::rename(temp_, target_);
        committed_ = true;
    }

private:
    fs::path target_;
    fs::path temp_;
    std::ofstream out_;
    bool committed_ = false;
};

key_values collect_overrides(const std::vector<std::string>& sets,
                             const std::vector<std::string>& extras)
{
    key_values kv;
    for (const auto& s : sets) {
        const auto eq = s.find('=');
        if (eq == std::string::npos || eq == 0)
            throw config_error(s, "--set expects key=value");
        kv.emplace_back(s.substr(0, eq), s.substr(eq + 1));
    }
    for (std::size_t i = 0; i < extras.size(); ++i) {
        const auto& arg = extras[i];
        if (arg.rfind("--", 0) != 0 || arg.size() <= 2)
            throw config_error(arg, "unexpected argument");
        const auto body = arg.substr(2);
        const auto eq = body.find('=');
        if (eq != std::string::npos) {
            kv.emplace_back(body.substr(0, eq), body.substr(eq + 1));
            continue;
        }
        if (i + 1 >= extras.size())
            throw config_error(body, "missing value");
        kv.emplace_back(body, extras[++i]);
    }
    return kv;
}

struct summary
{
    std::size_t packages = 0;
    double mean_abs_lag_us = 0.0;
    double final_gamma = 1.0;
    std::uint64_t drops_filter = 0;
    std::uint64_t drops_overflow = 0;
    double max_rate_raw = 0.0;
};

summary summarize(const run_result& r)
{
    summary s;
    s.packages = r.packages.size();
    double total = 0.0;
    for (const auto& m : r.packages)
        total += std::fabs(static_cast<double>(m.lag_us));
    s.mean_abs_lag_us = s.packages ? total / static_cast<double>(s.packages) : 0.0;
    s.final_gamma = r.final_gamma;
    s.drops_filter = r.filter_dropped;
    s.drops_overflow = r.overflow_dropped;
    s.max_rate_raw = r.max_rate_raw;
    return s;
}

void check_conservation(const run_result& r)
{
    std::uint64_t packaged = 0;
    for (const auto& m : r.packages)
        packaged += m.size;
    if (packaged + r.filter_dropped + r.overflow_dropped + r.residual != r.source_events)
        throw std::logic_error("event conservation violated");
}

int run_command(const std::string& scenario_arg, const std::optional<std::uint64_t>& seed,
                const std::optional<std::string>& mode, const fs::path& out_path,
                const std::optional<fs::path>& events_path, const key_values& overrides,
                std::ostream& out)
{
    scenario sc;
    if (auto kv = bundled_scenario(scenario_arg)) {
        sc.name = scenario_arg;
        apply_settings(sc, *kv);
    } else {
        if (!fs::is_regular_file(scenario_arg))
            throw config_error("scenario", "not a bundled scenario or readable file: '" + scenario_arg + "'");
        sc.name = fs::path(scenario_arg).stem().string();
        apply_settings(sc, read_config_file(scenario_arg));
    }
    if (const char* env = std::getenv("ASAP_CONFIG"); env && *env)
        apply_settings(sc, read_config_file(env));
    apply_settings(sc, overrides);
    if (seed)
        apply_setting(sc, "seed", std::to_string(*seed));
    if (mode)
        apply_setting(sc, "mode", *mode);
    validate(sc);

    staged_file metrics(out_path);
    std::optional<staged_file> events_file;
    std::optional<event_writer> writer;
    std::unique_ptr<stream_source> source = make_source(sc);
    if (events_path) {
        events_file.emplace(*events_path);
        writer.emplace(events_file->stream());
        source = std::make_unique<tee_source>(std::move(source), *writer);
    }

    const run_result result = run(sc.pipeline, *source);
    check_conservation(result);

    write_metrics_csv(metrics.stream(), result.packages);
    metrics.commit();
    if (events_file)
        events_file->commit();

    const auto s = summarize(result);
    out << "scenario=" << sc.name << " packages=" << s.packages
        << " mean_abs_lag_us=" << format_double(s.mean_abs_lag_us)
        << " final_gamma=" << format_double(s.final_gamma) << " drops_filter=" << s.drops_filter
        << " drops_overflow=" << s.drops_overflow
        << " max_rate_raw=" << format_double(s.max_rate_raw) << '\n';
    return ok;
}

} // namespace

int run_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Adaptive event packaging scenario runner", "asap"};
    app.require_subcommand(1);
    auto* run_cmd = app.add_subcommand("run", "Run a scenario and write per-package metrics");
    run_cmd->allow_extras();

    std::string scenario_arg;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> mode;
    std::string out_path = "metrics.csv";
    std::optional<std::string> events_path;
    std::vector<std::string> sets;

    run_cmd->add_option("--scenario", scenario_arg, "Bundled name (constant, ramp, fig3, fig4) or config file")
        ->required();
    run_cmd->add_option("--seed", seed, "Random seed");
    run_cmd->add_option("--out", out_path, "Metrics CSV path");
    run_cmd->add_option("--events-out", events_path, "Write the source events as CSV");
    run_cmd->add_option("--mode", mode, "virtual or realtime");
    run_cmd->add_option("--set", sets, "key=value override (repeatable)");

    try {
        std::vector<std::string> argv(args.rbegin(), args.rend());
        app.parse(argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return ok;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return config_failure;
    }

    try {
        const auto overrides = collect_overrides(sets, run_cmd->remaining());
        std::optional<fs::path> events;
        if (events_path)
            events = *events_path;
        return run_command(scenario_arg, seed, mode, out_path, events, overrides, out);
    } catch (const config_error& e) {
        err << "error: config key '" << e.key() << "': " << e.what() << '\n';
        return config_failure;
    } catch (const parse_error& e) {
        err << "error: parse: " << e.what() << '\n';
        return config_failure;
    } catch (const ordering_error& e) {
        err << "error: ordering: " << e.what() << '\n';
        return config_failure;
    } catch (const std::exception& e) {
        err << "error: internal: " << e.what() << '\n';
        return internal_error;
    }
}

} // namespace asap::cli
