#pragma once

#include "asap/adaptive_packager.hpp"
#include "asap/consumer.hpp"
#include "asap/event.hpp"
#include "asap/gamma_filter.hpp"
#include "asap/stream_source.hpp"

#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace asap {

enum class consumer_kind { synthetic, clustering };

struct consumer_config
{
    consumer_kind kind = consumer_kind::synthetic;
    synthetic_cost_model synthetic;
    double radius_px = 10.0;
    time_us ttl_us = 50'000;
};

struct pipeline_config
{
    timing_mode mode = timing_mode::virtual_time;
    std::uint64_t seed = 0;
    sensor_geometry geometry;
    gamma_config gamma;
    /// When set, gamma is pinned to this value instead of adapting.
    std::optional<double> fixed_gamma;
    packager_config packager;
    consumer_config consumer;
    std::size_t input_buffer_capacity = 1'000'000;

    /// Throws config_error naming the first offending key.
    void validate() const;
};

std::unique_ptr<consumer> make_consumer(const pipeline_config& config);

/// One row per package, in seq order.
struct package_metrics
{
    std::uint64_t seq = 0;
    std::size_t size = 0;
    time_us span_us = 0;
    time_us processing_time_us = 0;
    time_us lag_us = 0; ///< processing_time_us - span_us
    double gamma_at_emit = 1.0;
    double rate_raw = 0.0;
    double rate_filtered = 0.0;
    std::uint64_t dropped_by_filter = 0;   ///< since the previous package
    std::uint64_t dropped_by_overflow = 0; ///< since the previous package
    time_us emit_clock_us = 0;

    // Not part of the CSV.
    time_us dispatch_clock_us = 0;
    time_us max_wait_us = 0;
    bool by_timeout = false;
    std::size_t target_size = 0;
};

struct run_result
{
    std::vector<package_metrics> packages;
    std::uint64_t source_events = 0;
    std::uint64_t filter_dropped = 0;
    std::uint64_t overflow_dropped = 0;
    /// Events still held in any buffer when the run ended.
    std::uint64_t residual = 0;
    /// Drops after the last package, not attributed to any row.
    std::uint64_t trailing_filter_dropped = 0;
    std::uint64_t trailing_overflow_dropped = 0;
    double final_gamma = 1.0;
    double max_rate_raw = 0.0;
};

/// Source -> gamma filter -> drop-oldest input buffer -> packager -> consumer,
/// with consumer feedback driving the packager. Consumes `source` fully.
///
/// Virtual mode steps a single logical clock through arrivals, consumer
/// completions and packager timeouts in time order, and is bit-deterministic
/// for a given seed with the synthetic consumer. Realtime mode runs one
/// thread per stage against the wall clock.
run_result run(const pipeline_config& config, stream_source& source);
run_result run(const pipeline_config& config, stream_source& source, consumer& algorithm);

// Metrics CSV -------------------------------------------------------------------

inline constexpr std::string_view metrics_header =
    "seq,size,span_us,proc_us,lag_us,gamma,rate_raw,rate_filtered,drop_filter,drop_overflow,clock_us";

std::string format_metrics_row(const package_metrics& m);
void write_metrics_csv(std::ostream& out, const std::vector<package_metrics>& rows);

/// Shortest round-trip decimal form of `v`.
std::string format_double(double v);

} // namespace asap
