#pragma once

#include "asap/event.hpp"
#include "asap/rng.hpp"

#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <span>
#include <string>

namespace asap {

/// Pull interface yielding events in non-decreasing timestamp order.
/// Single consumer; movable between threads, not shareable.
class stream_source
{
public:
    virtual ~stream_source() = default;

    /// Next event, or nullopt once exhausted.
    virtual std::optional<event> next() = 0;
};

/// Poisson arrivals with a rate that moves linearly from `rate_start` to
/// `rate_end` over `duration_s`. Pixels and polarity are uniform.
///
/// Arrival times come from inverting the cumulative intensity
/// L(t) = r0*t + k*t^2/2 (k = slope) at unit-exponential increments, so the
/// constant-rate stream is the k == 0 case of the same code path.
class poisson_source final : public stream_source
{
public:
    poisson_source(double rate_start, double rate_end, double duration_s,
                   sensor_geometry geometry, std::uint64_t seed);

    std::optional<event> next() override;

private:
    double rate_start_;
    double slope_;
    double duration_;
    sensor_geometry geometry_;
    rng rng_;
    double intensity_ = 0.0;
};

std::unique_ptr<stream_source> generate_constant_stream(double rate, double duration_s,
                                                        sensor_geometry geometry,
                                                        std::uint64_t seed);

std::unique_ptr<stream_source> generate_ramp_stream(double rate_start, double rate_end,
                                                    double duration_s, sensor_geometry geometry,
                                                    std::uint64_t seed);

/// Replays an event CSV (`t_us,x,y,p`, optional header). Lines are parsed
/// lazily; malformed lines raise parse_error, timestamp regressions raise
/// ordering_error.
class file_source final : public stream_source
{
public:
    file_source(const std::filesystem::path& path, sensor_geometry geometry);

    std::optional<event> next() override;

private:
    std::ifstream in_;
    sensor_geometry geometry_;
    std::size_t line_no_ = 0;
    time_us last_t_ = 0;
    bool any_ = false;
};

std::unique_ptr<stream_source> read_event_file(const std::filesystem::path& path,
                                               sensor_geometry geometry = {});

/// Parses one CSV data line. Throws parse_error tagged with `line_no`.
event parse_event_line(std::string_view line, std::size_t line_no, sensor_geometry geometry);

/// Canonical single-line form, without the newline.
std::string format_event(const event& e);

/// Appends events to a stream in canonical CSV form, writing the header first.
class event_writer
{
public:
    explicit event_writer(std::ostream& out);
    void write(const event& e);

private:
    std::ostream& out_;
};

void write_event_file(const std::filesystem::path& path, std::span<const event> events);

/// Wraps a source and mirrors every yielded event to a writer.
class tee_source final : public stream_source
{
public:
    tee_source(std::unique_ptr<stream_source> inner, event_writer& writer)
        : inner_(std::move(inner)), writer_(writer) {}

    std::optional<event> next() override
    {
        auto e = inner_->next();
        if (e)
            writer_.write(*e);
        return e;
    }

private:
    std::unique_ptr<stream_source> inner_;
    event_writer& writer_;
};

} // namespace asap
