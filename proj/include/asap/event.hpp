#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace asap {

/// Microseconds on the pipeline clock (event time or virtual/wall time).
using time_us = std::int64_t;

/// One brightness-change detection at a pixel.
struct event
{
    time_us t = 0;
    std::uint16_t x = 0;
    std::uint16_t y = 0;
    std::int8_t polarity = 1;

    friend bool operator==(const event&, const event&) = default;
};

struct sensor_geometry
{
    std::uint16_t width = 346;
    std::uint16_t height = 260;

    bool contains(const event& e) const noexcept { return e.x < width && e.y < height; }
};

/// Ordered, non-empty batch of events delivered to a consumer as one unit.
struct event_package
{
    std::vector<event> events;
    std::uint64_t seq = 0;

    std::size_t size() const noexcept { return events.size(); }
    /// Newest minus oldest timestamp.
    time_us span() const noexcept { return events.empty() ? 0 : events.back().t - events.front().t; }
};

// Errors ---------------------------------------------------------------------

class config_error : public std::runtime_error
{
public:
    config_error(std::string key, const std::string& what)
        : std::runtime_error(key + ": " + what), key_(std::move(key)) {}

    const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

class parse_error : public std::runtime_error
{
public:
    parse_error(std::size_t line, const std::string& what)
        : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class ordering_error : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

} // namespace asap
