#pragma once

#include "asap/event.hpp"
#include "asap/rng.hpp"

#include <deque>
#include <span>
#include <vector>

namespace asap {

/// Sliding-window event rate: count of timestamps in [newest - window, newest]
/// divided by the window length.
class rate_estimator
{
public:
    explicit rate_estimator(time_us window_us);

    /// Throws ordering_error if `t` precedes the newest timestamp seen.
    void add(time_us t);
    void add(std::span<const time_us> batch);

    /// Moves the window end forward to `now` without adding an event.
    void advance(time_us now);

    /// Events per second over the current window.
    double estimate() const noexcept
    {
        return static_cast<double>(window_.size()) * 1e6 / static_cast<double>(window_us_);
    }

    time_us window_us() const noexcept { return window_us_; }

private:
    void evict(time_us now);

    time_us window_us_;
    time_us newest_ = 0;
    std::deque<time_us> window_;
};

struct gamma_config
{
    double a = 5e6;          ///< upper bound on filtered rate, events/s
    double beta = 0.25;      ///< smoothing gain in (0, 1]
    double gamma_min = 0.01; ///< keep-probability floor in (0, 1)
    time_us rate_window_us = 10'000;

    /// Throws config_error naming the offending `gamma.*` key.
    void validate() const;
};

/// min(1, a / rate_raw) clamped to [gamma_min, 1]; 1 when rate_raw is 0.
double target_gamma(double rate_raw, double a, double gamma_min = 0.0);

/// Keep-probability state. `rate_raw` and `rate_filtered` hold the estimates
/// taken at the most recent update.
struct gamma_state
{
    double gamma = 1.0;
    double rate_raw = 0.0;
    double rate_filtered = 0.0;
    gamma_config config;
};

/// One exponential step of gamma toward target_gamma(rate_raw).
gamma_state update_gamma(gamma_state state, double rate_raw);

/// Random per-event discard with an adaptive keep-probability.
///
/// Every incoming event feeds the raw-rate window. Once per window length of
/// event time the raw estimate drives update_gamma, so gamma reacts to the
/// incoming rate rather than to its own output.
class gamma_filter
{
public:
    gamma_filter(gamma_config config, std::uint64_t seed);

    /// Decides one event. Returns true if kept.
    bool offer(const event& e);

    /// Filters an ordered batch, appending survivors to `kept`.
    std::size_t apply(std::span<const event> events, std::vector<event>& kept);

    /// Pins gamma and disables adaptation (used for fixed-probability runs).
    void freeze(double gamma);

    const gamma_state& state() const noexcept { return state_; }
    std::uint64_t dropped() const noexcept { return dropped_; }

private:
    gamma_state state_;
    rate_estimator raw_;
    rate_estimator filtered_;
    rng rng_;
    time_us next_update_;
    std::uint64_t dropped_ = 0;
    bool frozen_ = false;
};

} // namespace asap
