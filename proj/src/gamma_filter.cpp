#include "asap/gamma_filter.hpp"

#include <algorithm>
#include <string>

namespace asap {

rate_estimator::rate_estimator(time_us window_us) : window_us_(window_us)
{
    if (window_us <= 0)
        throw config_error("gamma.rate_window_us", "must be > 0");
}

void rate_estimator::evict(time_us now)
{
    const time_us tail = now - window_us_;
    while (!window_.empty() && window_.front() < tail)
        window_.pop_front();
}

void rate_estimator::add(time_us t)
{
    if (t < newest_)
        throw ordering_error("rate window: timestamp " + std::to_string(t) + " precedes " +
                             std::to_string(newest_));
    newest_ = t;
    window_.push_back(t);
    evict(t);
}

void rate_estimator::add(std::span<const time_us> batch)
{
    for (time_us t : batch)
        add(t);
}

void rate_estimator::advance(time_us now)
{
    if (now < newest_)
        throw ordering_error("rate window: cannot move back to " + std::to_string(now));
    newest_ = now;
    evict(now);
}

void gamma_config::validate() const
{
    if (!(a > 0.0))
        throw config_error("gamma.a", "must be > 0");
    if (!(beta > 0.0 && beta <= 1.0))
        throw config_error("gamma.beta", "must be in (0, 1]");
    if (!(gamma_min > 0.0 && gamma_min < 1.0))
        throw config_error("gamma.min", "must be in (0, 1)");
    if (rate_window_us <= 0)
        throw config_error("gamma.rate_window_us", "must be > 0");
}

double target_gamma(double rate_raw, double a, double gamma_min)
{
    if (!(a > 0.0))
        throw config_error("gamma.a", "must be > 0");
    if (rate_raw <= 0.0)
        return 1.0;
    return std::clamp(a / rate_raw, gamma_min, 1.0);
}

gamma_state update_gamma(gamma_state state, double rate_raw)
{
    const auto& cfg = state.config;
    const double target = target_gamma(rate_raw, cfg.a, cfg.gamma_min);
    state.gamma = std::clamp(state.gamma + cfg.beta * (target - state.gamma), cfg.gamma_min, 1.0);
    state.rate_raw = rate_raw;
    return state;
}

gamma_filter::gamma_filter(gamma_config config, std::uint64_t seed)
    : raw_(config.rate_window_us),
      filtered_(config.rate_window_us),
      rng_(rng::split(seed, 1)),
      next_update_(config.rate_window_us)
{
    config.validate();
    state_.config = config;
}

bool gamma_filter::offer(const event& e)
{
    raw_.add(e.t);
    if (e.t >= next_update_) {
        filtered_.advance(e.t);
        if (!frozen_)
            state_ = update_gamma(state_, raw_.estimate());
        else
            state_.rate_raw = raw_.estimate();
        state_.rate_filtered = filtered_.estimate();
        const time_us w = state_.config.rate_window_us;
        next_update_ = (e.t / w + 1) * w;
    }

    // One draw per event regardless of gamma keeps the random sequence
    // aligned with stream position.
    const bool keep = rng_.uniform() < state_.gamma;
    if (keep)
        filtered_.add(e.t);
    else
        ++dropped_;
    return keep;
}

std::size_t gamma_filter::apply(std::span<const event> events, std::vector<event>& kept)
{
    std::size_t n = 0;
    for (const auto& e : events) {
        if (offer(e)) {
            kept.push_back(e);
            ++n;
        }
    }
    return n;
}

void gamma_filter::freeze(double gamma)
{
    if (!(gamma > 0.0 && gamma <= 1.0))
        throw config_error("gamma.fixed", "must be in (0, 1]");
    frozen_ = true;
    state_.gamma = gamma;
}

} // namespace asap
