#include "asap/consumer.hpp"

#include <chrono>
#include <cmath>
#include <limits>

namespace asap {

namespace {

using steady = std::chrono::steady_clock;

time_us elapsed_us(steady::time_point since)
{
    return std::chrono::duration_cast<std::chrono::microseconds>(steady::now() - since).count();
}

} // namespace

void synthetic_cost_model::validate() const
{
    if (!(overhead_s >= 0.0))
        throw config_error("consumer.o_us", "must be >= 0");
    if (!(per_event_s >= 0.0))
        throw config_error("consumer.c_ns", "must be >= 0");
    if (!(jitter_fraction >= 0.0 && jitter_fraction < 1.0))
        throw config_error("consumer.jitter", "must be in [0, 1)");
}

synthetic_consumer::synthetic_consumer(synthetic_cost_model model, timing_mode mode,
                                       std::uint64_t seed)
    : model_(model), mode_(mode), rng_(rng::split(seed, 2))
{
    model_.validate();
}

time_us synthetic_consumer::cost(std::size_t size)
{
    const double base = model_.overhead_s + model_.per_event_s * static_cast<double>(size);
    const double noise = (2.0 * rng_.uniform() - 1.0) * model_.jitter_fraction;
    return static_cast<time_us>(std::llround(base * (1.0 + noise) * 1e6));
}

processing_feedback synthetic_consumer::process(const event_package& package)
{
    processing_feedback fb{package.seq, package.size(), package.span(), cost(package.size())};
    if (mode_ == timing_mode::realtime) {
        const auto start = steady::now();
        const auto until = start + std::chrono::microseconds(fb.processing_time);
        while (steady::now() < until) {
        }
        fb.processing_time = elapsed_us(start);
    }
    return fb;
}

std::size_t assign_event(cluster_state& state, const event& e)
{
    auto& cs = state.clusters;
    std::erase_if(cs, [&](const cluster& c) { return e.t - c.last_t > state.ttl; });

    const double ex = e.x;
    const double ey = e.y;
    const double r2 = state.radius * state.radius;
    std::size_t best = cs.size();
    double best_d2 = std::numeric_limits<double>::infinity();
    // Creation order is preserved by erase_if, so strict < keeps the oldest on ties.
    for (std::size_t i = 0; i < cs.size(); ++i) {
        const double dx = cs[i].cx - ex;
        const double dy = cs[i].cy - ey;
        const double d2 = dx * dx + dy * dy;
        if (d2 <= r2 && d2 < best_d2) {
            best = i;
            best_d2 = d2;
        }
    }

    if (best == cs.size()) {
        cs.push_back(cluster{ex, ey, 1, e.t, state.next_id++});
        return cs.size() - 1;
    }
    auto& c = cs[best];
    ++c.count;
    const double n = static_cast<double>(c.count);
    c.cx += (ex - c.cx) / n;
    c.cy += (ey - c.cy) / n;
    c.last_t = e.t;
    return best;
}

clustering_consumer::clustering_consumer(double radius_px, time_us ttl_us)
{
    if (!(radius_px > 0.0))
        throw config_error("consumer.radius_px", "must be > 0");
    if (ttl_us <= 0)
        throw config_error("consumer.ttl_us", "must be > 0");
    state_.radius = radius_px;
    state_.ttl = ttl_us;
}

processing_feedback clustering_consumer::process(const event_package& package)
{
    const auto start = steady::now();
    for (const auto& e : package.events)
        assign_event(state_, e);
    processed_ += package.size();
    return processing_feedback{package.seq, package.size(), package.span(), elapsed_us(start)};
}

} // namespace asap
