#pragma once

#include "asap/adaptive_packager.hpp"
#include "asap/event.hpp"
#include "asap/rng.hpp"

#include <vector>

namespace asap {

enum class timing_mode { virtual_time, realtime };

/// Event-by-event algorithm fed by the pipeline. process() handles the
/// package's events strictly in order and reports how long it took.
class consumer
{
public:
    virtual ~consumer() = default;

    virtual processing_feedback process(const event_package& package) = 0;
};

struct synthetic_cost_model
{
    double overhead_s = 1e-3;
    double per_event_s = 1e-7;
    double jitter_fraction = 0.0;

    void validate() const;
};

/// Consumer whose cost is (o + c*size) * (1 + u), u uniform in [-j, j].
/// In virtual time it only reports the duration; in real time it spins for it.
class synthetic_consumer final : public consumer
{
public:
    synthetic_consumer(synthetic_cost_model model, timing_mode mode, std::uint64_t seed);

    processing_feedback process(const event_package& package) override;

    /// Duration in microseconds for a package of `size` events (draws jitter).
    time_us cost(std::size_t size);

private:
    synthetic_cost_model model_;
    timing_mode mode_;
    rng rng_;
};

struct cluster
{
    double cx = 0.0;
    double cy = 0.0;
    std::uint64_t count = 0;
    time_us last_t = 0;
    std::uint64_t id = 0; ///< creation index
};

struct cluster_state
{
    std::vector<cluster> clusters; ///< kept in creation order
    double radius = 10.0;
    time_us ttl = 50'000;
    std::uint64_t next_id = 0;
};

/// Expires stale clusters, then absorbs `e` into the nearest centroid within
/// the radius (lowest creation index on ties) or starts a new cluster.
/// Returns the index of the absorbing cluster in `state.clusters`.
std::size_t assign_event(cluster_state& state, const event& e);

/// Running-mean clustering with TTL expiry; reports measured wall time.
class clustering_consumer final : public consumer
{
public:
    clustering_consumer(double radius_px, time_us ttl_us);

    processing_feedback process(const event_package& package) override;

    const cluster_state& state() const noexcept { return state_; }
    std::uint64_t processed() const noexcept { return processed_; }

private:
    cluster_state state_;
    std::uint64_t processed_ = 0;
};

} // namespace asap
