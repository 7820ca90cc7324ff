#pragma once

#include "asap/event.hpp"

#include <cstddef>
#include <deque>
#include <optional>
#include <span>
#include <vector>

namespace asap {

struct packager_config
{
    std::size_t n_min = 1;
    std::size_t n_max = 1'000'000;
    std::size_t initial_size = 1000;
    time_us timeout_us = 10'000;
    double kappa = 0.5;
    double model_smoothing = 0.2;
    /// Samples required before the affine model replaces the multiplicative law.
    std::size_t model_min_samples = 5;

    /// Throws config_error naming the offending `packager.*` key.
    void validate() const;
};

/// Consumer report for one package.
struct processing_feedback
{
    std::uint64_t package_seq = 0;
    std::size_t size = 0;
    time_us span = 0;
    time_us processing_time = 0;
};

/// A package leaving the packager, with the bookkeeping the pipeline records.
struct emission
{
    event_package package;
    time_us cut_us = 0;
    /// Longest time any of its events sat in the packager buffer.
    time_us max_wait_us = 0;
    bool by_timeout = false;
    std::size_t target_size = 0;
};

/// Size that makes o + c*N equal N/R, clamped to [n_min, n_max].
/// Seconds and events/s throughout. Saturates to n_max when c >= 1/R.
std::size_t predict_size(double rate, double overhead_s, double per_event_s,
                         std::size_t n_min, std::size_t n_max);

/// Exponentially-weighted least-squares fit of processing_time ~= o + c*size.
///
/// The slope is only refitted while the averaged sizes show a usable spread;
/// otherwise it is held and the intercept alone tracks the mean. Refits are
/// shrunk toward the previous slope so a thin spread cannot swing it.
class cost_model
{
public:
    explicit cost_model(double smoothing) : alpha_(smoothing) {}

    void observe(std::size_t size, time_us processing_time);

    std::size_t samples() const noexcept { return samples_; }
    /// True once the slope has been fitted from a non-degenerate size spread.
    bool slope_identified() const noexcept { return slope_identified_; }
    double overhead_s() const noexcept { return overhead_us_ * 1e-6; }
    double per_event_s() const noexcept { return per_event_us_ * 1e-6; }

private:
    double alpha_;
    std::size_t samples_ = 0;
    double mean_n_ = 0, mean_p_ = 0, mean_nn_ = 0, mean_np_ = 0;
    double overhead_us_ = 0, per_event_us_ = 0;
    bool slope_identified_ = false;
};

/// Accumulates events into packages whose target size follows consumer
/// feedback, flushing a partial package once its oldest event has waited
/// `timeout_us`.
///
/// Target law: the multiplicative step target * (span / proc)^kappa until the
/// cost model has enough samples, then predict_size() from the fitted model.
/// Feedback with proc == span leaves the target unchanged.
class adaptive_packager
{
public:
    explicit adaptive_packager(packager_config config);

    /// Appends events entering at `now`; emits every full package.
    /// Throws ordering_error if events go back in time.
    std::vector<emission> push_events(std::span<const event> events, time_us now);

    /// Single-event push without allocating when nothing is emitted.
    std::optional<emission> push_event(const event& e, time_us now);

    /// Emits packages while the buffer holds at least target_size events
    /// (needed after the target shrinks).
    std::vector<emission> take_full(time_us now);

    /// Flushes the whole buffer if its oldest event has waited >= timeout.
    std::optional<emission> check_timeout(time_us now);

    /// Buffer flush time, if any events are pending.
    std::optional<time_us> deadline() const noexcept;

    void update_target_size(const processing_feedback& fb);

    std::size_t target_size() const noexcept { return target_; }
    /// Arrival rate seen by the packager (events/s), 0 before any feedback.
    double arrival_rate() const noexcept;
    std::size_t buffered() const noexcept { return buffer_.size(); }
    const cost_model& model() const noexcept { return model_; }
    const packager_config& config() const noexcept { return config_; }

private:
    struct slot
    {
        event ev;
        time_us enter;
    };

    /// Event time covered by an emitted package, from the previous
    /// package's newest event to its own.
    struct in_flight
    {
        std::uint64_t seq;
        std::size_t size;
        time_us covered;
    };

    emission cut(std::size_t n, time_us now, bool by_timeout);
    std::size_t clamp_size(double n) const noexcept;

    packager_config config_;
    std::size_t target_;
    std::deque<slot> buffer_;
    std::deque<in_flight> in_flight_;
    std::uint64_t next_seq_ = 0;
    time_us newest_t_ = 0;
    std::optional<time_us> last_cut_t_;
    double mean_covered_ = 0, mean_count_ = 0;
    std::optional<std::uint64_t> last_feedback_seq_;
    cost_model model_;
};

} // namespace asap
