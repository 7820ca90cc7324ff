#include "asap/adaptive_packager.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace asap {

namespace {

constexpr std::size_t max_in_flight = 4096;

// Relative size spread below which the slope is not refitted.
constexpr double spread_floor = 0.01;
// Ridge strength of a slope refit, relative to the squared mean size.
constexpr double slope_shrink = 0.05 * 0.05;

} // namespace

void packager_config::validate() const
{
    if (n_min < 1)
        throw config_error("packager.n_min", "must be >= 1");
    if (n_max < n_min)
        throw config_error("packager.n_max", "must be >= packager.n_min");
    if (timeout_us <= 0)
        throw config_error("packager.timeout_us", "must be > 0");
    if (!(kappa > 0.0 && kappa <= 1.0))
        throw config_error("packager.kappa", "must be in (0, 1]");
    if (!(model_smoothing > 0.0 && model_smoothing <= 1.0))
        throw config_error("packager.model_smoothing", "must be in (0, 1]");
    if (initial_size < n_min || initial_size > n_max)
        throw config_error("packager.initial_size", "must lie in [n_min, n_max]");
}

std::size_t predict_size(double rate, double overhead_s, double per_event_s, std::size_t n_min,
                         std::size_t n_max)
{
    if (!(rate > 0.0))
        throw config_error("rate_filtered", "must be > 0");
    const double interval = 1.0 / rate;
    if (interval <= per_event_s)
        return n_max;
    const double n = std::round(overhead_s / (interval - per_event_s));
    if (!(n < static_cast<double>(n_max)))
        return n_max;
    return std::clamp(static_cast<std::size_t>(n), n_min, n_max);
}

// cost_model -------------------------------------------------------------------

void cost_model::observe(std::size_t size, time_us processing_time)
{
    const double n = static_cast<double>(size);
    const double p = static_cast<double>(processing_time);
    if (samples_ == 0) {
        mean_n_ = n;
        mean_p_ = p;
        mean_nn_ = n * n;
        mean_np_ = n * p;
    } else {
        const double a = alpha_;
        mean_n_ += a * (n - mean_n_);
        mean_p_ += a * (p - mean_p_);
        mean_nn_ += a * (n * n - mean_nn_);
        mean_np_ += a * (n * p - mean_np_);
    }
    ++samples_;

    const double var = mean_nn_ - mean_n_ * mean_n_;
    const double floor = std::max(0.25, spread_floor * spread_floor * mean_n_ * mean_n_);
    if (var > floor) {
        const double cov = mean_np_ - mean_n_ * mean_p_;
        const double ridge = slope_shrink * mean_n_ * mean_n_;
        const double prior = slope_identified_ ? per_event_us_ : 0.0;
        per_event_us_ = std::max(0.0, (cov + ridge * prior) / (var + ridge));
        slope_identified_ = true;
    }
    overhead_us_ = std::max(0.0, mean_p_ - per_event_us_ * mean_n_);
}

// adaptive_packager ------------------------------------------------------------

adaptive_packager::adaptive_packager(packager_config config)
    : config_(config), target_(config.initial_size), model_(config.model_smoothing)
{
    config_.validate();
}

std::size_t adaptive_packager::clamp_size(double n) const noexcept
{
    if (!(n >= static_cast<double>(config_.n_min)))
        return config_.n_min;
    if (!(n < static_cast<double>(config_.n_max)))
        return config_.n_max;
    return std::clamp(static_cast<std::size_t>(std::llround(n)), config_.n_min, config_.n_max);
}

emission adaptive_packager::cut(std::size_t n, time_us now, bool by_timeout)
{
    emission out;
    out.cut_us = now;
    out.by_timeout = by_timeout;
    out.target_size = target_;
    out.max_wait_us = now - buffer_.front().enter;
    out.package.seq = next_seq_++;
    out.package.events.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        out.package.events.push_back(buffer_.front().ev);
        buffer_.pop_front();
    }

    const auto& evs = out.package.events;
    in_flight rec{out.package.seq, evs.size(), 0};
    if (last_cut_t_) {
        rec.covered = evs.back().t - *last_cut_t_;
    } else {
        rec.covered = evs.back().t - evs.front().t;
        rec.size -= 1;
    }
    last_cut_t_ = evs.back().t;
    in_flight_.push_back(rec);
    if (in_flight_.size() > max_in_flight)
        in_flight_.pop_front();
    return out;
}

std::optional<emission> adaptive_packager::push_event(const event& e, time_us now)
{
    if (e.t < newest_t_)
        throw ordering_error("packager: timestamp " + std::to_string(e.t) + " precedes " +
                             std::to_string(newest_t_));
    newest_t_ = e.t;
    buffer_.push_back(slot{e, now});
    if (buffer_.size() >= target_)
        return cut(target_, now, false);
    return std::nullopt;
}

std::vector<emission> adaptive_packager::push_events(std::span<const event> events, time_us now)
{
    // Validate first so a bad batch leaves the buffer untouched.
    time_us prev = newest_t_;
    for (const auto& e : events) {
        if (e.t < prev)
            throw ordering_error("packager: timestamp " + std::to_string(e.t) + " precedes " +
                                 std::to_string(prev));
        prev = e.t;
    }
    std::vector<emission> out;
    for (const auto& e : events) {
        if (auto pkg = push_event(e, now))
            out.push_back(std::move(*pkg));
    }
    return out;
}

std::vector<emission> adaptive_packager::take_full(time_us now)
{
    std::vector<emission> out;
    while (buffer_.size() >= target_)
        out.push_back(cut(target_, now, false));
    return out;
}

std::optional<emission> adaptive_packager::check_timeout(time_us now)
{
    if (buffer_.empty() || now - buffer_.front().enter < config_.timeout_us)
        return std::nullopt;
    return cut(buffer_.size(), now, true);
}

std::optional<time_us> adaptive_packager::deadline() const noexcept
{
    if (buffer_.empty())
        return std::nullopt;
    return buffer_.front().enter + config_.timeout_us;
}

double adaptive_packager::arrival_rate() const noexcept
{
    if (mean_covered_ <= 0.0)
        return 0.0;
    return mean_count_ * 1e6 / mean_covered_;
}

void adaptive_packager::update_target_size(const processing_feedback& fb)
{
    if (fb.size < 1)
        return;
    if (last_feedback_seq_ && fb.package_seq <= *last_feedback_seq_)
        return;
    last_feedback_seq_ = fb.package_seq;

    model_.observe(fb.size, fb.processing_time);

    while (!in_flight_.empty() && in_flight_.front().seq < fb.package_seq)
        in_flight_.pop_front();
    if (!in_flight_.empty() && in_flight_.front().seq == fb.package_seq) {
        const auto rec = in_flight_.front();
        in_flight_.pop_front();
        const double covered = static_cast<double>(rec.covered);
        const double count = static_cast<double>(rec.size);
        if (mean_covered_ == 0.0 && mean_count_ == 0.0) {
            mean_covered_ = covered;
            mean_count_ = count;
        } else {
            const double a = config_.model_smoothing;
            mean_covered_ += a * (covered - mean_covered_);
            mean_count_ += a * (count - mean_count_);
        }
    }

    if (fb.processing_time == fb.span)
        return;

    const double rate = arrival_rate();
    if (model_.samples() >= config_.model_min_samples && model_.slope_identified() && rate > 0.0) {
        target_ = predict_size(rate, model_.overhead_s(), model_.per_event_s(), config_.n_min,
                               config_.n_max);
        return;
    }
    // Zero span leaves the ratio undefined; zero processing time would
    // send it to infinity.
    if (fb.span > 0 && fb.processing_time > 0) {
        const double ratio = static_cast<double>(fb.span) / static_cast<double>(fb.processing_time);
        target_ = clamp_size(static_cast<double>(target_) * std::pow(ratio, config_.kappa));
    }
}

} // namespace asap
