#include "asap/pipeline.hpp"

#include "asap/overflow_guard.hpp"
#include "pipeline_detail.hpp"

#include <algorithm>
#include <charconv>
#include <deque>
#include <limits>
#include <ostream>

namespace asap {

void pipeline_config::validate() const
{
    if (geometry.width < 1)
        throw config_error("sensor.width", "must be >= 1");
    if (geometry.height < 1)
        throw config_error("sensor.height", "must be >= 1");
    gamma.validate();
    if (fixed_gamma && !(*fixed_gamma > 0.0 && *fixed_gamma <= 1.0))
        throw config_error("gamma.fixed", "must be in (0, 1]");
    packager.validate();
    consumer.synthetic.validate();
    if (!(consumer.radius_px > 0.0))
        throw config_error("consumer.radius_px", "must be > 0");
    if (consumer.ttl_us <= 0)
        throw config_error("consumer.ttl_us", "must be > 0");
    if (input_buffer_capacity < 1)
        throw config_error("pipeline.input_buffer_capacity", "must be >= 1");
}

std::unique_ptr<consumer> make_consumer(const pipeline_config& config)
{
    if (config.consumer.kind == consumer_kind::clustering)
        return std::make_unique<clustering_consumer>(config.consumer.radius_px,
                                                     config.consumer.ttl_us);
    return std::make_unique<synthetic_consumer>(config.consumer.synthetic, config.mode,
                                                config.seed);
}

namespace detail {

package_metrics stamp(const emission& em, const gamma_state& gs, std::uint64_t filter_drops,
                      std::uint64_t overflow_drops)
{
    package_metrics m;
    m.seq = em.package.seq;
    m.size = em.package.size();
    m.span_us = em.package.span();
    m.gamma_at_emit = gs.gamma;
    m.rate_raw = gs.rate_raw;
    m.rate_filtered = gs.rate_filtered;
    m.dropped_by_filter = filter_drops;
    m.dropped_by_overflow = overflow_drops;
    m.emit_clock_us = em.cut_us;
    m.max_wait_us = em.max_wait_us;
    m.by_timeout = em.by_timeout;
    m.target_size = em.target_size;
    return m;
}

void finish(package_metrics& m, const processing_feedback& fb)
{
    m.processing_time_us = fb.processing_time;
    m.lag_us = m.processing_time_us - m.span_us;
}

} // namespace detail

namespace {

constexpr time_us never = std::numeric_limits<time_us>::max();

/// Single-threaded stage stepper over a logical microsecond clock.
class virtual_runner
{
public:
    virtual_runner(const pipeline_config& cfg, stream_source& source, consumer& algorithm)
        : source_(source),
          algorithm_(algorithm),
          filter_(cfg.gamma, cfg.seed),
          packager_(cfg.packager),
          input_(cfg.input_buffer_capacity)
    {
        if (cfg.fixed_gamma)
            filter_.freeze(*cfg.fixed_gamma);
    }

    run_result run()
    {
        auto next = source_.next();
        for (;;) {
            const time_us t_arrival = next ? next->t : never;
            const time_us t_done = busy_ ? busy_until_ : never;
            const time_us t_timeout = packager_.deadline().value_or(never);
            if (t_arrival == never && t_done == never && t_timeout == never)
                break;

            // Ties: completions, then timeouts, then arrivals.
            if (t_done <= t_arrival && t_done <= t_timeout) {
                now_ = std::max(now_, t_done);
                complete();
            } else if (t_timeout <= t_arrival) {
                now_ = std::max(now_, t_timeout);
                if (auto em = packager_.check_timeout(now_))
                    enqueue(std::move(*em));
            } else {
                now_ = std::max(now_, t_arrival);
                arrive(*next);
                next = source_.next();
            }
            pump();
        }

        result_.filter_dropped = filter_.dropped();
        result_.overflow_dropped = input_.dropped();
        result_.trailing_filter_dropped = filter_.dropped() - filter_mark_;
        result_.trailing_overflow_dropped = input_.dropped() - overflow_mark_;
        result_.residual = packager_.buffered() + input_.size();
        for (const auto& p : pending_)
            result_.residual += p.first.package.size();
        result_.final_gamma = filter_.state().gamma;
        return std::move(result_);
    }

private:
    void arrive(const event& e)
    {
        ++result_.source_events;
        if (filter_.offer(e))
            input_.push(e);
        result_.max_rate_raw = std::max(result_.max_rate_raw, filter_.state().rate_raw);
    }

    void enqueue(emission em)
    {
        auto m = detail::stamp(em, filter_.state(), filter_.dropped() - filter_mark_,
                               input_.dropped() - overflow_mark_);
        filter_mark_ = filter_.dropped();
        overflow_mark_ = input_.dropped();
        pending_.emplace_back(std::move(em), m);
    }

    void complete()
    {
        busy_ = false;
        detail::finish(running_, feedback_);
        result_.packages.push_back(running_);
        packager_.update_target_size(feedback_);
        for (auto& em : packager_.take_full(now_))
            enqueue(std::move(em));
    }

    void dispatch()
    {
        auto [em, m] = std::move(pending_.front());
        pending_.pop_front();
        feedback_ = algorithm_.process(em.package);
        m.dispatch_clock_us = now_;
        running_ = m;
        busy_ = true;
        busy_until_ = now_ + feedback_.processing_time;
    }

    void pump()
    {
        for (;;) {
            if (!busy_ && !pending_.empty()) {
                dispatch();
                continue;
            }
            if (pending_.empty() && !input_.empty()) {
                if (auto em = packager_.push_event(input_.pop(), now_))
                    enqueue(std::move(*em));
                continue;
            }
            return;
        }
    }

    stream_source& source_;
    consumer& algorithm_;
    gamma_filter filter_;
    adaptive_packager packager_;
    drop_oldest_buffer input_;
    std::deque<std::pair<emission, package_metrics>> pending_;

    time_us now_ = 0;
    bool busy_ = false;
    time_us busy_until_ = 0;
    processing_feedback feedback_;
    package_metrics running_;

    std::uint64_t filter_mark_ = 0;
    std::uint64_t overflow_mark_ = 0;
    run_result result_;
};

} // namespace

run_result run(const pipeline_config& config, stream_source& source, consumer& algorithm)
{
    config.validate();
    if (config.mode == timing_mode::realtime)
        return detail::run_realtime(config, source, algorithm);
    return virtual_runner(config, source, algorithm).run();
}

run_result run(const pipeline_config& config, stream_source& source)
{
    config.validate();
    auto algorithm = make_consumer(config);
    return run(config, source, *algorithm);
}

// CSV ----------------------------------------------------------------------------

std::string format_double(double v)
{
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

std::string format_metrics_row(const package_metrics& m)
{
    std::string s;
    s.reserve(96);
    s += std::to_string(m.seq);
    s += ',';
    s += std::to_string(m.size);
    s += ',';
    s += std::to_string(m.span_us);
    s += ',';
    s += std::to_string(m.processing_time_us);
    s += ',';
    s += std::to_string(m.lag_us);
    s += ',';
    s += format_double(m.gamma_at_emit);
    s += ',';
    s += format_double(m.rate_raw);
    s += ',';
    s += format_double(m.rate_filtered);
    s += ',';
    s += std::to_string(m.dropped_by_filter);
    s += ',';
    s += std::to_string(m.dropped_by_overflow);
    s += ',';
    s += std::to_string(m.emit_clock_us);
    return s;
}

void write_metrics_csv(std::ostream& out, const std::vector<package_metrics>& rows)
{
    out << metrics_header << '\n';
    for (const auto& m : rows)
        out << format_metrics_row(m) << '\n';
}

} // namespace asap
