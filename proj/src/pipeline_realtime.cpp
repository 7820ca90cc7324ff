#include "asap/overflow_guard.hpp"
#include "pipeline_detail.hpp"

#include <algorithm>
#include <chrono>
#include <condition_variable>
#include <deque>
#include <exception>
#include <mutex>
#include <optional>
#include <thread>

namespace asap::detail {

namespace {

using steady = std::chrono::steady_clock;

template <typename T>
class bounded_queue
{
public:
    explicit bounded_queue(std::size_t capacity) : capacity_(capacity) {}

    /// Blocks while full. Returns false if the queue was closed.
    bool push(T item)
    {
        std::unique_lock lk(mu_);
        not_full_.wait(lk, [&] { return closed_ || items_.size() < capacity_; });
        if (closed_)
            return false;
        items_.push_back(std::move(item));
        not_empty_.notify_one();
        return true;
    }

    /// Never blocks; the oldest item gives way when full.
    void push_drop_oldest(T item)
    {
        std::lock_guard lk(mu_);
        if (items_.size() == capacity_)
            items_.pop_front();
        items_.push_back(std::move(item));
        not_empty_.notify_one();
    }

    /// Blocks until an item arrives; nullopt once closed and drained.
    std::optional<T> pop()
    {
        std::unique_lock lk(mu_);
        not_empty_.wait(lk, [&] { return closed_ || !items_.empty(); });
        return take();
    }

    std::optional<T> try_pop()
    {
        std::lock_guard lk(mu_);
        return take();
    }

    void close()
    {
        std::lock_guard lk(mu_);
        closed_ = true;
        not_empty_.notify_all();
        not_full_.notify_all();
    }

private:
    std::optional<T> take()
    {
        if (items_.empty())
            return std::nullopt;
        T item = std::move(items_.front());
        items_.pop_front();
        not_full_.notify_one();
        return item;
    }

    std::size_t capacity_;
    std::mutex mu_;
    std::condition_variable not_empty_;
    std::condition_variable not_full_;
    std::deque<T> items_;
    bool closed_ = false;
};

/// Filtered events plus the filter statistics published with them.
struct input_channel
{
    explicit input_channel(std::size_t capacity) : buffer(capacity) {}

    std::mutex mu;
    std::condition_variable ready;
    drop_oldest_buffer buffer;
    gamma_state stats;
    std::uint64_t filter_dropped = 0;
    double max_rate_raw = 0.0;
    bool done = false;
};

struct work_item
{
    event_package package;
    package_metrics metrics;
};

constexpr std::size_t package_queue_capacity = 2;
constexpr std::size_t feedback_capacity = 8;
constexpr std::size_t ingest_batch = 512;
constexpr auto idle_wake = std::chrono::milliseconds(1);

} // namespace

run_result run_realtime(const pipeline_config& config, stream_source& source, consumer& algorithm)
{
    const auto t0 = steady::now();
    auto clock_us = [t0] {
        return std::chrono::duration_cast<std::chrono::microseconds>(steady::now() - t0).count();
    };

    input_channel input(config.input_buffer_capacity);
    bounded_queue<work_item> packages(package_queue_capacity);
    bounded_queue<processing_feedback> feedback(feedback_capacity);

    std::mutex error_mu;
    std::exception_ptr error;
    auto fail = [&](std::exception_ptr e) {
        {
            std::lock_guard lk(error_mu);
            if (!error)
                error = e;
        }
        {
            std::lock_guard lk(input.mu);
            input.done = true;
        }
        input.ready.notify_all();
        packages.close();
        feedback.close();
    };

    std::uint64_t source_events = 0;
    double final_gamma = 1.0;
    std::thread ingest([&] {
        try {
            gamma_filter filter(config.gamma, config.seed);
            if (config.fixed_gamma)
                filter.freeze(*config.fixed_gamma);
            std::vector<event> batch;
            batch.reserve(ingest_batch);
            auto publish = [&] {
                {
                    std::lock_guard lk(input.mu);
                    input.buffer.push(batch);
                    input.stats = filter.state();
                    input.filter_dropped = filter.dropped();
                    input.max_rate_raw = std::max(input.max_rate_raw, filter.state().rate_raw);
                }
                input.ready.notify_one();
                batch.clear();
            };
            while (auto e = source.next()) {
                ++source_events;
                const time_us ahead = e->t - clock_us();
                if (ahead > 1000) {
                    publish();
                    std::this_thread::sleep_for(std::chrono::microseconds(ahead));
                }
                if (filter.offer(*e))
                    batch.push_back(*e);
                if (batch.size() >= ingest_batch)
                    publish();
            }
            publish();
            final_gamma = filter.state().gamma;
            {
                std::lock_guard lk(input.mu);
                input.done = true;
            }
            input.ready.notify_all();
        } catch (...) {
            fail(std::current_exception());
        }
    });

    std::size_t packager_residual = 0;
    std::uint64_t trailing_filter = 0;
    std::uint64_t trailing_overflow = 0;
    std::thread packer([&] {
        try {
            adaptive_packager packager(config.packager);
            std::uint64_t filter_mark = 0;
            std::uint64_t overflow_mark = 0;
            gamma_state stats;
            std::uint64_t filter_dropped = 0;
            std::uint64_t overflow_dropped = 0;

            auto send = [&](emission em) {
                auto m = stamp(em, stats, filter_dropped - filter_mark, overflow_dropped - overflow_mark);
                filter_mark = filter_dropped;
                overflow_mark = overflow_dropped;
                return packages.push(work_item{std::move(em.package), m});
            };

            std::vector<event> chunk;
            bool done = false;
            while (true) {
                {
                    std::unique_lock lk(input.mu);
                    auto wake = steady::now() + idle_wake;
                    if (auto d = packager.deadline())
                        wake = std::min(wake, t0 + std::chrono::microseconds(*d));
                    input.ready.wait_until(lk, wake, [&] { return !input.buffer.empty() || input.done; });
                    // Take only what completes the next package so backlog
                    // stays in the bounded input buffer.
                    const std::size_t want =
                        std::max<std::size_t>(1, packager.target_size() - std::min(packager.target_size(), packager.buffered()));
                    while (chunk.size() < want && !input.buffer.empty())
                        chunk.push_back(input.buffer.pop());
                    stats = input.stats;
                    filter_dropped = input.filter_dropped;
                    overflow_dropped = input.buffer.dropped();
                    done = input.done && input.buffer.empty();
                }

                const time_us now = clock_us();
                while (auto fb = feedback.try_pop()) {
                    packager.update_target_size(*fb);
                    for (auto& em : packager.take_full(now))
                        if (!send(std::move(em)))
                            return;
                }
                for (const auto& e : chunk)
                    if (auto em = packager.push_event(e, now))
                        if (!send(std::move(*em)))
                            return;
                chunk.clear();
                if (auto em = packager.check_timeout(clock_us()))
                    if (!send(std::move(*em)))
                        return;
                if (done && packager.buffered() == 0)
                    break;
            }
            packager_residual = packager.buffered();
            trailing_filter = filter_dropped - filter_mark;
            trailing_overflow = overflow_dropped - overflow_mark;
            packages.close();
        } catch (...) {
            fail(std::current_exception());
        }
    });

    std::vector<package_metrics> rows;
    std::thread worker([&] {
        try {
            while (auto item = packages.pop()) {
                item->metrics.dispatch_clock_us = clock_us();
                auto fb = algorithm.process(item->package);
                finish(item->metrics, fb);
                rows.push_back(item->metrics);
                feedback.push_drop_oldest(fb);
            }
        } catch (...) {
            fail(std::current_exception());
        }
    });

    ingest.join();
    packer.join();
    worker.join();
    if (error)
        std::rethrow_exception(error);

    run_result result;
    result.packages = std::move(rows);
    result.source_events = source_events;
    result.filter_dropped = input.filter_dropped;
    result.overflow_dropped = input.buffer.dropped();
    result.residual = packager_residual + input.buffer.size();
    result.trailing_filter_dropped = trailing_filter;
    result.trailing_overflow_dropped = trailing_overflow;
    result.final_gamma = final_gamma;
    result.max_rate_raw = input.max_rate_raw;
    return result;
}

} // namespace asap::detail
