#pragma once

#include "asap/event.hpp"

#include <cstddef>
#include <deque>
#include <span>

namespace asap {

/// Bounded FIFO in front of the packager. When full, the oldest events make
/// room for new ones, so pushing never blocks the source.
class drop_oldest_buffer
{
public:
    explicit drop_oldest_buffer(std::size_t capacity);

    /// Returns how many buffered events were dropped to admit `e`.
    std::size_t push(const event& e);
    std::size_t push(std::span<const event> incoming);

    event pop();
    bool empty() const noexcept { return events_.empty(); }
    std::size_t size() const noexcept { return events_.size(); }
    std::size_t capacity() const noexcept { return capacity_; }
    std::uint64_t dropped() const noexcept { return dropped_; }

    /// Moves every buffered event to the back of `out`.
    void drain_into(std::deque<event>& out);
    const std::deque<event>& contents() const noexcept { return events_; }

private:
    std::size_t capacity_;
    std::deque<event> events_;
    std::uint64_t dropped_ = 0;
};

} // namespace asap
