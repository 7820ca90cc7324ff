#include "asap/overflow_guard.hpp"

namespace asap {

drop_oldest_buffer::drop_oldest_buffer(std::size_t capacity) : capacity_(capacity)
{
    if (capacity < 1)
        throw config_error("pipeline.input_buffer_capacity", "must be >= 1");
}

std::size_t drop_oldest_buffer::push(const event& e)
{
    std::size_t dropped = 0;
    if (events_.size() == capacity_) {
        events_.pop_front();
        dropped = 1;
    }
    events_.push_back(e);
    dropped_ += dropped;
    return dropped;
}

std::size_t drop_oldest_buffer::push(std::span<const event> incoming)
{
    std::size_t dropped = 0;
    for (const auto& e : incoming)
        dropped += push(e);
    return dropped;
}

event drop_oldest_buffer::pop()
{
    event e = events_.front();
    events_.pop_front();
    return e;
}

void drop_oldest_buffer::drain_into(std::deque<event>& out)
{
    out.insert(out.end(), events_.begin(), events_.end());
    events_.clear();
}

} // namespace asap
