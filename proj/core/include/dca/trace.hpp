#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace dca {

/// Coprocessor activity as seen on a power trace.
enum class Event : char {
    Square = 'S',
    Multiply = 'M',
    PrecompMultiply = 'P',
};

/// Ordered coprocessor events of one signing run. Serialized as a compact
/// string over {S, M, P}.
class EventTrace {
public:
    EventTrace() = default;

    void push(Event e) { events_.push_back(e); }

    const std::vector<Event>& events() const noexcept { return events_; }
    std::size_t size() const noexcept { return events_.size(); }
    std::size_t count(Event e) const noexcept;

    std::string str() const;
    static EventTrace parse(std::string_view compact);

    friend bool operator==(const EventTrace&, const EventTrace&) = default;

private:
    std::vector<Event> events_;
};

}  // namespace dca
