#include "dca/trace.hpp"

#include <algorithm>

#include "dca/bigint.hpp"

namespace dca {

std::size_t EventTrace::count(Event e) const noexcept {
    return static_cast<std::size_t>(std::count(events_.begin(), events_.end(), e));
}

std::string EventTrace::str() const {
    std::string out;
    out.reserve(events_.size());
    for (Event e : events_) out.push_back(static_cast<char>(e));
    return out;
}

EventTrace EventTrace::parse(std::string_view compact) {
    EventTrace trace;
    for (char c : compact) {
        switch (c) {
            case 'S': trace.push(Event::Square); break;
            case 'M': trace.push(Event::Multiply); break;
            case 'P': trace.push(Event::PrecompMultiply); break;
            default:
                throw PreconditionError(std::string("EventTrace::parse: unknown event tag '") + c + "'");
        }
    }
    return trace;
}

}  // namespace dca
