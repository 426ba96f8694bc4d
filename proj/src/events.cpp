#include "liqguard/events.hpp"

namespace liqguard {

std::string_view to_string(EventType e) {
    switch (e) {
        case EventType::deposit:     return "deposit";
        case EventType::borrow:      return "borrow";
        case EventType::repay:       return "repay";
        case EventType::withdraw:    return "withdraw";
        case EventType::liquidation: return "liquidation";
    }
    return "?";
}

std::optional<EventType> event_type_from(std::string_view name) {
    for (EventType e : kEventTypes) {
        if (to_string(e) == name) return e;
    }
    return std::nullopt;
}

}  // namespace liqguard
