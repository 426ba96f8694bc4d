#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace liqguard {

using Timestamp = std::int64_t;  // unix seconds

constexpr double kSecondsPerDay  = 86400.0;
constexpr double kSecondsPerYear = 365.0 * 86400.0;

// The five user-visible protocol events. Order is canonical: it fixes the
// feature-vector layout and every per-event report column.
enum class EventType { deposit, borrow, repay, withdraw, liquidation };

inline constexpr std::array<EventType, 5> kEventTypes = {
    EventType::deposit, EventType::borrow, EventType::repay,
    EventType::withdraw, EventType::liquidation,
};

std::string_view to_string(EventType e);
std::optional<EventType> event_type_from(std::string_view name);

}  // namespace liqguard
