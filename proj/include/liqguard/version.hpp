#pragma once

namespace liqguard {

inline constexpr const char* kToolVersion = "0.1.0";

}  // namespace liqguard
