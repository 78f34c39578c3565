#pragma once

namespace bard {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace bard
