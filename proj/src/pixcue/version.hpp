#pragma once

namespace pixcue {

inline constexpr const char* kToolName = "pixcue";
inline constexpr const char* kToolVersion = "1.0.0";

}  // namespace pixcue
