#pragma once

namespace spincat {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr const char* kToolName = "spincat";

}  // namespace spincat
