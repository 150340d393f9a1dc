#pragma once

namespace ibgp {

inline constexpr const char* kToolName = "ibgp";
inline constexpr const char* kToolVersion = "0.1.0";

}  // namespace ibgp
