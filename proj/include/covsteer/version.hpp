#pragma once

namespace covsteer {

inline constexpr const char* kToolName = "covsteer";
inline constexpr const char* kToolVersion = "0.1.0";

}  // namespace covsteer
