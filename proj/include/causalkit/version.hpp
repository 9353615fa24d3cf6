#pragma once

namespace causalkit {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace causalkit
