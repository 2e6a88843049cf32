#pragma once

namespace bubbleid {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace bubbleid
