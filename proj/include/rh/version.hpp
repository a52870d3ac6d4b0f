#pragma once

namespace rh {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace rh
