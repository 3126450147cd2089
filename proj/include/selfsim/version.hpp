#pragma once

namespace selfsim {

inline constexpr const char* version = "1.0.0";

} // namespace selfsim
