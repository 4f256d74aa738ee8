#pragma once

namespace caud {

inline constexpr const char* kVersion = "0.1.0";

} // namespace caud
