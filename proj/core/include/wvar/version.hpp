#pragma once

namespace wvar {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace wvar
