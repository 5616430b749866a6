#pragma once

namespace finrank {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace finrank
