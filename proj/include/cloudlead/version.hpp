#pragma once

namespace cloudlead {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace cloudlead
