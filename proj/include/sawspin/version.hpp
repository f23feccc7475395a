#pragma once

namespace sawspin {
inline constexpr const char* version = "0.1.0";
}
