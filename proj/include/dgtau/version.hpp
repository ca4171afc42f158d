#pragma once

namespace dgtau {
inline constexpr const char* kVersion = "0.3.1";
}
