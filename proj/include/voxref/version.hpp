#pragma once

namespace voxref {
inline constexpr const char* kEngineName = "voxref";
inline constexpr const char* kEngineVersion = "0.1.0";
}  // namespace voxref
