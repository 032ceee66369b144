#pragma once

namespace mtscluster {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace mtscluster
