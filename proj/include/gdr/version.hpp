#pragma once

namespace gdr {

inline constexpr const char* kEngineVersion = "0.1.0";

}  // namespace gdr
