#pragma once

namespace mplan {

inline constexpr const char* kToolVersion = "0.1.0";

}  // namespace mplan
