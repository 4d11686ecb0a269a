#pragma once

namespace epidhgnn {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace epidhgnn
