#pragma once

namespace qst {

inline constexpr const char* kVersion = "0.1.0";

}
