#pragma once

namespace dyapack {

inline constexpr char version_string[] = "0.1.0";

}  // namespace dyapack
