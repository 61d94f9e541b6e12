#pragma once

namespace kbm {
inline constexpr double kTwoPi = 6.283185307179586476925286766559;
}
