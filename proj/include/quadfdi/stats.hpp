#pragma once

#include <cstddef>
#include <utility>

namespace quadfdi {

inline constexpr double kZ95 = 1.959963984540054;
inline constexpr double kZ99 = 2.5758293035489004;

/// Wilson score interval for a binomial proportion.
std::pair<double, double> wilson_interval(std::size_t successes, std::size_t trials, double z);

}  // namespace quadfdi
