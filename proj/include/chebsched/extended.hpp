#pragma once

// Extended-precision scalar: IEEE binary128 layout (113-bit significand),
// software-emulated and header-only. Slow, but the extended runs are small.

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <boost/multiprecision/eigen.hpp>

namespace chebsched {

using extended_real = boost::multiprecision::cpp_bin_float_quad;

}  // namespace chebsched
