#pragma once

#include <string>

namespace mdslab {

/// Real in "%.17g" form: '.' separator, no grouping, lossless round trip.
std::string format_real(double x);

} // namespace mdslab
