#include "mdslab/format.hpp"

#include <cstdio>

namespace mdslab {

std::string format_real(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

} // namespace mdslab
