#pragma once

#include <span>
#include <string>

#include "mdslab/empirics.hpp"

namespace mdslab {

/// Self-contained SVG: log Delta vs log n markers with the fitted line.
std::string render_rate_plot(std::span<const GridPoint> points, const RateFit &fit,
                             const std::string &title);

/// Writes the plot; returns an error message instead of throwing, empty on
/// success.
std::string try_write_rate_plot(const std::string &path, std::span<const GridPoint> points,
                                const RateFit &fit, const std::string &title) noexcept;

} // namespace mdslab
