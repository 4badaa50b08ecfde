#pragma once

#include <string>
#include <vector>

#include "gencodec/bd.hpp"

namespace gencodec {

// Static SVG rate-distortion plot: log-scaled bpp on x, metric on y, one
// polyline with markers per curve, legend in the top corner.
void write_rd_plot_svg(const std::string& path, const std::vector<RdCurve>& curves,
                       const std::string& title = "rate-distortion");

} // namespace gencodec
