#include "gencodec/plot.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "gencodec/errors.hpp"

namespace gencodec {

namespace {

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

struct Extent {
    double x_lo, x_hi, y_lo, y_hi;
};

Extent extent_of(const std::vector<RdCurve>& curves) {
    Extent e{1e300, -1e300, 1e300, -1e300};
    for (const RdCurve& c : curves)
        for (const RdPoint& p : c.points) {
            e.x_lo = std::min(e.x_lo, std::log10(p.bpp));
            e.x_hi = std::max(e.x_hi, std::log10(p.bpp));
            e.y_lo = std::min(e.y_lo, p.distortion);
            e.y_hi = std::max(e.y_hi, p.distortion);
        }
    const double xpad = std::max(0.05, (e.x_hi - e.x_lo) * 0.06);
    const double ypad = std::max(1e-6, (e.y_hi - e.y_lo) * 0.08);
    e.x_lo -= xpad;
    e.x_hi += xpad;
    e.y_lo -= ypad;
    e.y_hi += ypad;
    return e;
}

} // namespace

void write_rd_plot_svg(const std::string& path, const std::vector<RdCurve>& curves,
                       const std::string& title) {
    if (curves.empty()) throw InvalidArgument("write_rd_plot_svg: no curves");
    const int W = 640, H = 440, ml = 70, mr = 20, mt = 40, mb = 50;
    const Extent e = extent_of(curves);
    auto px = [&](double bpp) {
        return ml + (std::log10(bpp) - e.x_lo) / (e.x_hi - e.x_lo) * (W - ml - mr);
    };
    auto py = [&](double v) { return H - mb - (v - e.y_lo) / (e.y_hi - e.y_lo) * (H - mt - mb); };

    std::ostringstream svg;
    svg << "<svg xmlns='http://www.w3.org/2000/svg' width='" << W << "' height='" << H << "'>\n";
    svg << "<rect width='100%' height='100%' fill='white'/>\n";
    svg << "<text x='" << W / 2 << "' y='22' text-anchor='middle' font-size='15'>" << title
        << "</text>\n";

    // axes + grid
    svg << "<line x1='" << ml << "' y1='" << H - mb << "' x2='" << W - mr << "' y2='" << H - mb
        << "' stroke='black'/>\n";
    svg << "<line x1='" << ml << "' y1='" << mt << "' x2='" << ml << "' y2='" << H - mb
        << "' stroke='black'/>\n";
    for (int i = 0; i <= 5; ++i) {
        const double lx = e.x_lo + (e.x_hi - e.x_lo) * i / 5.0;
        const double x = ml + (lx - e.x_lo) / (e.x_hi - e.x_lo) * (W - ml - mr);
        std::ostringstream lab;
        lab.precision(3);
        lab << std::pow(10.0, lx);
        svg << "<line x1='" << x << "' y1='" << mt << "' x2='" << x << "' y2='" << H - mb
            << "' stroke='#dddddd'/>\n";
        svg << "<text x='" << x << "' y='" << H - mb + 18 << "' text-anchor='middle' font-size='11'>"
            << lab.str() << "</text>\n";
        const double vy = e.y_lo + (e.y_hi - e.y_lo) * i / 5.0;
        const double y = py(vy);
        std::ostringstream ylab;
        ylab.precision(3);
        ylab << vy;
        svg << "<line x1='" << ml << "' y1='" << y << "' x2='" << W - mr << "' y2='" << y
            << "' stroke='#dddddd'/>\n";
        svg << "<text x='" << ml - 8 << "' y='" << y + 4 << "' text-anchor='end' font-size='11'>"
            << ylab.str() << "</text>\n";
    }
    svg << "<text x='" << (ml + W - mr) / 2 << "' y='" << H - 12
        << "' text-anchor='middle' font-size='12'>bpp</text>\n";
    svg << "<text x='16' y='" << (mt + H - mb) / 2 << "' font-size='12' transform='rotate(-90 16 "
        << (mt + H - mb) / 2 << ")'>" << curves.front().metric << "</text>\n";

    for (std::size_t ci = 0; ci < curves.size(); ++ci) {
        const char* color = kPalette[ci % 6];
        std::ostringstream pts;
        for (const RdPoint& p : curves[ci].points) pts << px(p.bpp) << "," << py(p.distortion) << " ";
        svg << "<polyline points='" << pts.str() << "' fill='none' stroke='" << color
            << "' stroke-width='1.8'/>\n";
        for (const RdPoint& p : curves[ci].points)
            svg << "<circle cx='" << px(p.bpp) << "' cy='" << py(p.distortion) << "' r='3' fill='"
                << color << "'/>\n";
        svg << "<rect x='" << W - mr - 170 << "' y='" << mt + 8 + 18 * static_cast<int>(ci)
            << "' width='12' height='12' fill='" << color << "'/>\n";
        svg << "<text x='" << W - mr - 152 << "' y='" << mt + 18 + 18 * static_cast<int>(ci)
            << "' font-size='12'>" << curves[ci].label << "</text>\n";
    }
    svg << "</svg>\n";

    std::ofstream out(path, std::ios::trunc);
    if (!out) throw InvalidArgument("cannot write " + path);
    out << svg.str();
}

} // namespace gencodec
