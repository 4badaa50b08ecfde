#include "gencodec/bd.hpp"

#include <algorithm>
#include <cmath>

#include "gencodec/errors.hpp"

namespace gencodec {

void RdCurve::sort_points() {
    std::sort(points.begin(), points.end(), [](const RdPoint& a, const RdPoint& b) { return a.bpp < b.bpp; });
}

void RdCurve::validate() const {
    if (points.size() < 4)
        throw InvalidArgument("rd curve '" + label + "' needs >= 4 points for BD computation");
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (points[i].bpp <= 0.0) throw InvalidArgument("rd curve '" + label + "' has bpp <= 0");
        if (i > 0 && points[i].bpp <= points[i - 1].bpp)
            throw InvalidArgument("rd curve '" + label + "' bpp not strictly increasing");
    }
}

std::vector<double> polyfit(const std::vector<double>& x, const std::vector<double>& y, int degree) {
    const int n = degree + 1;
    const std::size_t m = x.size();
    if (y.size() != m || static_cast<int>(m) < n)
        throw InvalidArgument("polyfit: not enough samples for the requested degree");

    // Normal equations with partial pivoting; tiny systems only.
    std::vector<double> ata(static_cast<std::size_t>(n) * n, 0.0);
    std::vector<double> atb(static_cast<std::size_t>(n), 0.0);
    for (std::size_t s = 0; s < m; ++s) {
        double xi = 1.0;
        std::vector<double> pows(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            pows[static_cast<std::size_t>(i)] = xi;
            xi *= x[s];
        }
        for (int i = 0; i < n; ++i) {
            atb[static_cast<std::size_t>(i)] += pows[static_cast<std::size_t>(i)] * y[s];
            for (int j = 0; j < n; ++j)
                ata[static_cast<std::size_t>(i) * n + j] += pows[static_cast<std::size_t>(i)] * pows[static_cast<std::size_t>(j)];
        }
    }
    for (int col = 0; col < n; ++col) {
        int pivot = col;
        for (int r = col + 1; r < n; ++r)
            if (std::fabs(ata[static_cast<std::size_t>(r) * n + col]) >
                std::fabs(ata[static_cast<std::size_t>(pivot) * n + col]))
                pivot = r;
        if (pivot != col) {
            for (int j = 0; j < n; ++j)
                std::swap(ata[static_cast<std::size_t>(col) * n + j], ata[static_cast<std::size_t>(pivot) * n + j]);
            std::swap(atb[static_cast<std::size_t>(col)], atb[static_cast<std::size_t>(pivot)]);
        }
        const double d = ata[static_cast<std::size_t>(col) * n + col];
        if (std::fabs(d) < 1e-14) throw InvalidArgument("polyfit: singular system");
        for (int r = col + 1; r < n; ++r) {
            const double f = ata[static_cast<std::size_t>(r) * n + col] / d;
            for (int j = col; j < n; ++j)
                ata[static_cast<std::size_t>(r) * n + j] -= f * ata[static_cast<std::size_t>(col) * n + j];
            atb[static_cast<std::size_t>(r)] -= f * atb[static_cast<std::size_t>(col)];
        }
    }
    std::vector<double> coeffs(static_cast<std::size_t>(n), 0.0);
    for (int r = n - 1; r >= 0; --r) {
        double s = atb[static_cast<std::size_t>(r)];
        for (int j = r + 1; j < n; ++j) s -= ata[static_cast<std::size_t>(r) * n + j] * coeffs[static_cast<std::size_t>(j)];
        coeffs[static_cast<std::size_t>(r)] = s / ata[static_cast<std::size_t>(r) * n + r];
    }
    return coeffs;
}

double polyval(const std::vector<double>& coeffs, double x) {
    double v = 0.0;
    for (std::size_t i = coeffs.size(); i-- > 0;) v = v * x + coeffs[i];
    return v;
}

double polyintegral(const std::vector<double>& coeffs, double a, double b) {
    double va = 0.0, vb = 0.0;
    for (std::size_t i = 0; i < coeffs.size(); ++i) {
        va += coeffs[i] * std::pow(a, static_cast<double>(i) + 1) / (static_cast<double>(i) + 1);
        vb += coeffs[i] * std::pow(b, static_cast<double>(i) + 1) / (static_cast<double>(i) + 1);
    }
    return vb - va;
}

namespace {

void check_monotone(const RdCurve& c, std::vector<std::string>& warnings) {
    bool mono_inc = true, mono_dec = true;
    for (std::size_t i = 1; i < c.points.size(); ++i) {
        if (c.points[i].distortion > c.points[i - 1].distortion) mono_dec = false;
        if (c.points[i].distortion < c.points[i - 1].distortion) mono_inc = false;
    }
    if (!mono_inc && !mono_dec)
        warnings.push_back("curve '" + c.label + "' is not monotone in distortion; fit proceeds");
}

} // namespace

BdResult bd_metrics(const RdCurve& ref, const RdCurve& test) {
    ref.validate();
    test.validate();
    BdResult out;
    check_monotone(ref, out.warnings);
    check_monotone(test, out.warnings);

    std::vector<double> ref_d, ref_lr, test_d, test_lr;
    for (const RdPoint& p : ref.points) {
        ref_d.push_back(p.distortion);
        ref_lr.push_back(std::log(p.bpp));
    }
    for (const RdPoint& p : test.points) {
        test_d.push_back(p.distortion);
        test_lr.push_back(std::log(p.bpp));
    }

    // ---- BD-rate: log rate as a function of distortion
    {
        const double lo = std::max(*std::min_element(ref_d.begin(), ref_d.end()),
                                   *std::min_element(test_d.begin(), test_d.end()));
        const double hi = std::min(*std::max_element(ref_d.begin(), ref_d.end()),
                                   *std::max_element(test_d.begin(), test_d.end()));
        if (!(hi > lo)) throw InvalidArgument("bd_metrics: distortion intervals do not overlap");
        const std::vector<double> fr = polyfit(ref_d, ref_lr, 3);
        const std::vector<double> ft = polyfit(test_d, test_lr, 3);
        const double avg = (polyintegral(ft, lo, hi) - polyintegral(fr, lo, hi)) / (hi - lo);
        out.bd_rate = (std::exp(avg) - 1.0) * 100.0;
    }

    // ---- BD-distortion: distortion as a function of log rate, normalized by
    // the reference curve's mean distortion over the overlap
    {
        const double lo = std::max(*std::min_element(ref_lr.begin(), ref_lr.end()),
                                   *std::min_element(test_lr.begin(), test_lr.end()));
        const double hi = std::min(*std::max_element(ref_lr.begin(), ref_lr.end()),
                                   *std::max_element(test_lr.begin(), test_lr.end()));
        if (!(hi > lo)) throw InvalidArgument("bd_metrics: log-rate intervals do not overlap");
        const std::vector<double> fr = polyfit(ref_lr, ref_d, 3);
        const std::vector<double> ft = polyfit(test_lr, test_d, 3);
        const double gap = (polyintegral(ft, lo, hi) - polyintegral(fr, lo, hi)) / (hi - lo);
        const double ref_mean = polyintegral(fr, lo, hi) / (hi - lo);
        if (std::fabs(ref_mean) < 1e-12)
            throw InvalidArgument("bd_metrics: reference distortion mean is zero");
        out.bd_distortion = gap / ref_mean * 100.0;
    }
    return out;
}

} // namespace gencodec
