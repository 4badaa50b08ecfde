#pragma once

#include <string>
#include <vector>

namespace gencodec {

struct RdPoint {
    double bpp = 0.0;
    double distortion = 0.0;
    int rate_level = 0;
};

struct RdCurve {
    std::string label;
    std::string metric;         // "msssim" | "lpips_proxy" | caller-defined
    bool lower_better = true;   // sign convention of the distortion axis
    std::vector<RdPoint> points; // sorted by bpp, strictly increasing

    void sort_points();
    void validate() const; // >= 4 points, bpp > 0 strictly increasing
};

struct BdResult {
    double bd_rate = 0.0;       // percent rate change at equal distortion
    double bd_distortion = 0.0; // percent distortion change at equal rate
    std::vector<std::string> warnings;
};

// Classic cubic-polynomial Bjontegaard deltas over the overlap interval.
// BD-rate fits log-rate as a function of distortion; BD-distortion fits
// distortion as a function of log-rate and normalizes the average gap by the
// reference curve's mean distortion.
BdResult bd_metrics(const RdCurve& ref, const RdCurve& test);

// Least-squares polynomial fit (degree 3 here) used by bd_metrics; exposed
// for direct testing.
std::vector<double> polyfit(const std::vector<double>& x, const std::vector<double>& y, int degree);
double polyval(const std::vector<double>& coeffs, double x);
double polyintegral(const std::vector<double>& coeffs, double a, double b);

} // namespace gencodec
