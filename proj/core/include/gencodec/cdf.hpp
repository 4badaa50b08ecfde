#pragma once

#include <cstdint>
#include <vector>

namespace gencodec {

// Quantized-CDF precision shared by table construction and the coder.
inline constexpr int kProbBits = 16;
inline constexpr std::uint32_t kProbScale = 1u << kProbBits;

// Smallest Gaussian scale a table may be built from.
inline constexpr double kScaleMin = 0.04;

// Discretized Gaussian over the integer symbols [lo, hi], quantized to a
// fixed total of 2^16. cdf has hi-lo+2 entries with cdf.front()=0 and
// cdf.back()=2^16; every symbol keeps a mass of at least 1 so the coder never
// sees a zero-width interval.
struct CdfTable {
    int lo = 0;
    int hi = 0;
    double mean = 0.0;
    double scale = 1.0;
    std::vector<std::uint32_t> cdf;

    int symbol_count() const { return hi - lo + 1; }
    bool contains(int symbol) const { return symbol >= lo && symbol <= hi; }

    std::uint32_t freq(int symbol) const {
        const std::size_t i = static_cast<std::size_t>(symbol - lo);
        return cdf[i + 1] - cdf[i];
    }
    std::uint32_t cum(int symbol) const { return cdf[static_cast<std::size_t>(symbol - lo)]; }

    // Symbol whose quantized interval contains the cumulative value cf.
    int lookup(std::uint32_t cf) const;

    // Exact cost of coding `symbol` with this table, in bits.
    double bits(int symbol) const;
};

// Mass of symbol k under N(mean, scale^2) integrated over [k-0.5, k+0.5],
// with the tails beyond [lo-0.5, hi+0.5] folded into the boundary symbols.
// This is the continuous reference the quantized table approximates; the
// rate estimator uses it directly.
double gaussian_bin_mass(double mean, double scale, int k, int lo, int hi);

// Standard normal CDF.
double std_normal_cdf(double x);

CdfTable build_cdf(double mean, double scale, int lo, int hi);

} // namespace gencodec
