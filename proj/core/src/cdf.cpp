#include "gencodec/cdf.hpp"

#include <algorithm>
#include <cmath>

#include "gencodec/errors.hpp"

namespace gencodec {

double std_normal_cdf(double x) {
    return 0.5 * std::erfc(-x * 0.70710678118654752440);
}

double gaussian_bin_mass(double mean, double scale, int k, int lo, int hi) {
    const double upper = (k == hi) ? 1.0 : std_normal_cdf((k + 0.5 - mean) / scale);
    const double lower = (k == lo) ? 0.0 : std_normal_cdf((k - 0.5 - mean) / scale);
    return upper - lower;
}

int CdfTable::lookup(std::uint32_t cf) const {
    // First entry strictly greater than cf, minus one.
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), cf);
    return lo + static_cast<int>(it - cdf.begin()) - 1;
}

double CdfTable::bits(int symbol) const {
    return -std::log2(static_cast<double>(freq(symbol)) / static_cast<double>(kProbScale));
}

CdfTable build_cdf(double mean, double scale, int lo, int hi) {
    if (lo >= hi)
        throw InvalidArgument("build_cdf: empty symbol range");
    const int n = hi - lo + 1;
    if (static_cast<std::uint32_t>(n) >= kProbScale)
        throw InvalidArgument("build_cdf: symbol range too wide for 16-bit precision");
    if (!(scale >= kScaleMin))
        throw InvalidArgument("build_cdf: scale below scale_min");

    // Bin edges share erf evaluations between adjacent symbols. Beyond 8
    // standard deviations the CDF is exactly 0 or 1 at table precision, so
    // only the central window pays for erfc.
    std::vector<double> edge(static_cast<std::size_t>(n) + 1);
    edge[0] = 0.0;
    edge[static_cast<std::size_t>(n)] = 1.0;
    for (int i = 1; i < n; ++i) {
        const double z = (lo + i - 0.5 - mean) / scale;
        edge[static_cast<std::size_t>(i)] = z <= -8.0 ? 0.0 : (z >= 8.0 ? 1.0 : std_normal_cdf(z));
    }

    std::vector<std::int64_t> freq(static_cast<std::size_t>(n));
    std::int64_t total = 0;
    for (int i = 0; i < n; ++i) {
        const double mass = edge[static_cast<std::size_t>(i) + 1] - edge[static_cast<std::size_t>(i)];
        freq[static_cast<std::size_t>(i)] =
            std::max<std::int64_t>(1, std::llround(mass * static_cast<double>(kProbScale)));
        total += freq[static_cast<std::size_t>(i)];
    }

    // Settle the rounding residue on whichever symbol currently has the most
    // mass; that perturbs its probability the least in relative terms.
    std::int64_t diff = static_cast<std::int64_t>(kProbScale) - total;
    while (diff != 0) {
        const auto it = std::max_element(freq.begin(), freq.end());
        if (diff > 0) {
            // the whole positive residue can land on the largest entry at once
            *it += diff;
            diff = 0;
        } else {
            const std::int64_t take = std::min(-diff, *it - 1);
            *it -= take;
            diff += take;
            if (take == 0) // pathological: everything at the floor already
                throw InvalidArgument("build_cdf: cannot renormalize table");
        }
    }

    CdfTable t;
    t.lo = lo;
    t.hi = hi;
    t.mean = mean;
    t.scale = scale;
    t.cdf.resize(static_cast<std::size_t>(n) + 1);
    t.cdf[0] = 0;
    std::uint32_t acc = 0;
    for (int i = 0; i < n; ++i) {
        acc += static_cast<std::uint32_t>(freq[static_cast<std::size_t>(i)]);
        t.cdf[static_cast<std::size_t>(i) + 1] = acc;
    }
    return t;
}

} // namespace gencodec
