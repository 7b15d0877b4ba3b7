#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "fjump/errors.hpp"
#include "fjump/rng.hpp"

namespace fjump {

inline double mean(std::span<const double> xs) {
    double m = 0.0;
    for (double x : xs) m += x;
    return m / static_cast<double>(xs.size());
}

// Unbiased sample variance (n - 1 normalization).
inline double variance(std::span<const double> xs) {
    if (xs.size() < 2) throw ConfigError("variance: need at least 2 samples");
    const double m = mean(xs);
    double acc = 0.0;
    for (double x : xs) acc += (x - m) * (x - m);
    return acc / static_cast<double>(xs.size() - 1);
}

inline double percentile(std::vector<double> xs, double p) {
    if (xs.empty()) throw ConfigError("percentile: empty sample");
    std::sort(xs.begin(), xs.end());
    const double idx = p * static_cast<double>(xs.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(idx);
    const std::size_t hi = std::min(lo + 1, xs.size() - 1);
    const double frac = idx - static_cast<double>(lo);
    return xs[lo] * (1.0 - frac) + xs[hi] * frac;
}

// Percentile standard error of an arbitrary statistic under resampling with
// replacement: half the central 68.27% interval of the bootstrap replicates.
template <typename Statistic>
double bootstrap_se(std::span<const double> xs, Statistic&& stat, int n_resamples,
                    std::uint64_t seed) {
    if (xs.size() < 2) throw ConfigError("bootstrap_se: need at least 2 samples");
    Rng rng(seed);
    std::vector<double> resample(xs.size());
    std::vector<double> replicates;
    replicates.reserve(static_cast<std::size_t>(n_resamples));
    for (int i = 0; i < n_resamples; ++i) {
        for (auto& r : resample) {
            const std::size_t j =
                static_cast<std::size_t>(rng.uniform01() * static_cast<double>(xs.size()));
            r = xs[std::min(j, xs.size() - 1)];
        }
        replicates.push_back(stat(std::span<const double>(resample)));
    }
    const double hi = percentile(replicates, 0.841345);
    const double lo = percentile(replicates, 0.158655);
    return 0.5 * (hi - lo);
}

}  // namespace fjump
