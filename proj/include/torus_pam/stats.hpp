/*
 * stats.hpp - ensemble means, jackknife errors and moment estimates.
 */

#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <vector>

#include "errors.hpp"

namespace tpam {

struct MeanEstimate {
    double mean = 0.0;
    double std_err = 0.0;
    std::size_t n = 0;
};

// Sample mean with the delete-one jackknife error, which for a mean is the
// usual s / sqrt(n).
inline MeanEstimate mean_estimate(const std::vector<double>& v)
{
    require(v.size() >= 2, "mean_estimate: need at least two samples");
    const double n = static_cast<double>(v.size());
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= n;
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return {mean, std::sqrt(ss / (n - 1.0) / n), v.size()};
}

struct JackknifeResult {
    double estimate = 0.0;
    double std_err = 0.0;
    std::vector<double> replicates;
};

// Block jackknife: stat(-1) is the full-sample statistic and stat(b) the
// statistic with block b left out.
inline JackknifeResult jackknife(std::size_t blocks, const std::function<double(long)>& stat)
{
    require(blocks >= 2, "jackknife: need at least two blocks");
    JackknifeResult r;
    r.estimate = stat(-1);
    double mean = 0.0;
    for (std::size_t b = 0; b < blocks; ++b) {
        r.replicates.push_back(stat(static_cast<long>(b)));
        mean += r.replicates.back();
    }
    mean /= static_cast<double>(blocks);
    double ss = 0.0;
    for (double v : r.replicates) ss += (v - mean) * (v - mean);
    r.std_err = std::sqrt(ss * (static_cast<double>(blocks) - 1.0) / static_cast<double>(blocks));
    return r;
}

struct MomentEstimate {
    double t = 0.0;
    std::vector<double> x;
    double p = 2.0;
    double value = 0.0;
    double std_err = 0.0;
    std::size_t n_samples = 0;
    // Comparisons; NaN where not computed.
    double upper_bound = std::numeric_limits<double>::quiet_NaN();   // bound on E|u|^p
    bool upper_converged = true;
    bool upper_pass = true;
    double lower_bound = std::numeric_limits<double>::quiet_NaN();   // bound on E u^2
    bool lower_pass = true;
    double reference = std::numeric_limits<double>::quiet_NaN();     // a known target, where one exists
};

}  // namespace tpam
