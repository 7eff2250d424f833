#pragma once

#include <cstddef>
#include <vector>

namespace srv6kit::bench {

struct SummaryStats {
    std::size_t n = 0;
    double mean = 0;
    double stddev = 0;  // sample (n - 1)
    double cv_pct = 0;
    double ci95_pct = 0;  // half-width relative to the mean
    double median = 0;
};

/// Two-sided 97.5% Student-t quantile: table for df 1..30, normal above.
double t975(std::size_t df);

/// Throws Error(InsufficientSamples) for fewer than 2 samples.
SummaryStats summarize(const std::vector<double>& samples);

double median(std::vector<double> samples);

}  // namespace srv6kit::bench
