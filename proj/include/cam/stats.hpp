#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace cam {

// Neumaier-compensated running sum.
class CompensatedSum {
public:
    void add(double v) noexcept;
    double value() const noexcept { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

double normal_pdf(double x) noexcept;
double normal_cdf(double x) noexcept;
double normal_quantile(double p);

double mean(std::span<const double> v);
/// Unbiased sample variance (divisor n - 1).
double variance(std::span<const double> v);
double median(std::span<const double> v);

struct Summary {
    std::size_t n = 0;
    double mean = 0.0;
    double sd = 0.0;
    double median = 0.0;
    double se_mean = 0.0;
};

Summary summarize(std::span<const double> v);

}  // namespace cam
