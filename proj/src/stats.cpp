#include "cam/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <boost/math/distributions/normal.hpp>

#include "cam/error.hpp"

namespace cam {

void CompensatedSum::add(double v) noexcept {
    const double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v))
        comp_ += (sum_ - t) + v;
    else
        comp_ += (v - t) + sum_;
    sum_ = t;
}

double normal_pdf(double x) noexcept {
    return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

double normal_cdf(double x) noexcept {
    return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw Error("normal_quantile: p must lie in (0, 1)");
    return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

double mean(std::span<const double> v) {
    if (v.empty()) throw InsufficientData("mean of an empty sample");
    CompensatedSum s;
    for (double x : v) s.add(x);
    return s.value() / static_cast<double>(v.size());
}

double variance(std::span<const double> v) {
    if (v.size() < 2) throw InsufficientData("variance needs at least two values");
    const double m = mean(v);
    CompensatedSum s;
    for (double x : v) s.add((x - m) * (x - m));
    return s.value() / static_cast<double>(v.size() - 1);
}

double median(std::span<const double> v) {
    if (v.empty()) throw InsufficientData("median of an empty sample");
    std::vector<double> w(v.begin(), v.end());
    std::sort(w.begin(), w.end());
    const std::size_t h = w.size() / 2;
    return w.size() % 2 ? w[h] : 0.5 * (w[h - 1] + w[h]);
}

Summary summarize(std::span<const double> v) {
    Summary s;
    s.n = v.size();
    if (v.empty()) return s;
    s.mean = mean(v);
    s.median = median(v);
    if (v.size() > 1) {
        s.sd = std::sqrt(variance(v));
        s.se_mean = s.sd / std::sqrt(static_cast<double>(v.size()));
    }
    return s;
}

}  // namespace cam
