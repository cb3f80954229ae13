#pragma once

#include <string>

namespace aesurv {

/// Shortest decimal string that parses back to exactly the same double
/// (at most 17 significant digits).
std::string format_double(double x);

/// Standard normal CDF.
double norm_cdf(double z);

/// Compensated (Kahan) accumulator for long sums of small increments.
class KahanSum {
  public:
    void add(double x) {
        const double y = x - compensation_;
        const double t = sum_ + y;
        compensation_ = (t - sum_) - y;
        sum_ = t;
    }
    double value() const { return sum_; }

  private:
    double sum_ = 0.0;
    double compensation_ = 0.0;
};

} // namespace aesurv
