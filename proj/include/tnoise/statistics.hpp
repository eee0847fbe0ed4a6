#pragma once

#include <vector>

namespace tnoise {

struct Interval {
  double lo = 0.0;
  double hi = 1.0;
};

// Two-sided Wilson score interval for k successes out of n.
Interval wilson_interval(long long k, long long n, double confidence = 0.95);

// P(X >= k) for X ~ Binomial(n, p).
double binomial_upper_tail(long long k, long long n, double p = 0.5);

// Exact McNemar test on paired binary outcomes (baseline, comparison).
struct PairedBinaryTest {
  long long pairs = 0;
  long long baseline_events = 0;
  long long comparison_events = 0;
  long long baseline_only = 0;    // event under the baseline only
  long long comparison_only = 0;  // event under the comparison only
  double p_increase = 1.0;        // one-sided p-value for comparison > baseline
  double p_decrease = 1.0;        // one-sided p-value for comparison < baseline
};
PairedBinaryTest mcnemar_exact(const std::vector<bool>& baseline, const std::vector<bool>& comparison);

// One-sided lower confidence bound on the mean of paired differences (Student t).
struct PairedMeanBound {
  int n = 0;
  double mean = 0.0;
  double sd = 0.0;
  double lower = 0.0;
};
PairedMeanBound paired_lower_bound(const std::vector<double>& first, const std::vector<double>& second,
                                   double confidence = 0.95);

// Linear interpolation between order statistics, q in [0, 1].
double quantile(std::vector<double> v, double q);
double median(const std::vector<double>& v);

}  // namespace tnoise
