#include "tnoise/statistics.hpp"

#include <boost/math/distributions/binomial.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace tnoise {

Interval wilson_interval(long long k, long long n, double confidence) {
  if (n <= 0 || k < 0 || k > n) throw std::invalid_argument("wilson_interval: need 0 <= k <= n, n >= 1");
  const double z = boost::math::quantile(boost::math::normal(), 0.5 + 0.5 * confidence);
  const double p = static_cast<double>(k) / n, z2 = z * z, nn = static_cast<double>(n);
  const double centre = (p + z2 / (2 * nn)) / (1 + z2 / nn);
  const double half = z / (1 + z2 / nn) * std::sqrt(p * (1 - p) / nn + z2 / (4 * nn * nn));
  return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

double binomial_upper_tail(long long k, long long n, double p) {
  if (n < 0) throw std::invalid_argument("binomial_upper_tail: n < 0");
  if (k <= 0) return 1.0;
  if (k > n) return 0.0;
  boost::math::binomial dist(static_cast<double>(n), p);
  return boost::math::cdf(boost::math::complement(dist, static_cast<double>(k - 1)));
}

PairedBinaryTest mcnemar_exact(const std::vector<bool>& baseline, const std::vector<bool>& comparison) {
  if (baseline.size() != comparison.size()) throw std::invalid_argument("mcnemar_exact: unpaired samples");
  PairedBinaryTest r;
  r.pairs = static_cast<long long>(baseline.size());
  for (std::size_t i = 0; i < baseline.size(); ++i) {
    r.baseline_events += baseline[i];
    r.comparison_events += comparison[i];
    r.baseline_only += baseline[i] && !comparison[i];
    r.comparison_only += comparison[i] && !baseline[i];
  }
  const long long disc = r.baseline_only + r.comparison_only;
  r.p_increase = binomial_upper_tail(r.comparison_only, disc);
  r.p_decrease = binomial_upper_tail(r.baseline_only, disc);
  return r;
}

PairedMeanBound paired_lower_bound(const std::vector<double>& first, const std::vector<double>& second,
                                   double confidence) {
  if (first.size() != second.size()) throw std::invalid_argument("paired_lower_bound: unpaired samples");
  if (first.size() < 2) throw std::invalid_argument("paired_lower_bound: need at least two pairs");
  PairedMeanBound b;
  b.n = static_cast<int>(first.size());
  std::vector<double> d(first.size());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = second[i] - first[i];
  for (double v : d) b.mean += v;
  b.mean /= b.n;
  double ss = 0.0;
  for (double v : d) ss += (v - b.mean) * (v - b.mean);
  b.sd = std::sqrt(ss / (b.n - 1));
  const double t = boost::math::quantile(boost::math::students_t(b.n - 1), confidence);
  b.lower = b.mean - t * b.sd / std::sqrt(static_cast<double>(b.n));
  return b;
}

double quantile(std::vector<double> v, double q) {
  if (v.empty()) throw std::invalid_argument("quantile: empty sample");
  if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("quantile: q outside [0, 1]");
  std::sort(v.begin(), v.end());
  const double pos = q * (v.size() - 1);
  const auto i = static_cast<std::size_t>(std::floor(pos));
  if (i + 1 >= v.size()) return v.back();
  return v[i] + (pos - i) * (v[i + 1] - v[i]);
}

double median(const std::vector<double>& v) { return quantile(v, 0.5); }

}  // namespace tnoise
