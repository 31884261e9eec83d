#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>

#include "hatlsd/error.hpp"

namespace hatlsd {

/// -log10(n_tests * P[Binomial(n, p) >= k]). Larger is more significant.
/// The tail is summed in log space starting from the log-gamma evaluation of
/// its first term, so it neither underflows nor overflows for large n.
inline double nfa_log10(std::int64_t n, std::int64_t k, double p, double n_tests) {
  if (!(p > 0.0 && p < 1.0)) throw ParamError("alignment probability must lie in (0, 1)");
  if (n < 0 || k < 0 || k > n) throw ParamError("nfa requires 0 <= k <= n");
  if (!(n_tests >= 1.0)) throw ParamError("number of tests must be >= 1");
  const double log_nt = std::log10(n_tests);
  if (n == 0 || k == 0) return -log_nt;

  const double dn = static_cast<double>(n);
  const double dk = static_cast<double>(k);
  const double log_odds = std::log(p) - std::log1p(-p);
  double log_term = std::lgamma(dn + 1.0) - std::lgamma(dk + 1.0) - std::lgamma(dn - dk + 1.0) +
                    dk * std::log(p) + (dn - dk) * std::log1p(-p);
  double log_tail = log_term;
  for (std::int64_t i = k + 1; i <= n; ++i) {
    const double di = static_cast<double>(i);
    log_term += std::log((dn - di + 1.0) / di) + log_odds;
    const double hi = std::max(log_tail, log_term);
    log_tail = hi + std::log(std::exp(log_tail - hi) + std::exp(log_term - hi));
    // Past the mode the terms shrink geometrically; stop once negligible.
    if (di > dn * p && log_term < log_tail - 45.0) break;
  }
  log_tail = std::min(log_tail, 0.0);
  return -log_tail / std::numbers::ln10 - log_nt;
}

}  // namespace hatlsd
