#include <gtest/gtest.h>

#include <boost/math/distributions/binomial.hpp>
#include <cmath>

#include "hatlsd/nfa.hpp"
#include "hatlsd/rng.hpp"

using namespace hatlsd;

namespace {

double oracle(std::int64_t n, std::int64_t k, double p, double nt) {
  const boost::math::binomial dist(static_cast<double>(n), p);
  const double tail = k == 0 ? 1.0 : boost::math::cdf(boost::math::complement(dist, static_cast<double>(k - 1)));
  return -std::log10(tail) - std::log10(nt);
}

}  // namespace

TEST(Nfa, ZeroAlignedIsMinusLogTests) {
  EXPECT_DOUBLE_EQ(nfa_log10(100, 0, 0.125, 1e6), -6.0);
  EXPECT_DOUBLE_EQ(nfa_log10(0, 0, 0.125, 1.0), 0.0);
}

TEST(Nfa, AllAlignedExample) {
  EXPECT_NEAR(nfa_log10(10, 10, 0.125, 1.0), -10.0 * std::log10(0.125), 1e-10);
  EXPECT_NEAR(nfa_log10(10, 10, 0.125, 1.0), 9.03, 0.005);
}

TEST(Nfa, TestsShiftByLog) {
  const double a = nfa_log10(50, 20, 0.125, 1.0);
  EXPECT_NEAR(nfa_log10(50, 20, 0.125, 2.0), a - std::log10(2.0), 1e-12);
  EXPECT_NEAR(nfa_log10(50, 20, 0.125, 1e10), a - 10.0, 1e-12);
}

TEST(Nfa, MatchesBinomialOracleProperty) {
  Rng r(1);
  for (int t = 0; t < 2000; ++t) {
    const auto n = static_cast<std::int64_t>(r.uniform(1, 400));
    const auto k = static_cast<std::int64_t>(r.uniform(0, static_cast<double>(n) + 0.999));
    const double p = r.uniform(0.01, 0.6);
    const double nt = std::pow(10.0, r.uniform(0, 12));
    const double want = oracle(n, k, p, nt);
    // the oracle tail goes subnormal past 1e-300
    if (!std::isfinite(want) || want + std::log10(nt) > 300.0) continue;
    EXPECT_NEAR(nfa_log10(n, k, p, nt), want, 1e-8 * std::max(1.0, std::abs(want)))
        << n << " " << k << " " << p;
  }
}

TEST(Nfa, LargeNStaysFinite) {
  const double v = nfa_log10(200000, 150000, 0.125, 1e15);
  EXPECT_TRUE(std::isfinite(v));
  EXPECT_GT(v, 1000.0);
  EXPECT_NEAR(nfa_log10(200000, 25000, 0.125, 1.0), oracle(200000, 25000, 0.125, 1.0), 1e-6);
}

TEST(Nfa, MonotoneInKProperty) {
  for (double p : {0.0625, 0.125, 0.25}) {
    double prev = -1e300;
    for (std::int64_t k = 0; k <= 120; ++k) {
      const double v = nfa_log10(120, k, p, 1e4);
      EXPECT_GE(v, prev);
      prev = v;
    }
  }
}

TEST(Nfa, InvalidArguments) {
  EXPECT_THROW(nfa_log10(10, 5, 0.0, 1), ParamError);
  EXPECT_THROW(nfa_log10(10, 5, 1.0, 1), ParamError);
  EXPECT_THROW(nfa_log10(10, 5, NAN, 1), ParamError);
  EXPECT_THROW(nfa_log10(10, 11, 0.1, 1), ParamError);
  EXPECT_THROW(nfa_log10(10, -1, 0.1, 1), ParamError);
  EXPECT_THROW(nfa_log10(10, 5, 0.1, 0.5), ParamError);
}
