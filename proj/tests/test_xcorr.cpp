// Copyright 2026 The pairsync Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "pairsync/errors.hpp"
#include "pairsync/fft.hpp"
#include "pairsync/simulator.hpp"
#include "pairsync/xcorr.hpp"
#include "support/oracles.hpp"

using namespace pairsync;
using namespace pairsync::xcorr;

namespace
{

BinnedArray from_counts(std::vector<std::uint32_t> counts, Picoseconds bin = 1000)
{
  BinnedArray b;
  b.n_bins = counts.size();
  b.bin_width = bin;
  b.span = bin * static_cast<Picoseconds>(counts.size());
  b.counts = std::move(counts);
  return b;
}

std::vector<std::uint32_t> random_counts(std::mt19937_64 & rng, std::size_t n, std::uint32_t hi)
{
  std::uniform_int_distribution<std::uint32_t> d(0, hi);
  std::vector<std::uint32_t> v(n);
  for (auto & x : v) {
    x = d(rng);
  }
  return v;
}

CorrelationArray from_values(std::vector<double> v, Picoseconds bin = 1000)
{
  CorrelationArray c;
  c.n_bins = v.size();
  c.bin_width = bin;
  c.effective_bin_width = bin;
  c.values = std::move(v);
  return c;
}

}  // namespace

TEST(Discretize, SmallExample)
{
  const TagStream s(Side::A, {0, 1000, 2000});
  const auto b = discretize(s, 1000, 4, 0, 4000);
  EXPECT_EQ(b.counts, (std::vector<std::uint32_t>{1, 1, 1, 0}));
}

TEST(Discretize, WrapsModuloN)
{
  const TagStream s(Side::A, {4000, 4999, 7999});
  const auto b = discretize(s, 1000, 4, 0, 8000);
  EXPECT_EQ(b.counts, (std::vector<std::uint32_t>{2, 0, 0, 1}));
}

TEST(Discretize, ConservesTagsInsideTheWindow)
{
  std::mt19937_64 rng(8);
  for (int rep = 0; rep < 10; ++rep) {
    const TagStream s(Side::B, oracle::random_sorted_tags(rng, 50'000, -kPsPerMs, 20 * kPsPerMs));
    const Picoseconds start = 1234;
    const Picoseconds span = 8 * 1024 * 1000;
    const auto b = discretize(s, 1000, 1024, start, span);
    const auto inside = std::count_if(s.tags().begin(), s.tags().end(),
                                      [&](Picoseconds t) { return t >= start && t < start + span; });
    EXPECT_EQ(b.total(), static_cast<std::uint64_t>(inside));
  }
}

TEST(Discretize, Validation)
{
  const TagStream s(Side::A, {1});
  EXPECT_THROW(discretize(s, 1000, 4, 0, 4001), UniformityError);
  EXPECT_NO_THROW(discretize(s, 1000, 4, 0, 4001, Tiling::Partial));
  EXPECT_THROW(discretize(s, 1000, 6, 0, 6000), ShapeError);
  EXPECT_THROW(discretize(s, 1, kMaxBins * 2, 0, 2 * static_cast<Picoseconds>(kMaxBins)), ShapeError);
  EXPECT_THROW(discretize(s, 0, 4, 0, 4000), ResolutionError);
  EXPECT_THROW(discretize(s, 1000, 4, 0, 0), ParameterError);
}

TEST(Fft, RoundTripAndParseval)
{
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g;
  for (std::size_t n : {16u, 256u, 4096u}) {
    std::vector<double> x(n);
    for (auto & v : x) {
      v = g(rng);
    }
    const auto X = fft::forward(x);
    ASSERT_EQ(X.size(), n / 2 + 1);
    const auto y = fft::inverse(X, n);
    double energy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      EXPECT_NEAR(y[i], x[i], 1e-9);
      energy += x[i] * x[i];
    }
    double power = std::norm(X.front()) + std::norm(X.back());
    for (std::size_t k = 1; k < n / 2; ++k) {
      power += 2.0 * std::norm(X[k]);
    }
    EXPECT_NEAR(power / static_cast<double>(n), energy, 1e-9 * energy);
  }
}

TEST(CrossCorrelate, MatchesDirectSum)
{
  std::mt19937_64 rng(21);
  for (std::size_t n : {16u, 64u, 512u, 1024u}) {
    for (int rep = 0; rep < 5; ++rep) {
      const auto a = random_counts(rng, n, 50);
      const auto b = random_counts(rng, n, 50);
      const auto c = cross_correlate(from_counts(a), from_counts(b));
      const auto want = oracle::direct_correlation(a, b);
      for (std::size_t k = 0; k < n; ++k) {
        ASSERT_NEAR(c.values[k], want[k], 1e-9 * std::max(1.0, std::abs(want[k])));
      }
    }
  }
}

TEST(CrossCorrelate, ImpulseAndShift)
{
  std::vector<std::uint32_t> a(64, 0);
  a[3] = 1;
  auto c = cross_correlate(from_counts(a), from_counts(a));
  EXPECT_NEAR(c.values[0], 1.0, 1e-12);
  EXPECT_NEAR(std::accumulate(c.values.begin(), c.values.end(), 0.0), 1.0, 1e-12);

  std::mt19937_64 rng(3);
  const auto base = random_counts(rng, 256, 9);
  for (std::size_t s : {0u, 1u, 17u, 128u, 255u}) {
    std::vector<std::uint32_t> shifted(256);
    for (std::size_t j = 0; j < 256; ++j) {
      shifted[(j + s) % 256] = base[j];
    }
    const auto cc = cross_correlate(from_counts(base), from_counts(shifted));
    const auto k = std::max_element(cc.values.begin(), cc.values.end()) - cc.values.begin();
    EXPECT_EQ(static_cast<std::size_t>(k), s);
  }
}

TEST(CrossCorrelate, SuppressionClearsTheMean)
{
  std::mt19937_64 rng(4);
  const auto a = random_counts(rng, 1024, 20);
  const auto b = random_counts(rng, 1024, 20);
  const auto c = cross_correlate(from_counts(a), from_counts(b), 5);
  EXPECT_NEAR(std::accumulate(c.values.begin(), c.values.end(), 0.0), 0.0, 1e-6);
  EXPECT_THROW(cross_correlate(from_counts(a), from_counts(b), 512), ShapeError);
  EXPECT_THROW(cross_correlate(from_counts(a), from_counts(random_counts(rng, 512, 1))), ShapeError);
}

TEST(CrossCorrelate, ShiftCovarianceOnTags)
{
  std::mt19937_64 rng(77);
  const Picoseconds bin = 1000;
  const std::size_t n = 4096;
  const Picoseconds period = bin * static_cast<Picoseconds>(n);
  std::uniform_int_distribution<Picoseconds> whole(-static_cast<Picoseconds>(n) / 2 + 2,
                                                   static_cast<Picoseconds>(n) / 2 - 2);
  std::uniform_int_distribution<Picoseconds> frac(0, 300);
  for (int rep = 0; rep < 30; ++rep) {
    const auto ta = oracle::random_sorted_tags(rng, 3000, 0, 4 * period);
    const Picoseconds d = whole(rng) * bin + frac(rng);
    std::vector<Picoseconds> tb(ta);
    for (auto & t : tb) {
      t += d;
    }
    const TagStream a(Side::A, ta);
    const TagStream b(Side::B, tb);
    const auto c = cross_correlate(discretize(a, bin, n, 0, 4 * period), discretize(b, bin, n, 0, 4 * period));
    const auto p = find_peak(c);
    EXPECT_NEAR(p.tau_offset, static_cast<double>(d), static_cast<double>(bin)) << "d=" << d;
  }
}

TEST(Rebin, SumsNeighbours)
{
  const auto r = rebin(from_values({1, 2, 3, 4}), 2);
  EXPECT_EQ(r.values, (std::vector<double>{3, 7}));
  EXPECT_EQ(r.effective_bin_width, 2000);
  EXPECT_EQ(rebin(from_values({1, 2, 3, 4}), 1).values, (std::vector<double>{1, 2, 3, 4}));
  EXPECT_THROW(rebin(from_values({1, 2, 3, 4}), 8), ShapeError);
  EXPECT_THROW(rebin(from_values({1, 2, 3, 4}), 3), ShapeError);
}

TEST(Rebin, RepeatedHalvingEqualsOneStep)
{
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0.0, 100.0);
  std::vector<double> v(1024);
  for (auto & x : v) {
    x = u(rng);
  }
  const auto c = from_values(v, 2048);
  auto step = c;
  for (int i = 0; i < 3; ++i) {
    step = rebin(step, 2);
  }
  const auto once = rebin(c, 8);
  ASSERT_EQ(step.values.size(), once.values.size());
  for (std::size_t i = 0; i < once.values.size(); ++i) {
    EXPECT_NEAR(step.values[i], once.values[i], 1e-9);
  }
  EXPECT_EQ(once.effective_bin_width, 16'384);
  EXPECT_DOUBLE_EQ(step.lag_origin, once.lag_origin);
  EXPECT_NEAR(std::accumulate(once.values.begin(), once.values.end(), 0.0),
              std::accumulate(v.begin(), v.end(), 0.0), 1e-6);
}

TEST(FindPeak, SignificanceAgainstHandStatistics)
{
  std::vector<double> v(32, 0.0);
  for (std::size_t i = 0; i < v.size(); ++i) {
    v[i] = (i % 2 == 0) ? 1.0 : -1.0;
  }
  v[10] = 20.0;
  const auto p = find_peak(from_values(v));
  // Baseline excludes bins 9..11: 15 at +1, 14 at -1.
  const double mean = 1.0 / 29.0;
  const double sd = std::sqrt((15 * (1 - mean) * (1 - mean) + 14 * (1 + mean) * (1 + mean)) / 29.0);
  EXPECT_EQ(p.k_max, 10u);
  EXPECT_NEAR(p.baseline_mean, mean, 1e-12);
  EXPECT_NEAR(p.baseline_sd, sd, 1e-12);
  EXPECT_NEAR(p.significance, (20.0 - mean) / sd, 1e-9);
}

TEST(FindPeak, DegenerateAndShape)
{
  std::vector<double> v(64, 5.0);
  v[7] = 9.0;
  EXPECT_THROW(find_peak(from_values(v)), DegenerateBaselineError);
  EXPECT_THROW(find_peak(from_values(std::vector<double>(8, 1.0))), ShapeError);
}

TEST(FindPeak, OffsetWrapsAroundCenter)
{
  auto c = from_values(std::vector<double>(16, 0.0));
  EXPECT_DOUBLE_EQ(c.offset_of(15), -1000.0);
  EXPECT_DOUBLE_EQ(c.offset_of(8), 8000.0);
  c.wrap_center = 8000.0;
  EXPECT_DOUBLE_EQ(c.offset_of(15), 15000.0);
  EXPECT_DOUBLE_EQ(wrap_offset(17.0, 10.0, 0.0), -3.0);
  EXPECT_DOUBLE_EQ(wrap_offset(-5.0, 10.0, 0.0), 5.0);
}

TEST(Significance, TailRateInversionMatchesBisection)
{
  for (int e = 2; e <= 14; ++e) {
    const double eps = std::pow(10.0, -e);
    EXPECT_NEAR(significance_for_tail_rate(eps), oracle::significance_for_tail(eps), 1e-9) << e;
    EXPECT_NEAR(tail_rate(significance_for_tail_rate(eps)) / eps, 1.0, 1e-9);
  }
  EXPECT_THROW(significance_for_tail_rate(0.0), ParameterError);
  EXPECT_THROW(significance_for_tail_rate(0.6), ParameterError);
}

TEST(Significance, ThresholdsAndMissProbability)
{
  // S = 6 is a per-bin tail of one in a billion, S = 3.72 of 1e-4.
  EXPECT_NEAR(std::log10(tail_rate(6.0)), -9.0, 0.05);
  EXPECT_NEAR(std::log10(tail_rate(3.72)), -4.0, 0.05);
  EXPECT_NEAR(significance_threshold(1e-2, 1u << 19), oracle::significance_for_tail(1e-2 / (1u << 19)), 1e-9);
  EXPECT_DOUBLE_EQ(miss_probability(0.0, 1024), 1.0);
  EXPECT_GT(miss_probability(8.0, 1u << 20), 0.0);
  EXPECT_LT(miss_probability(8.0, 1u << 20), 1e-8);
}

TEST(Significance, PredictedAndRequiredBins)
{
  EXPECT_NEAR(predicted_significance(1e3, 1e5, 1e5, 360'000), 6.0, 1e-12);
  EXPECT_NEAR(predicted_significance(1e3, 1e5, 1e5, 4 * 360'000), 12.0, 1e-12);
  EXPECT_NEAR(predicted_significance(15'000, 77'000, 77'000, 1 << 19), 141.05, 0.01);
  EXPECT_EQ(predicted_significance(1, 0, 5, 16), std::numeric_limits<double>::infinity());
  for (double rs : {100.0, 1e3, 2e4}) {
    EXPECT_NEAR(predicted_significance(rs, 3e4, 7e4, 1e6),
                oracle::predicted_significance(rs, 3e4, 7e4, 1e6), 1e-9);
  }
  EXPECT_EQ(required_bins(1e3, 1e5, 1e5, 6.0), 1u << 19);
  EXPECT_EQ(required_bins(1e3, 0, 1e5, 6.0), 1u << 8);
  EXPECT_EQ(required_bins(15'000, 77'000, 77'000, 6.0), 1u << 10);
  EXPECT_THROW(required_bins(0, 1, 1, 6), ParameterError);
}

TEST(Significance, PoissonMonteCarloNearPrediction)
{
  // r_s = 1e3, r1 = r2 = 1e5 at N = 2^19: predicted 7.24.
  const Picoseconds bin = 2'000;
  const std::size_t n = std::size_t{1} << 19;
  const Picoseconds span = 953 * bin * static_cast<Picoseconds>(n);
  const ClockModel c;
  double mean = 0.0;
  int hits = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    sim::SourceParams p;
    p.r_s = 1e3;
    p.r1 = 1e5;
    p.r2 = 1e5;
    p.duration = span + kPsPerMs;
    p.seed = seed;
    const auto s = sim::generate_session(p, c);
    const auto pk = find_peak(cross_correlate(discretize(s.a, bin, n, 0, span), discretize(s.b, bin, n, 0, span)));
    EXPECT_GE(pk.significance, 4.0) << seed;
    EXPECT_LE(pk.significance, 9.0) << seed;
    hits += std::abs(pk.tau_offset) < 1.0 ? 1 : 0;
    mean += pk.significance / 20.0;
  }
  // Bin splitting of the 425 ps per-side jitter costs about a fifth of S_p.
  const double sp = predicted_significance(1e3, 1e5, 1e5, static_cast<double>(n));
  EXPECT_GT(mean, 0.7 * sp);
  EXPECT_LT(mean, sp);
  // Near S = 6 an accidental bin occasionally wins.
  EXPECT_GE(hits, 18);
}

namespace
{

sim::Session session(double rs, double r1, double r2, double seconds, Picoseconds dT, std::uint64_t seed)
{
  sim::SourceParams p;
  p.r_s = rs;
  p.r1 = r1;
  p.r2 = r2;
  p.duration = static_cast<Picoseconds>(seconds * 1e12);
  p.seed = seed;
  ClockModel c;
  c.delta_T = dT;
  return sim::generate_session(p, c);
}

}  // namespace

TEST(CoarseFine, ZeroOffset)
{
  const auto s = session(1280, 68'000, 56'000, 1.2, 0, 2);
  const auto e = find_offset_coarse_fine(s.a, s.b);
  EXPECT_LE(std::llabs(e.delta_T), 2'000);
  EXPECT_GT(e.fine.significance, 6.0);
}

TEST(CoarseFine, NegativeOffset)
{
  const auto s = session(1280, 68'000, 56'000, 1.2, -3 * kPsPerMs, 4);
  const auto e = find_offset_coarse_fine(s.a, s.b);
  EXPECT_LE(std::llabs(e.delta_T + 3 * kPsPerMs), 2'000);
}

TEST(CoarseFine, LargeOffsetFromTheHeraldedSourceSetting)
{
  const Picoseconds truth = 53'599'160'000;
  double coarse = 0.0;
  double fine = 0.0;
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto s = session(1280, 68'000, 56'000, 2.0, truth, seed);
    const auto e = find_offset_coarse_fine(s.a, s.b);
    EXPECT_LE(std::llabs(e.delta_T - truth), 2'000) << seed;
    EXPECT_GT(e.coarse.significance, 6.0);
    EXPECT_GT(e.fine.significance, 6.0);
    EXPECT_EQ(e.resolution, 2'000);
    coarse += e.coarse.significance / 3.0;
    fine += e.fine.significance / 3.0;
  }
  // Single sessions scatter by about 2 around S = 11 or 12.
  EXPECT_GT(coarse, 10.0);
  EXPECT_GT(fine, 10.0);
}

TEST(CoarseFine, NoSignalRaises)
{
  const auto s = session(0, 68'000, 56'000, 1.2, 0, 9);
  EXPECT_THROW(find_offset_coarse_fine(s.a, s.b), NoPeakError);
  EXPECT_THROW(find_offset_coarse_fine(TagStream(Side::A, {}), s.b), CoverageError);
}
