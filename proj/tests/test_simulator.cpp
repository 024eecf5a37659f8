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

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "pairsync/errors.hpp"
#include "pairsync/random.hpp"
#include "pairsync/simulator.hpp"
#include "pairsync/tagio.hpp"
#include "pairsync/xcorr.hpp"

using namespace pairsync;

namespace
{

sim::SourceParams params(double rs, double r1, double r2, double seconds, std::uint64_t seed)
{
  sim::SourceParams p;
  p.r_s = rs;
  p.r1 = r1;
  p.r2 = r2;
  p.duration = static_cast<Picoseconds>(seconds * 1e12);
  p.seed = seed;
  return p;
}

double fano(std::span<const Picoseconds> tags, Picoseconds start, Picoseconds width, std::size_t n)
{
  std::vector<double> counts(n, 0.0);
  for (const auto t : tags) {
    const auto k = (t - start) / width;
    if (t >= start && k < static_cast<Picoseconds>(n)) {
      counts[static_cast<std::size_t>(k)] += 1.0;
    }
  }
  double m = 0.0;
  for (double c : counts) {
    m += c;
  }
  m /= static_cast<double>(n);
  double v = 0.0;
  for (double c : counts) {
    v += (c - m) * (c - m);
  }
  v /= static_cast<double>(n - 1);
  return v / m;
}

std::string bytes_of(const TagStream & s)
{
  std::ostringstream os(std::ios::binary);
  tagio::write_stream(s, os);
  return os.str();
}

}  // namespace

TEST(Random, SubstreamsAreDistinctAndReproducible)
{
  auto a = Rng::substream(1, 0);
  auto b = Rng::substream(1, 1);
  auto a2 = Rng::substream(1, 0);
  EXPECT_NE(a.next_u64(), b.next_u64());
  a = Rng::substream(1, 0);
  for (int i = 0; i < 100; ++i) {
    ASSERT_EQ(a.next_u64(), a2.next_u64());
  }
}

TEST(Random, NormalMoments)
{
  Rng r(4);
  const int n = 200'000;
  double s = 0.0;
  double ss = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = r.normal();
    s += x;
    ss += x * x;
  }
  EXPECT_NEAR(s / n, 0.0, 0.01);
  EXPECT_NEAR(ss / n, 1.0, 0.01);
}

TEST(Simulator, NullSessionCountsAndNoPeak)
{
  const auto s = sim::generate_session(params(0, 1e5, 1e5, 1.0, 17), {});
  EXPECT_NEAR(static_cast<double>(s.a.size()), 1e5, 5 * std::sqrt(1e5));
  EXPECT_TRUE(s.pairs.empty());

  const Picoseconds bin = 2'000;
  const std::size_t n = std::size_t{1} << 19;
  const Picoseconds span = 953 * bin * static_cast<Picoseconds>(n);
  const auto a = xcorr::discretize(s.a, bin, n, 0, span);
  const auto b = xcorr::discretize(s.b, bin, n, 0, span);
  const auto peak = xcorr::find_peak(xcorr::cross_correlate(a, b));
  EXPECT_LT(peak.significance, 6.0);
}

TEST(Simulator, PairDifferenceIsGaussianWithFwhmTauD)
{
  ClockModel c;
  c.delta_T = 1'000'000;
  const auto s = sim::generate_session(params(1e3, 0, 0, 10.0, 3), c);
  ASSERT_GT(s.pairs.size(), 9000u);
  // Nearest-B-minus-A over the streams themselves, not the stored pairs.
  const auto bt = s.b.tags();
  std::vector<double> d;
  for (const auto ta : s.a.tags()) {
    const auto it = std::lower_bound(bt.begin(), bt.end(), ta + c.delta_T);
    Picoseconds best = 0;
    bool found = false;
    for (auto jt = it == bt.begin() ? it : std::prev(it); jt != bt.end() && jt <= it; ++jt) {
      const Picoseconds diff = *jt - ta;
      if (!found || std::llabs(diff - c.delta_T) < std::llabs(best - c.delta_T)) {
        best = diff;
        found = true;
      }
    }
    d.push_back(static_cast<double>(best));
  }
  double m = 0.0;
  for (double x : d) {
    m += x;
  }
  m /= static_cast<double>(d.size());
  double v = 0.0;
  for (double x : d) {
    v += (x - m) * (x - m);
  }
  const double fwhm = 2.0 * std::sqrt(2.0 * std::numbers::ln2) * std::sqrt(v / static_cast<double>(d.size() - 1));
  EXPECT_NEAR(m, 1e6, 15.0);
  EXPECT_NEAR(fwhm, 1000.0, 50.0);
}

TEST(Simulator, DeterministicBytes)
{
  ClockModel c;
  c.delta_T = 374'593'000'000;
  c.delta_u = 2.0113e-4;
  const auto p = params(15000, 77000, 77000, 0.5, 7);
  const auto s1 = sim::generate_session(p, c);
  const auto s2 = sim::generate_session(p, c);
  EXPECT_EQ(bytes_of(s1.a), bytes_of(s2.a));
  EXPECT_EQ(bytes_of(s1.b), bytes_of(s2.b));
  auto p3 = p;
  p3.seed = 8;
  EXPECT_NE(bytes_of(sim::generate_session(p3, c).a), bytes_of(s1.a));
}

TEST(Simulator, FanoFactorNearOne)
{
  const auto s = sim::generate_session(params(2e4, 1e5, 5e4, 1.0, 1), {});
  const Picoseconds w = kPsPerMs;
  EXPECT_GE(fano(s.a.tags(), 0, w, 1000), 0.9);
  EXPECT_LE(fano(s.a.tags(), 0, w, 1000), 1.1);
  EXPECT_GE(fano(s.b.tags(), 0, w, 1000), 0.9);
  EXPECT_LE(fano(s.b.tags(), 0, w, 1000), 1.1);
}

TEST(Simulator, StreamSizesAndOrder)
{
  ClockModel c;
  c.delta_T = -3 * kPsPerMs;
  c.delta_u = -5e-5;
  const auto s = sim::generate_session(params(1e3, 2e3, 3e3, 2.0, 12), c);
  EXPECT_TRUE(std::is_sorted(s.a.tags().begin(), s.a.tags().end()));
  EXPECT_TRUE(std::is_sorted(s.b.tags().begin(), s.b.tags().end()));
  EXPECT_GE(s.a.size(), s.pairs.size());
  EXPECT_EQ(s.a.side(), Side::A);
  EXPECT_EQ(s.b.side(), Side::B);
  // Background on B lives in B's own clock span.
  const double b0 = static_cast<double>(apply_clock(0, c));
  const double b1 = static_cast<double>(apply_clock(2 * kPsPerSecond, c));
  EXPECT_GE(static_cast<double>(s.b.front()), b0 - 1e4);
  EXPECT_LE(static_cast<double>(s.b.back()), b1 + 1e4);
}

TEST(Simulator, PairsFollowTheClockModel)
{
  ClockModel c;
  c.delta_T = 5 * kPsPerMs;
  c.delta_u = 1e-4;
  const auto s = sim::generate_session(params(5e3, 0, 0, 1.0, 21), c);
  double m = 0.0;
  for (const auto & p : s.pairs) {
    m += static_cast<double>(invert_clock(p.t_b, c) - p.t_a);
  }
  m /= static_cast<double>(s.pairs.size());
  EXPECT_LT(std::abs(m), 20.0);
}

TEST(Simulator, DriftPhaseIsSinusoidal)
{
  ClockModel c;
  c.drift_amplitude = 1e-8;
  c.drift_period = kPsPerSecond;
  const long double quarter = 0.25L * 1e12L;
  const double expect = 1e-8 * 1e12 / (2.0 * std::numbers::pi);
  EXPECT_NEAR(static_cast<double>(sim::local_time_b(quarter, c) - quarter), expect, 1e-6);
  EXPECT_NEAR(static_cast<double>(sim::local_time_b(2.0L * quarter, c) - 2.0L * quarter), 0.0, 1e-6);
}

TEST(Simulator, BackgroundRampTiltsTheRate)
{
  auto p = params(0, 2e5, 0, 1.0, 5);
  p.background_ramp = 0.5;
  const auto s = sim::generate_session(p, {});
  const auto first = s.a.range(0, kPsPerSecond / 2).size();
  const auto second = s.a.range(kPsPerSecond / 2, kPsPerSecond).size();
  EXPECT_NEAR(static_cast<double>(second) / static_cast<double>(first), 1.25 / 0.75, 0.03);
}

TEST(Simulator, JitterSigmaSplitsFwhm)
{
  EXPECT_NEAR(sim::per_side_jitter_sigma(1000) * std::sqrt(2.0) * 2.0 * std::sqrt(2.0 * std::numbers::ln2), 1000.0,
              1e-9);
}

TEST(Simulator, ParameterValidation)
{
  EXPECT_THROW(sim::generate_session(params(-1, 0, 0, 1, 0), {}), ParameterError);
  EXPECT_THROW(sim::generate_session(params(0, 2e7, 0, 1, 0), {}), ParameterError);
  EXPECT_THROW(sim::generate_session(params(0, 0, 0, 0, 0), {}), ParameterError);
  EXPECT_THROW(sim::generate_session(params(1e7, 1e7, 1e7, 1000, 0), {}), CapacityError);
  EXPECT_NO_THROW(sim::generate_session(params(0, 0, 0, 1, 0), {}));
}
