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

#include "pairsync/simulator.hpp"

#include <cmath>
#include <numbers>

#include "pairsync/errors.hpp"
#include "pairsync/random.hpp"

namespace pairsync::sim
{

namespace
{

// Sub-stream ids; each physical process draws from its own engine so that
// changing one rate leaves the other processes' draws untouched.
enum Stream : std::uint64_t { kPairs = 1, kJitterA, kJitterB, kBackgroundA, kBackgroundB };

// Homogeneous (or linearly ramped) Poisson arrivals on [start, start + span).
std::vector<long double> poisson_arrivals(Rng & rng, double rate, long double start,
                                          long double span, double ramp)
{
  std::vector<long double> out;
  if (rate <= 0.0 || span <= 0) {
    return out;
  }
  const double peak = rate * (1.0 + std::abs(ramp));
  const long double mean_gap = 1e12L / peak;
  out.reserve(static_cast<std::size_t>(rate * static_cast<double>(span) * 1e-12 * 1.05 + 16));
  long double t = start;
  for (;;) {
    t += mean_gap * rng.exponential();
    if (t >= start + span) {
      break;
    }
    if (ramp != 0.0) {
      const double x = static_cast<double>((t - start) / span);
      const double accept = (1.0 + ramp * (2.0 * x - 1.0)) / (1.0 + std::abs(ramp));
      if (rng.uniform() >= accept) {
        continue;
      }
    }
    out.push_back(t);
  }
  return out;
}

}  // namespace

void SourceParams::validate() const
{
  for (double r : {r_s, r1, r2}) {
    if (!(r >= 0.0) || r > kMaxRate) {
      throw ParameterError("rates must lie in [0, 1e7] counts/s");
    }
  }
  if (duration <= 0) {
    throw ParameterError("duration must be positive");
  }
  if (tau_d < 0) {
    throw ParameterError("tau_d must be non-negative");
  }
  if (!(std::abs(background_ramp) <= 1.0)) {
    throw ParameterError("background ramp must lie in [-1, 1]");
  }
}

double per_side_jitter_sigma(Picoseconds tau_d)
{
  return static_cast<double>(tau_d) / (2.0 * std::sqrt(2.0 * std::numbers::ln2)) / std::numbers::sqrt2;
}

long double local_time_b(long double t, const ClockModel & clock)
{
  const long double x = t + static_cast<long double>(clock.delta_T);
  long double out = x + x * static_cast<long double>(clock.delta_u);
  if (clock.has_drift()) {
    const long double period = static_cast<long double>(clock.drift_period);
    const long double two_pi = 2.0L * std::numbers::pi_v<long double>;
    out += clock.drift_amplitude * period / two_pi * std::sin(two_pi * t / period);
  }
  return out;
}

Session generate_session(const SourceParams & p, const ClockModel & clock_b)
{
  p.validate();
  clock_b.validate();
  const double seconds = static_cast<double>(p.duration) * 1e-12;
  const double expected = (2.0 * p.r_s + p.r1 * (1.0 + std::abs(p.background_ramp)) +
                           p.r2 * (1.0 + std::abs(p.background_ramp))) * seconds;
  if (expected > 4294967296.0) {
    throw CapacityError("session would hold more than 2^32 events");
  }

  const long double span = static_cast<long double>(p.duration);
  Rng pair_rng = Rng::substream(p.seed, kPairs);
  Rng jitter_a = Rng::substream(p.seed, kJitterA);
  Rng jitter_b = Rng::substream(p.seed, kJitterB);
  Rng bg_a = Rng::substream(p.seed, kBackgroundA);
  Rng bg_b = Rng::substream(p.seed, kBackgroundB);

  const double sigma = per_side_jitter_sigma(p.tau_d);
  const auto emissions = poisson_arrivals(pair_rng, p.r_s, 0.0L, span, 0.0);

  Session s;
  s.pairs.reserve(emissions.size());
  std::vector<Picoseconds> a;
  std::vector<Picoseconds> b;
  a.reserve(emissions.size() + static_cast<std::size_t>(p.r1 * seconds * 1.1));
  b.reserve(emissions.size() + static_cast<std::size_t>(p.r2 * seconds * 1.1));
  for (const long double t : emissions) {
    const Picoseconds ta = round_to_ps(t + sigma * jitter_a.normal());
    const Picoseconds tb = round_to_ps(local_time_b(t + sigma * jitter_b.normal(), clock_b));
    a.push_back(ta);
    b.push_back(tb);
    s.pairs.push_back({round_to_ps(t), ta, tb});
  }

  for (const long double t : poisson_arrivals(bg_a, p.r1, 0.0L, span, p.background_ramp)) {
    a.push_back(round_to_ps(t));
  }
  const long double b_start = local_time_b(0.0L, clock_b);
  const long double b_span = local_time_b(span, clock_b) - b_start;
  for (const long double t : poisson_arrivals(bg_b, p.r2, b_start, b_span, p.background_ramp)) {
    b.push_back(round_to_ps(t));
  }

  s.a = TagStream::sorted(Side::A, std::move(a));
  s.b = TagStream::sorted(Side::B, std::move(b));
  return s;
}

}  // namespace pairsync::sim
