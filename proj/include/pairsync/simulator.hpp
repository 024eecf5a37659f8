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

#ifndef PAIRSYNC_SIMULATOR_HPP_
#define PAIRSYNC_SIMULATOR_HPP_

#include <cstdint>
#include <vector>

#include "pairsync/timebase.hpp"

namespace pairsync::sim
{

/// Rates are counts per second. r1 and r2 are background-only: the singles
/// rate on side A is r_s + r1.
struct SourceParams
{
  double r_s = 0.0;
  double r1 = 0.0;
  double r2 = 0.0;
  /// FWHM of the A-B coincidence time difference.
  Picoseconds tau_d = 1'000;
  Picoseconds duration = kPsPerSecond;
  std::uint64_t seed = 0;
  /// Optional linear ramp of both background rates across the session:
  /// rate(t) = r * (1 + ramp * (2 t / T - 1)), ramp in [-1, 1].
  double background_ramp = 0.0;

  void validate() const;
};

inline constexpr double kMaxRate = 1e7;

/// Ground-truth pairing kept for tests; never written to tag files.
struct TruePair
{
  Picoseconds emitted;  // true (side A) time before jitter
  Picoseconds t_a;
  Picoseconds t_b;
};

struct Session
{
  TagStream a;
  TagStream b;
  std::vector<TruePair> pairs;
};

/// Per-side Gaussian jitter sigma such that the A-B difference has FWHM tau_d.
double per_side_jitter_sigma(Picoseconds tau_d);

/// Side-B local time for a true time t, including the sinusoidal drift term
/// (A P / 2 pi) sin(2 pi t / P) when the model enables it.
long double local_time_b(long double t, const ClockModel & clock);

/// Deterministic in (params, clock). Throws ParameterError on invalid
/// inputs and CapacityError when more than 2^32 events are expected.
Session generate_session(const SourceParams & p, const ClockModel & clock_b);

}  // namespace pairsync::sim

#endif  // PAIRSYNC_SIMULATOR_HPP_
