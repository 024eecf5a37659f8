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

#include "pairsync/timebase.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "pairsync/errors.hpp"

namespace pairsync
{

Picoseconds round_to_ps(long double value)
{
  // 2^63 is exactly representable; anything at or beyond it does not fit.
  constexpr long double limit = 9223372036854775808.0L;
  if (!std::isfinite(value)) {
    throw OverflowError("non-finite time value");
  }
  const long double r = std::round(value);  // ties away from zero
  if (r >= limit || r < -limit) {
    throw OverflowError("time value outside the 64-bit picosecond range");
  }
  return static_cast<Picoseconds>(r);
}

std::size_t first_unsorted_index(std::span<const Picoseconds> tags)
{
  const auto it = std::is_sorted_until(tags.begin(), tags.end());
  return static_cast<std::size_t>(it - tags.begin());
}

TagStream::TagStream(Side side, std::vector<Picoseconds> tags) : side_(side), tags_(std::move(tags))
{
  const auto bad = first_unsorted_index(tags_);
  if (bad != tags_.size()) {
    throw OrderError("tags not sorted at index " + std::to_string(bad), bad);
  }
}

TagStream TagStream::sorted(Side side, std::vector<Picoseconds> tags)
{
  std::sort(tags.begin(), tags.end());
  return TagStream(side, std::move(tags));
}

std::span<const Picoseconds> TagStream::range(Picoseconds begin, Picoseconds end) const
{
  const auto lo = std::lower_bound(tags_.begin(), tags_.end(), begin);
  const auto hi = std::lower_bound(lo, tags_.end(), end);
  return {lo, hi};
}

void ClockModel::validate() const
{
  if (!(std::abs(delta_u) <= kMaxClockDeltaU)) {
    throw ParameterError("|delta_u| exceeds 1e-3");
  }
  if (!(std::abs(drift_amplitude) <= kMaxDriftAmplitude)) {
    throw ParameterError("drift amplitude exceeds 1e-6");
  }
  if (drift_amplitude != 0.0 && drift_period <= 0) {
    throw ParameterError("drift enabled without a positive period");
  }
}

namespace
{

Picoseconds checked_add(Picoseconds a, Picoseconds b)
{
  Picoseconds out{};
  if (__builtin_add_overflow(a, b, &out)) {
    throw OverflowError("time value outside the 64-bit picosecond range");
  }
  return out;
}

// round(x + s) for integer x, with ties resolved away from zero on the sum
// rather than on s alone.
Picoseconds add_rounded(Picoseconds x, long double s)
{
  const long double f = std::floor(s);
  const long double frac = s - f;
  Picoseconds step = round_to_ps(f);
  if (frac > 0.5L) {
    ++step;
  } else if (frac == 0.5L) {
    const long double total = static_cast<long double>(x) + f + 0.5L;
    if (total > 0) {
      ++step;
    }
  }
  return checked_add(x, step);
}

void require_no_drift(const ClockModel & m)
{
  if (m.has_drift()) {
    throw ParameterError("apply/invert_clock take drift-free models");
  }
}

}  // namespace

// The scale factor is split as x + x*du so the large term stays an exact
// integer and only the small product goes through floating point.
Picoseconds apply_clock(Picoseconds t, const ClockModel & m)
{
  require_no_drift(m);
  const Picoseconds x = checked_add(t, m.delta_T);
  const long double stretch = static_cast<long double>(x) * static_cast<long double>(m.delta_u);
  return add_rounded(x, stretch);
}

Picoseconds invert_clock(Picoseconds t_prime, const ClockModel & m)
{
  require_no_drift(m);
  if (m.delta_u == -1.0) {
    throw ParameterError("1 + delta_u must be non-zero");
  }
  const long double du = m.delta_u;
  const long double shrink = -static_cast<long double>(t_prime) * du / (1.0L + du);
  const Picoseconds y = checked_add(t_prime, -m.delta_T);
  return add_rounded(y, shrink);
}

}  // namespace pairsync
