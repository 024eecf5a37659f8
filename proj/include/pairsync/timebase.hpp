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

#ifndef PAIRSYNC_TIMEBASE_HPP_
#define PAIRSYNC_TIMEBASE_HPP_

#include <cstdint>
#include <span>
#include <vector>

namespace pairsync
{

/// Time tag in integer picoseconds since the session origin.
using Picoseconds = std::int64_t;

inline constexpr Picoseconds kPsPerNs = 1'000;
inline constexpr Picoseconds kPsPerUs = 1'000'000;
inline constexpr Picoseconds kPsPerMs = 1'000'000'000;
inline constexpr Picoseconds kPsPerSecond = 1'000'000'000'000;

constexpr double ps_to_seconds(Picoseconds t) { return static_cast<double>(t) * 1e-12; }
constexpr double ps_to_ns(double t) { return t * 1e-3; }

/// Round to nearest integer, ties away from zero. Throws OverflowError when
/// the value does not fit in 64 signed bits.
Picoseconds round_to_ps(long double value);

enum class Side : std::uint8_t { A = 0x41, B = 0x42 };

/// Sorted photodetection times for one side. Duplicates allowed.
class TagStream
{
public:
  TagStream() = default;

  /// Validates sortedness; throws OrderError naming the first offending index.
  TagStream(Side side, std::vector<Picoseconds> tags);

  /// Sorts the tags first. For producers (simulator, compensation) whose
  /// output is unordered by construction.
  static TagStream sorted(Side side, std::vector<Picoseconds> tags);

  Side side() const { return side_; }
  std::span<const Picoseconds> tags() const { return tags_; }
  std::size_t size() const { return tags_.size(); }
  bool empty() const { return tags_.empty(); }
  Picoseconds front() const { return tags_.front(); }
  Picoseconds back() const { return tags_.back(); }

  /// Tags in [begin, end).
  std::span<const Picoseconds> range(Picoseconds begin, Picoseconds end) const;

  friend bool operator==(const TagStream &, const TagStream &) = default;

private:
  Side side_ = Side::A;
  std::vector<Picoseconds> tags_;
};

/// Index of the first tag that breaks non-decreasing order, or size() when sorted.
std::size_t first_unsorted_index(std::span<const Picoseconds> tags);

/// Clock error of side B relative to side A: a pair detected at A time t is
/// stamped on B at t' = (t + delta_T) * (1 + delta_u).
struct ClockModel
{
  Picoseconds delta_T = 0;
  double delta_u = 0.0;
  /// Fractional amplitude of a sinusoidal rate modulation. Only honoured by
  /// the simulator; apply_clock/invert_clock require it to be zero.
  double drift_amplitude = 0.0;
  Picoseconds drift_period = 0;

  bool has_drift() const { return drift_amplitude != 0.0; }
  /// Throws ParameterError when |delta_u| > 1e-3 or the drift term is out of range.
  void validate() const;

  friend bool operator==(const ClockModel &, const ClockModel &) = default;
};

inline constexpr double kMaxClockDeltaU = 1e-3;
inline constexpr double kMaxDriftAmplitude = 1e-6;

/// (t + delta_T) * (1 + delta_u), rounded to the nearest picosecond.
Picoseconds apply_clock(Picoseconds t, const ClockModel & m);

/// t' / (1 + delta_u) - delta_T, rounded to the nearest picosecond.
Picoseconds invert_clock(Picoseconds t_prime, const ClockModel & m);

}  // namespace pairsync

#endif  // PAIRSYNC_TIMEBASE_HPP_
