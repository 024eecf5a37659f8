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

#ifndef PAIRSYNC_TRACKER_HPP_
#define PAIRSYNC_TRACKER_HPP_

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "pairsync/errors.hpp"
#include "pairsync/estimator.hpp"
#include "pairsync/timebase.hpp"

namespace pairsync::tracker
{

struct TrackerConfig
{
  Picoseconds tau_c = 2'000;
  Picoseconds tau_d = 1'000;
  Picoseconds delta_tau = 100;
  /// Samples per update; 0 derives it from tau_d and delta_tau.
  std::size_t n_avg = 0;
  /// Largest residual drift rate the lock is expected to ride out. A gap in
  /// accepted coincidences longer than (tau_c / 2) / max_drift_rate is fatal.
  double max_drift_rate = 1e-8;
  /// Expected dt = t_a - t_b at the start of the stream.
  double initial_center = 0.0;

  void validate() const;
  std::size_t samples_per_update() const;
};

struct TrackPoint
{
  double t_mid = 0.0;   // mean A time of the block, ps
  double offset = 0.0;  // mean dt, ps
  std::size_t n_used = 0;
  double spread = 0.0;  // sample sd of dt, ps
  Picoseconds t_last = 0;  // last A tag in the block
  bool partial = false;
};

class LockLost : public AlgorithmError
{
public:
  LockLost(const std::string & what, std::vector<TrackPoint> points, Picoseconds at)
  : AlgorithmError(what), points_(std::move(points)), at_(at)
  {
  }
  const std::vector<TrackPoint> & points() const { return points_; }
  std::optional<TrackPoint> last_point() const
  {
    return points_.empty() ? std::nullopt : std::optional<TrackPoint>(points_.back());
  }
  /// A time at which the lock was declared lost.
  Picoseconds at() const { return at_; }

private:
  std::vector<TrackPoint> points_;
  Picoseconds at_;
};

/// (tau_d / (2 sqrt(2 ln 2) delta_tau))^2 + 1, rounded to the nearest integer.
std::size_t required_samples(Picoseconds tau_d, Picoseconds delta_tau);

/// Follows the coincidence offset between A and an already compensated B.
std::vector<TrackPoint> track_compensated(const TagStream & a, const TagStream & b_compensated,
                                          const TrackerConfig & cfg);

/// Compensates B with the initial estimate, then tracks.
std::vector<TrackPoint> track(const TagStream & a, const TagStream & b, const estimator::SyncEstimate & initial,
                              const TrackerConfig & cfg);

struct LockBudget
{
  double update_period = 0.0;  // s
  double max_drift_rate = 0.0;  // fractional
};

LockBudget lock_budget(double coincidence_rate, const TrackerConfig & cfg);

}  // namespace pairsync::tracker

#endif  // PAIRSYNC_TRACKER_HPP_
