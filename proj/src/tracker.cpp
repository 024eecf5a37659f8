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

#include "pairsync/tracker.hpp"

#include <cmath>
#include <numbers>

namespace pairsync::tracker
{

namespace
{

TrackPoint close_block(const std::vector<Picoseconds> & ta, const std::vector<Picoseconds> & dt, bool partial)
{
  const auto n = static_cast<long double>(dt.size());
  long double mt = 0.0L;
  long double md = 0.0L;
  for (std::size_t i = 0; i < dt.size(); ++i) {
    mt += static_cast<long double>(ta[i]);
    md += static_cast<long double>(dt[i]);
  }
  mt /= n;
  md /= n;
  long double ss = 0.0L;
  for (const Picoseconds d : dt) {
    ss += (static_cast<long double>(d) - md) * (static_cast<long double>(d) - md);
  }
  TrackPoint p;
  p.t_mid = static_cast<double>(mt);
  p.offset = static_cast<double>(md);
  p.n_used = dt.size();
  p.spread = dt.size() > 1 ? static_cast<double>(std::sqrt(ss / (n - 1))) : 0.0;
  p.t_last = ta.back();
  p.partial = partial;
  return p;
}

}  // namespace

void TrackerConfig::validate() const
{
  if (tau_d <= 0 || tau_c <= tau_d) {
    throw ParameterError("coincidence window must exceed the jitter FWHM");
  }
  if (delta_tau <= 0) {
    throw ParameterError("delta_tau must be positive");
  }
  if (n_avg == 1) {
    throw ParameterError("n_avg must be at least 2");
  }
  if (!(max_drift_rate > 0.0)) {
    throw ParameterError("max_drift_rate must be positive");
  }
}

std::size_t TrackerConfig::samples_per_update() const
{
  return n_avg > 0 ? n_avg : required_samples(tau_d, delta_tau);
}

std::size_t required_samples(Picoseconds tau_d, Picoseconds delta_tau)
{
  if (delta_tau <= 0 || tau_d < 0) {
    throw ParameterError("delta_tau must be positive and tau_d non-negative");
  }
  const double sigma = static_cast<double>(tau_d) / (2.0 * std::sqrt(2.0 * std::numbers::ln2));
  const double ratio = sigma / static_cast<double>(delta_tau);
  return static_cast<std::size_t>(std::llround(ratio * ratio + 1.0));
}

std::vector<TrackPoint> track_compensated(const TagStream & a, const TagStream & b, const TrackerConfig & cfg)
{
  cfg.validate();
  const std::size_t n_avg = cfg.samples_per_update();
  const double half = static_cast<double>(cfg.tau_c) / 2.0;
  const auto max_gap = static_cast<long double>(half) / cfg.max_drift_rate;

  const auto bt = b.tags();
  std::vector<char> used(bt.size(), 0);
  std::vector<TrackPoint> points;
  std::vector<Picoseconds> block_ta;
  std::vector<Picoseconds> block_dt;
  block_ta.reserve(n_avg);
  block_dt.reserve(n_avg);

  double center = cfg.initial_center;
  std::size_t j = 0;
  std::optional<Picoseconds> last_accept;
  for (const Picoseconds ta : a.tags()) {
    const Picoseconds since = ta - last_accept.value_or(a.front());
    if (static_cast<long double>(since) > max_gap) {
      throw LockLost("no coincidence inside the window for " + std::to_string(since) + " ps", std::move(points),
                     ta);
    }
    // dt = ta - tb, so the window in B time is ta - center -/+ half.
    const double lo = static_cast<double>(ta) - center - half;
    const double hi = static_cast<double>(ta) - center + half;
    while (j < bt.size() && (used[j] || static_cast<double>(bt[j]) < lo)) {
      ++j;
    }
    std::size_t best = bt.size();
    double best_dev = 0.0;
    for (std::size_t k = j; k < bt.size() && static_cast<double>(bt[k]) <= hi; ++k) {
      if (used[k]) {
        continue;
      }
      const double dev = std::abs(static_cast<double>(ta - bt[k]) - center);
      if (best == bt.size() || dev < best_dev) {
        best = k;
        best_dev = dev;
      }
    }
    if (best == bt.size()) {
      continue;
    }
    used[best] = 1;
    last_accept = ta;
    block_ta.push_back(ta);
    block_dt.push_back(ta - bt[best]);
    if (block_dt.size() == n_avg) {
      points.push_back(close_block(block_ta, block_dt, false));
      center = points.back().offset;
      block_ta.clear();
      block_dt.clear();
    }
  }
  if (block_dt.size() >= 2) {
    points.push_back(close_block(block_ta, block_dt, true));
  }
  return points;
}

std::vector<TrackPoint> track(const TagStream & a, const TagStream & b, const estimator::SyncEstimate & initial,
                              const TrackerConfig & cfg)
{
  return track_compensated(a, estimator::compensate(b, initial.model), cfg);
}

LockBudget lock_budget(double coincidence_rate, const TrackerConfig & cfg)
{
  if (!(coincidence_rate > 0.0)) {
    throw ParameterError("coincidence rate must be positive");
  }
  LockBudget out;
  out.update_period = static_cast<double>(cfg.samples_per_update()) / coincidence_rate;
  const double margin_s = ps_to_seconds(cfg.tau_c / 2 - cfg.delta_tau);
  out.max_drift_rate = margin_s / out.update_period;
  return out;
}

}  // namespace pairsync::tracker
