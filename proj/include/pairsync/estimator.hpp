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

#ifndef PAIRSYNC_ESTIMATOR_HPP_
#define PAIRSYNC_ESTIMATOR_HPP_

#include <functional>
#include <optional>
#include <vector>

#include "pairsync/affine.hpp"
#include "pairsync/timebase.hpp"
#include "pairsync/xcorr.hpp"

namespace pairsync::estimator
{

struct EstimatorConfig
{
  /// Length of each A acquisition window (T_a).
  Picoseconds acquisition = 268'435'456'000;  // 2^28 ns
  /// Distance between the two window starts (T_s).
  Picoseconds separation = 1'073'741'824'000;  // 2^30 ns
  Picoseconds initial_bin = 2'048'000;
  std::size_t n_bins = std::size_t{1} << 19;
  double significance_threshold = 6.0;
  /// Prior bound on |delta_u|.
  double du_max = 1e-4;
  /// Prior bound on the distance between the true offset and prior_offset.
  Picoseconds offset_max = 400'000'000'000;
  /// Per-round bin width divisor, 4 or 8.
  std::size_t reduction_factor = 8;
  /// Rounds stop once the converged bin width is at or below this.
  Picoseconds target_bin = 1'024'000;
  std::size_t suppress_low_freq = 20;
  std::size_t max_rounds = 12;
  /// First A window start; defaults to the earliest start the data covers.
  std::optional<Picoseconds> start;
  /// Expected B-minus-A offset; defaults to the difference of first tags.
  std::optional<Picoseconds> prior_offset;

  /// Throws ParameterError: T_s > T_a, reduction in {4, 8}, threshold >= 3.72.
  void validate() const;
};

/// Measured offsets of one pass over the two windows.
struct TwoWindowOffsets
{
  /// B-minus-A offsets at the peaks, ps.
  double offset1 = 0.0;
  double offset2 = 0.0;
  /// Converged effective bin width shared by both windows.
  Picoseconds bin = 0;
  Picoseconds window1_start = 0;
  Picoseconds window2_start = 0;
  Picoseconds acquisition = 0;
  Picoseconds separation = 0;
  xcorr::PeakResult peak1;
  xcorr::PeakResult peak2;
  /// Significance at the unrebinned resolution.
  double initial_significance1 = 0.0;
  double initial_significance2 = 0.0;
  std::size_t rebin_factor = 1;
};

struct RoundDiagnostics
{
  std::size_t round = 0;
  Picoseconds bin_initial = 0;
  Picoseconds bin = 0;
  double significance1 = 0.0;
  double significance2 = 0.0;
  double initial_significance1 = 0.0;
  double initial_significance2 = 0.0;
  double offset1 = 0.0;
  double offset2 = 0.0;
  /// Residual rate correction measured this round (model convention).
  double delta_u_round = 0.0;
  /// Accumulated estimate after this round.
  double delta_u = 0.0;
  double delta_T = 0.0;
  double sigma_u = 0.0;
};

struct SyncEstimate
{
  /// Exact A-to-B map; delta_T/delta_u below are its rounded views.
  AffineMap model;
  double delta_T = 0.0;
  double sigma_T = 0.0;
  double delta_u = 0.0;
  double sigma_u = 0.0;
  /// Start of the first A window used by the correlation rounds.
  Picoseconds window_start = 0;
  std::vector<RoundDiagnostics> iterations;

  static SyncEstimate from_model(const AffineMap & m, double sigma_T, double sigma_u);
};

struct FrequencyBudget
{
  double du_max = 0.0;
  /// Bins a peak spreads over at du_max for the given window and bin width.
  double spread_bins = 0.0;
};

/// Largest rate difference for which rebinning can still lift the peak over
/// s_th: r_s^2 / (r1 r2 s_th^2).
FrequencyBudget max_tolerable_du(double r_s, double r1, double r2, double s_th,
                                 Picoseconds acquisition = 0, Picoseconds bin = 0);

/// Bins a peak spreads over: du * T_a / dt.
double peak_spread_bins(double du, Picoseconds acquisition, Picoseconds bin);

/// Rate difference implied by two offsets measured a separation apart,
/// (first - second) / separation: positive when the offset shrinks.
double frequency_from_offsets(double offset1, double offset2, Picoseconds separation);

/// sqrt(2) * bin / separation.
double frequency_uncertainty(Picoseconds bin, Picoseconds separation);

/// Correlates both windows against the raw B stream, doubling the bin width
/// until both peaks pass the threshold. Throws PeakNotFound at the width cap.
TwoWindowOffsets estimate_offsets_two_windows(const TagStream & a, const TagStream & b,
                                              const EstimatorConfig & cfg);

/// Maps B tags into A time with the estimated clock, t = t' / (1 + du) - dT,
/// and returns them sorted. With the true parameters pairs differ by jitter only.
TagStream compensate(const TagStream & b, Picoseconds delta_T, double delta_u);
TagStream compensate(const TagStream & b, const AffineMap & model);

using RoundObserver = std::function<void(const RoundDiagnostics &)>;

/// Two-window estimate, compensate, shrink the bin width, repeat until the
/// converged width reaches cfg.target_bin. Throws NonConvergence after
/// cfg.max_rounds and propagates PeakNotFound. The observer sees every
/// completed round, including those before a failure.
SyncEstimate iterative_sync(const TagStream & a, const TagStream & b, const EstimatorConfig & cfg,
                            const RoundObserver & observer = {});

}  // namespace pairsync::estimator

#endif  // PAIRSYNC_ESTIMATOR_HPP_
