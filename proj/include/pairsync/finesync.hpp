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

#ifndef PAIRSYNC_FINESYNC_HPP_
#define PAIRSYNC_FINESYNC_HPP_

#include <cstddef>
#include <optional>
#include <vector>

#include "pairsync/estimator.hpp"
#include "pairsync/timebase.hpp"

namespace pairsync::finesync
{

struct CandidatePair
{
  std::size_t k = 0;
  Picoseconds t_a = 0;
  Picoseconds t_b = 0;  // compensated B time
  Picoseconds dt = 0;   // t_a - t_b
};

struct SparseConfig
{
  Picoseconds bin = 1'024'000;
  std::size_t n_bins = std::size_t{1} << 19;
  Picoseconds start = 0;
  /// Matched span; defaults to n_bins * bin. Must not exceed it.
  std::optional<Picoseconds> span;
  /// Caller's bound on the residual rate error. When positive, spans longer
  /// than bin / du_bound raise SpanTooLong.
  double du_bound = 0.0;
};

struct MatchResult
{
  std::vector<CandidatePair> candidates;
  std::size_t single_a = 0;
  std::size_t single_b = 0;
  std::size_t multi_a = 0;
  std::size_t multi_b = 0;
};

/// Bins both streams without wrap-around and pairs bins holding exactly one
/// tag on each side. Candidates come out sorted by k.
MatchResult match_sparse(const TagStream & a, const TagStream & b_compensated, const SparseConfig & cfg);

/// Sequential adjacency filter: a neighbouring pair whose dt values differ by
/// more than their A-time gap / n_bins is dropped as a whole. Runs `passes`
/// times over the survivors.
std::vector<CandidatePair> clean_candidates(const std::vector<CandidatePair> & pairs, std::size_t n_bins,
                                            int passes = 2);

struct FineFitResult
{
  double delta_T_corr = 0.0;  // dt at t_a = 0, ps
  double delta_u_corr = 0.0;  // dt slope
  double sigma_T = 0.0;
  double sigma_u = 0.0;
  std::size_t n_candidates_raw = 0;
  std::size_t n_candidates_clean = 0;
  double residual_sd = 0.0;
};

inline constexpr double kDefaultJitterFloor = 1000.0;  // ps

/// OLS of dt on t_a. Uncertainties use max(residual sd, jitter_floor) per
/// point. Throws TooFewCandidates below min_points.
FineFitResult fit_residual(const std::vector<CandidatePair> & pairs, double jitter_floor = kDefaultJitterFloor,
                           std::size_t min_points = 8);

/// Folds the fitted correction into the coarse model; uncertainties are
/// taken from the fit.
estimator::SyncEstimate finalize(const estimator::SyncEstimate & sync, const FineFitResult & fit);

/// Correction equivalent to applying f1 and then f2 with finalize.
FineFitResult compose(const FineFitResult & f1, const FineFitResult & f2);

}  // namespace pairsync::finesync

#endif  // PAIRSYNC_FINESYNC_HPP_
