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

#ifndef PAIRSYNC_XCORR_HPP_
#define PAIRSYNC_XCORR_HPP_

#include <cstdint>
#include <optional>
#include <vector>

#include "pairsync/timebase.hpp"

namespace pairsync::xcorr
{

inline constexpr std::size_t kMaxBins = std::size_t{1} << 24;

/// Tag counts folded onto a circular array: bin = floor((t - start) / dt) mod N.
struct BinnedArray
{
  std::size_t n_bins = 0;
  Picoseconds bin_width = 0;
  Picoseconds window_start = 0;
  Picoseconds span = 0;
  std::vector<std::uint32_t> counts;

  std::uint64_t total() const;
};

/// How the acquisition span must relate to the circular period N * dt.
enum class Tiling {
  /// span is an integer multiple of N * dt: every bin sees the same exposure.
  Exact,
  /// Any span. Only meaningful when the partner array is Exact, which keeps
  /// the expected correlation baseline flat.
  Partial,
};

/// Single pass over the tags inside [t_start, t_start + t_acq).
/// Throws ResolutionError (dt < 1 ps), ShapeError (N not a power of two or
/// above 2^24) and, for Tiling::Exact, UniformityError.
BinnedArray discretize(const TagStream & s, Picoseconds bin_width, std::size_t n_bins,
                       Picoseconds t_start, Picoseconds t_acq, Tiling tiling = Tiling::Exact);

/// Circular cross-correlation c_k = sum_j a_j b_{j+k}. Bin k collects pairs
/// whose B-minus-A tag difference is near lag(k) + (b.window_start - a.window_start).
struct CorrelationArray
{
  std::size_t n_bins = 0;
  Picoseconds bin_width = 0;
  /// Width after rebinning; equals bin_width for a fresh correlation.
  Picoseconds effective_bin_width = 0;
  Picoseconds window_start_a = 0;
  Picoseconds window_start_b = 0;
  /// Centre lag of bin 0 relative to the window starts. Non-zero after rebinning.
  double lag_origin = 0.0;
  /// Offsets are reported in (wrap_center - P/2, wrap_center + P/2], P = N * dt'.
  double wrap_center = 0.0;
  std::vector<double> values;

  Picoseconds period() const { return effective_bin_width * static_cast<Picoseconds>(n_bins); }
  /// B-minus-A tag difference represented by bin k, wrapped around wrap_center.
  double offset_of(std::size_t k) const;
};

/// Forward transforms, conjugate multiply, inverse transform. With
/// suppress_low_freq = M > 0, spectral components 0..M and their mirrors are
/// zeroed first. Throws ShapeError on mismatched arrays.
CorrelationArray cross_correlate(const BinnedArray & a, const BinnedArray & b,
                                 std::size_t suppress_low_freq = 0);

/// Adjacent-sum rebinning by a power-of-two factor.
CorrelationArray rebin(const CorrelationArray & c, std::size_t factor);

struct PeakResult
{
  std::size_t k_max = 0;
  /// B-minus-A offset at the peak, ps.
  double tau_offset = 0.0;
  double peak_value = 0.0;
  double significance = 0.0;
  double miss_probability = 1.0;
  double baseline_mean = 0.0;
  double baseline_sd = 0.0;
};

/// Maximum by linear scan; baseline statistics exclude k_max and both
/// neighbours. Throws ShapeError for N < 16, DegenerateBaselineError when the
/// baseline has zero spread.
PeakResult find_peak(const CorrelationArray & c);

// --- significance bookkeeping -------------------------------------------------

/// Probability that a Gaussian baseline of N bins produces a maximum above
/// S: (N/2) erfc(S/sqrt 2), clamped to [0, 1]. Evaluated through erfc so the
/// far tail does not cancel to zero.
double miss_probability(double significance, std::size_t n_bins);

/// Per-bin tail rate eps/N = erfc(S/sqrt 2) / 2.
double tail_rate(double significance);

/// Inverse of tail_rate.
double significance_for_tail_rate(double eps_over_n);

/// Significance threshold at which the miss probability equals eps.
double significance_threshold(double eps, std::size_t n_bins);

/// Expected peak significance sqrt(r_s^2 N / (r1 r2)). Returns +infinity when
/// r1 * r2 == 0 (no background to compete with).
double predicted_significance(double r_s, double r1, double r2, double n_bins);

/// Smallest power of two N (at least 2^8) with predicted significance >= s_th.
/// Requires r_s > 0.
std::uint64_t required_bins(double r_s, double r1, double r2, double s_th);

// --- two-resolution offset search -------------------------------------------

struct CoarseFineConfig
{
  Picoseconds coarse_bin = 2'048'000;
  Picoseconds fine_bin = 2'000;
  std::size_t n_bins = std::size_t{1} << 19;
  /// Acquisition span for both sides; 0 selects n_bins * coarse_bin. Must be
  /// a multiple of n_bins * coarse_bin and of n_bins * fine_bin.
  Picoseconds acquisition = 0;
  /// Start of the A window; defaults to the earliest start both streams cover.
  std::optional<Picoseconds> start;
  /// Expected B-minus-A offset. Defaults to the difference of the streams'
  /// first tags, i.e. both sides are binned from their own origin.
  std::optional<Picoseconds> prior_offset;
  double significance_threshold = 6.0;
  std::size_t suppress_low_freq = 0;
};

struct OffsetEstimate
{
  Picoseconds delta_T = 0;
  Picoseconds resolution = 0;
  Picoseconds coarse_delta_T = 0;
  PeakResult coarse;
  PeakResult fine;
  Picoseconds window_start_a = 0;
  Picoseconds window_start_b = 0;
  Picoseconds acquisition = 0;
};

/// Offset for clocks without a rate difference. The coarse pass fixes the
/// offset modulo N * coarse_bin; the fine pass bins B shifted by the rounded
/// coarse value and resolves the residual, wrapped to +-N * fine_bin / 2.
/// Throws NoPeakError (carrying the best significance) when either pass stays
/// below the threshold.
OffsetEstimate find_offset_coarse_fine(const TagStream & a, const TagStream & b,
                                       const CoarseFineConfig & cfg = {});

/// Wrap x into (center - period/2, center + period/2].
double wrap_offset(double x, double period, double center);

/// Throws CoverageError unless the stream has tags within 1% of the span
/// of both ends of [start, start + span).
void require_coverage(const TagStream & s, Picoseconds start, Picoseconds span, const char * what);

}  // namespace pairsync::xcorr

#endif  // PAIRSYNC_XCORR_HPP_
