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

#include "pairsync/xcorr.hpp"

#include <algorithm>
#include <bit>
#include <boost/math/special_functions/erf.hpp>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <numeric>
#include <string>

#include "pairsync/errors.hpp"
#include "pairsync/fft.hpp"

namespace pairsync::xcorr
{

std::uint64_t BinnedArray::total() const
{
  return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
}

double wrap_offset(double x, double period, double center)
{
  const double half = period / 2.0;
  double d = std::fmod(x - center, period);
  if (d > half) {
    d -= period;
  } else if (d <= -half) {
    d += period;
  }
  return center + d;
}

double CorrelationArray::offset_of(std::size_t k) const
{
  const double raw = static_cast<double>(k) * static_cast<double>(effective_bin_width) + lag_origin +
                     static_cast<double>(window_start_b - window_start_a);
  return wrap_offset(raw, static_cast<double>(period()), wrap_center);
}

void require_coverage(const TagStream & s, Picoseconds start, Picoseconds span, const char * what)
{
  const Picoseconds tol = span / 100;
  if (s.empty() || s.front() > start + tol || s.back() < start + span - tol) {
    throw CoverageError(std::string(what) + " window is not covered by recorded tags");
  }
}

BinnedArray discretize(const TagStream & s, Picoseconds bin_width, std::size_t n_bins,
                       Picoseconds t_start, Picoseconds t_acq, Tiling tiling)
{
  if (bin_width < 1) {
    throw ResolutionError("bin width below 1 ps");
  }
  if (!std::has_single_bit(n_bins) || n_bins > kMaxBins) {
    throw ShapeError("bin count must be a power of two no larger than 2^24");
  }
  if (t_acq <= 0) {
    throw ParameterError("acquisition span must be positive");
  }
  const Picoseconds period = bin_width * static_cast<Picoseconds>(n_bins);
  if (tiling == Tiling::Exact && t_acq % period != 0) {
    throw UniformityError("acquisition span is not an integer multiple of N * dt");
  }

  BinnedArray out;
  out.n_bins = n_bins;
  out.bin_width = bin_width;
  out.window_start = t_start;
  out.span = t_acq;
  out.counts.assign(n_bins, 0);
  const std::uint64_t mask = n_bins - 1;
  for (const Picoseconds t : s.range(t_start, t_start + t_acq)) {
    const auto idx = static_cast<std::uint64_t>((t - t_start) / bin_width) & mask;
    ++out.counts[idx];
  }
  return out;
}

CorrelationArray cross_correlate(const BinnedArray & a, const BinnedArray & b, std::size_t suppress_low_freq)
{
  if (a.n_bins != b.n_bins || a.bin_width != b.bin_width || a.counts.size() != b.counts.size()) {
    throw ShapeError("correlated arrays differ in size or bin width");
  }
  const std::size_t n = a.n_bins;
  if (suppress_low_freq >= n / 2) {
    throw ShapeError("low-frequency suppression removes the whole spectrum");
  }
  std::vector<double> xa(a.counts.begin(), a.counts.end());
  std::vector<double> xb(b.counts.begin(), b.counts.end());
  const auto fa = fft::forward(xa);
  auto fb = fft::forward(xb);
  for (std::size_t i = 0; i < fb.size(); ++i) {
    fb[i] *= std::conj(fa[i]);
  }
  if (suppress_low_freq > 0) {
    // The half spectrum holds each mirror pair once, so this also clears N-M..N-1.
    std::fill(fb.begin(), fb.begin() + static_cast<std::ptrdiff_t>(suppress_low_freq + 1), 0.0);
  }

  CorrelationArray c;
  c.n_bins = n;
  c.bin_width = a.bin_width;
  c.effective_bin_width = a.bin_width;
  c.window_start_a = a.window_start;
  c.window_start_b = b.window_start;
  c.values = fft::inverse(fb, n);
  return c;
}

CorrelationArray rebin(const CorrelationArray & c, std::size_t factor)
{
  if (factor == 0 || !std::has_single_bit(factor)) {
    throw ShapeError("rebin factor must be a power of two");
  }
  if (factor > c.n_bins) {
    throw ShapeError("rebin factor exceeds the array length");
  }
  CorrelationArray out = c;
  out.n_bins = c.n_bins / factor;
  out.effective_bin_width = c.effective_bin_width * static_cast<Picoseconds>(factor);
  out.lag_origin = c.lag_origin + 0.5 * static_cast<double>(factor - 1) * static_cast<double>(c.effective_bin_width);
  out.values.assign(out.n_bins, 0.0);
  for (std::size_t m = 0; m < out.n_bins; ++m) {
    double sum = 0.0;
    for (std::size_t j = 0; j < factor; ++j) {
      sum += c.values[m * factor + j];
    }
    out.values[m] = sum;
  }
  return out;
}

PeakResult find_peak(const CorrelationArray & c)
{
  const std::size_t n = c.values.size();
  if (n < 16) {
    throw ShapeError("peak search needs at least 16 bins");
  }
  const auto it = std::max_element(c.values.begin(), c.values.end());
  const std::size_t k = static_cast<std::size_t>(it - c.values.begin());
  const std::size_t lo = (k + n - 1) % n;
  const std::size_t hi = (k + 1) % n;

  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (i != k && i != lo && i != hi) {
      sum += c.values[i];
    }
  }
  const double count = static_cast<double>(n - 3);
  const double mean = sum / count;
  double sq = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (i != k && i != lo && i != hi) {
      const double d = c.values[i] - mean;
      sq += d * d;
    }
  }
  const double sd = std::sqrt(sq / count);
  if (!(sd > 0.0)) {
    throw DegenerateBaselineError("correlation baseline has zero spread");
  }

  PeakResult r;
  r.k_max = k;
  r.tau_offset = c.offset_of(k);
  r.peak_value = *it;
  r.baseline_mean = mean;
  r.baseline_sd = sd;
  r.significance = (*it - mean) / sd;
  r.miss_probability = miss_probability(r.significance, n);
  return r;
}

double tail_rate(double significance)
{
  return 0.5 * std::erfc(significance / std::numbers::sqrt2);
}

double miss_probability(double significance, std::size_t n_bins)
{
  return std::clamp(static_cast<double>(n_bins) * tail_rate(significance), 0.0, 1.0);
}

double significance_for_tail_rate(double eps_over_n)
{
  if (!(eps_over_n > 0.0 && eps_over_n < 0.5)) {
    throw ParameterError("tail rate must lie in (0, 0.5)");
  }
  return std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * eps_over_n);
}

double significance_threshold(double eps, std::size_t n_bins)
{
  return significance_for_tail_rate(eps / static_cast<double>(n_bins));
}

double predicted_significance(double r_s, double r1, double r2, double n_bins)
{
  if (r1 * r2 == 0.0) {
    return std::numeric_limits<double>::infinity();
  }
  return std::sqrt(r_s * r_s * n_bins / (r1 * r2));
}

std::uint64_t required_bins(double r_s, double r1, double r2, double s_th)
{
  if (!(r_s > 0.0)) {
    throw ParameterError("required_bins needs a positive signal rate");
  }
  std::uint64_t n = 256;
  while (predicted_significance(r_s, r1, r2, static_cast<double>(n)) < s_th) {
    n <<= 1;
  }
  return n;
}

OffsetEstimate find_offset_coarse_fine(const TagStream & a, const TagStream & b, const CoarseFineConfig & cfg)
{
  if (a.empty() || b.empty()) {
    throw CoverageError("offset search needs tags on both sides");
  }
  const Picoseconds coarse_period = cfg.coarse_bin * static_cast<Picoseconds>(cfg.n_bins);
  const Picoseconds span = cfg.acquisition > 0 ? cfg.acquisition : coarse_period;
  const Picoseconds prior = cfg.prior_offset.value_or(b.front() - a.front());
  const Picoseconds start = cfg.start.value_or(std::max(a.front(), b.front() - prior));

  require_coverage(a, start, span, "A");
  require_coverage(b, start + prior, span, "B");

  OffsetEstimate est;
  est.window_start_a = start;
  est.window_start_b = start + prior;
  est.acquisition = span;

  const auto ca = discretize(a, cfg.coarse_bin, cfg.n_bins, start, span);
  const auto cb = discretize(b, cfg.coarse_bin, cfg.n_bins, start + prior, span);
  auto coarse = cross_correlate(ca, cb, cfg.suppress_low_freq);
  coarse.wrap_center = static_cast<double>(prior);
  est.coarse = find_peak(coarse);
  if (est.coarse.significance < cfg.significance_threshold) {
    throw NoPeakError("coarse pass below significance threshold", est.coarse.significance);
  }
  est.coarse_delta_T = round_to_ps(est.coarse.tau_offset);

  std::vector<Picoseconds> shifted(b.tags().begin(), b.tags().end());
  for (auto & t : shifted) {
    t -= est.coarse_delta_T;
  }
  const TagStream b_shifted(b.side(), std::move(shifted));
  const auto fa = discretize(a, cfg.fine_bin, cfg.n_bins, start, span);
  const auto fb = discretize(b_shifted, cfg.fine_bin, cfg.n_bins, start, span);
  const auto fine = cross_correlate(fa, fb, cfg.suppress_low_freq);
  est.fine = find_peak(fine);
  if (est.fine.significance < cfg.significance_threshold) {
    throw NoPeakError("fine pass below significance threshold",
                      std::max(est.fine.significance, est.coarse.significance));
  }
  est.delta_T = est.coarse_delta_T + round_to_ps(est.fine.tau_offset);
  est.resolution = cfg.fine_bin;
  return est;
}

}  // namespace pairsync::xcorr
