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

#include "pairsync/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <numbers>
#include <string>

#include "pairsync/errors.hpp"
#include "pairsync/parallel.hpp"

namespace pairsync::estimator
{

namespace
{

// One two-window pass. Round 1 runs on the raw B stream with a wide slack;
// later rounds run on compensated B with slack and rate bound taken from the
// previous round's uncertainty.
struct PassPlan
{
  Picoseconds bin = 0;
  std::size_t n_bins = 0;
  Picoseconds acquisition = 0;
  Picoseconds separation = 0;
  Picoseconds start = 0;
  Picoseconds prior = 0;
  Picoseconds slack = 0;
  double du_bound = 0.0;
  double threshold = 0.0;
  std::size_t suppress = 0;
  std::size_t reduction = 8;
};

// The B window must hold every partner of the A window for any offset within
// the slack and rate bound, and tile the circular array exactly so the
// expected baseline stays flat.
Picoseconds b_span(const PassPlan & p)
{
  const Picoseconds period = p.bin * static_cast<Picoseconds>(p.n_bins);
  const long double needed = static_cast<long double>(p.acquisition) +
                             2.0L * p.du_bound * static_cast<long double>(p.separation + p.acquisition) +
                             2.0L * static_cast<long double>(p.slack);
  const auto periods = static_cast<Picoseconds>(std::ceil(needed / static_cast<long double>(period)));
  return std::max<Picoseconds>(periods, 1) * period;
}

Picoseconds b_lead(const PassPlan & p) { return (b_span(p) - p.acquisition) / 2; }

xcorr::CorrelationArray correlate_window(const TagStream & a, const TagStream & b, const PassPlan & p,
                                         Picoseconds a_start)
{
  const Picoseconds span = b_span(p);
  // Centered by default. Any span beyond the required lag range may sit on
  // either side, so slide the window into the recorded data when it overhangs.
  const auto margin = static_cast<Picoseconds>(
    std::ceil(p.du_bound * static_cast<double>(p.separation + p.acquisition))) + p.slack;
  const Picoseconds lo = a_start + p.prior - margin;
  const Picoseconds hi = a_start + p.prior + p.acquisition + margin;
  Picoseconds b_start = a_start + p.prior - b_lead(p);
  if (!b.empty()) {
    if (b_start < b.front()) {
      b_start = std::min(b.front(), lo);
    }
    if (b_start + span > b.back()) {
      b_start = std::max(b.back() - span, hi - span);
    }
  }
  xcorr::require_coverage(a, a_start, p.acquisition, "A");
  xcorr::require_coverage(b, b_start, span, "B");
  const auto ca = xcorr::discretize(a, p.bin, p.n_bins, a_start, p.acquisition, xcorr::Tiling::Partial);
  const auto cb = xcorr::discretize(b, p.bin, p.n_bins, b_start, span, xcorr::Tiling::Exact);
  auto c = xcorr::cross_correlate(ca, cb, p.suppress);
  c.wrap_center = static_cast<double>(p.prior);
  return c;
}

xcorr::PeakResult peak_or_zero(const xcorr::CorrelationArray & c)
{
  try {
    return xcorr::find_peak(c);
  } catch (const DegenerateBaselineError &) {
    return {};  // empty arrays: no peak, significance 0
  }
}

TwoWindowOffsets run_pass(const TagStream & a, const TagStream & b, const PassPlan & p)
{
  const Picoseconds start2 = p.start + p.separation;
  xcorr::CorrelationArray c1;
  xcorr::CorrelationArray c2;
  if (max_threads() > 1) {
    auto second = std::async(std::launch::async, [&] { return correlate_window(a, b, p, start2); });
    c1 = correlate_window(a, b, p, p.start);
    c2 = second.get();
  } else {
    c1 = correlate_window(a, b, p, p.start);
    c2 = correlate_window(a, b, p, start2);
  }

  const Picoseconds cap =
    std::max<Picoseconds>(p.bin * static_cast<Picoseconds>(p.reduction),
                          static_cast<Picoseconds>(2.0 * p.du_bound * static_cast<double>(p.acquisition)));

  TwoWindowOffsets out;
  out.window1_start = p.start;
  out.window2_start = start2;
  out.acquisition = p.acquisition;
  out.separation = p.separation;
  double best = 0.0;
  for (std::size_t f = 1;; f *= 2) {
    if (p.bin * static_cast<Picoseconds>(f) > cap || p.n_bins / f < 16) {
      throw PeakNotFound("no significant correlation peak up to a bin width of " +
                           std::to_string(p.bin * static_cast<Picoseconds>(f / 2)) + " ps",
                         best, static_cast<double>(p.bin * static_cast<Picoseconds>(f / 2)));
    }
    const auto p1 = peak_or_zero(f == 1 ? c1 : xcorr::rebin(c1, f));
    const auto p2 = peak_or_zero(f == 1 ? c2 : xcorr::rebin(c2, f));
    if (f == 1) {
      out.initial_significance1 = p1.significance;
      out.initial_significance2 = p2.significance;
    }
    best = std::max(best, std::min(p1.significance, p2.significance));
    if (p1.significance >= p.threshold && p2.significance >= p.threshold) {
      out.peak1 = p1;
      out.peak2 = p2;
      out.offset1 = p1.tau_offset;
      out.offset2 = p2.tau_offset;
      out.bin = p.bin * static_cast<Picoseconds>(f);
      out.rebin_factor = f;
      return out;
    }
  }
}

PassPlan first_plan(const TagStream & a, const TagStream & b, const EstimatorConfig & cfg)
{
  if (a.empty() || b.empty()) {
    throw CoverageError("estimator needs tags on both sides");
  }
  PassPlan p;
  p.bin = cfg.initial_bin;
  p.n_bins = cfg.n_bins;
  p.acquisition = cfg.acquisition;
  p.separation = cfg.separation;
  p.prior = cfg.prior_offset.value_or(b.front() - a.front());
  p.slack = cfg.offset_max;
  p.du_bound = cfg.du_max;
  p.threshold = cfg.significance_threshold;
  p.suppress = cfg.suppress_low_freq;
  p.reduction = cfg.reduction_factor;
  p.start = cfg.start.value_or(std::max(a.front(), b.front() - p.prior + b_lead(p)));
  return p;
}

// Offsets measured at the two window centres define the residual map
// b = (1 + u) a + (offset1 - u * t_mid1).
AffineMap residual_map(const TwoWindowOffsets & w)
{
  const Rational o1 = exact_rational(w.offset1);
  const Rational o2 = exact_rational(w.offset2);
  const Rational u = (o2 - o1) / Rational(w.separation);
  const Rational t_mid = Rational(w.window1_start) + Rational(w.acquisition) / 2;
  return {1 + u, o1 - u * t_mid};
}

}  // namespace

void EstimatorConfig::validate() const
{
  if (acquisition <= 0 || separation <= acquisition) {
    throw ParameterError("separation must exceed the acquisition span");
  }
  if (reduction_factor != 4 && reduction_factor != 8) {
    throw ParameterError("reduction factor must be 4 or 8");
  }
  if (!(significance_threshold >= 3.72)) {
    throw ParameterError("significance threshold must be at least 3.72");
  }
  if (initial_bin < 1 || target_bin < 1) {
    throw ParameterError("bin widths must be at least 1 ps");
  }
  if (!(du_max > 0.0) || du_max > kMaxClockDeltaU) {
    throw ParameterError("du_max must lie in (0, 1e-3]");
  }
  if (offset_max < 0) {
    throw ParameterError("offset bound must be non-negative");
  }
  if (max_rounds == 0) {
    throw ParameterError("max_rounds must be positive");
  }
}

SyncEstimate SyncEstimate::from_model(const AffineMap & m, double sigma_T, double sigma_u)
{
  SyncEstimate s;
  s.model = m;
  s.delta_T = m.delta_T();
  s.delta_u = m.delta_u();
  s.sigma_T = sigma_T;
  s.sigma_u = sigma_u;
  return s;
}

FrequencyBudget max_tolerable_du(double r_s, double r1, double r2, double s_th, Picoseconds acquisition,
                                 Picoseconds bin)
{
  if (!(r_s > 0.0 && r1 > 0.0 && r2 > 0.0 && s_th > 0.0)) {
    throw ParameterError("rates and threshold must be positive");
  }
  FrequencyBudget out;
  out.du_max = r_s * r_s / (r1 * r2 * s_th * s_th);
  if (acquisition > 0 && bin > 0) {
    out.spread_bins = peak_spread_bins(out.du_max, acquisition, bin);
  }
  return out;
}

double peak_spread_bins(double du, Picoseconds acquisition, Picoseconds bin)
{
  return std::abs(du) * static_cast<double>(acquisition) / static_cast<double>(bin);
}

double frequency_from_offsets(double offset1, double offset2, Picoseconds separation)
{
  if (separation <= 0) {
    throw ParameterError("separation must be positive");
  }
  return (offset1 - offset2) / static_cast<double>(separation);
}

double frequency_uncertainty(Picoseconds bin, Picoseconds separation)
{
  return std::numbers::sqrt2 * static_cast<double>(bin) / static_cast<double>(separation);
}

TwoWindowOffsets estimate_offsets_two_windows(const TagStream & a, const TagStream & b,
                                              const EstimatorConfig & cfg)
{
  cfg.validate();
  return run_pass(a, b, first_plan(a, b, cfg));
}

TagStream compensate(const TagStream & b, const AffineMap & model)
{
  // t_a = d + d * w with d = t_b - offset and w = 1/scale - 1; w is small, so
  // long double keeps the product well below a picosecond of error.
  const long double offset = static_cast<long double>(model.offset());
  const long double w = static_cast<long double>(1 / model.scale() - 1);
  std::vector<Picoseconds> out;
  out.reserve(b.size());
  for (const Picoseconds t : b.tags()) {
    const long double d = static_cast<long double>(t) - offset;
    out.push_back(round_to_ps(d + d * w));
  }
  return TagStream::sorted(b.side(), std::move(out));
}

TagStream compensate(const TagStream & b, Picoseconds delta_T, double delta_u)
{
  ClockModel m;
  m.delta_T = delta_T;
  m.delta_u = delta_u;
  return compensate(b, AffineMap::from_clock(m));
}

SyncEstimate iterative_sync(const TagStream & a, const TagStream & b, const EstimatorConfig & cfg,
                            const RoundObserver & observer)
{
  cfg.validate();
  PassPlan plan = first_plan(a, b, cfg);
  AffineMap model;
  TagStream compensated;
  const TagStream * current = &b;
  std::vector<RoundDiagnostics> rounds;

  for (std::size_t round = 1; round <= cfg.max_rounds; ++round) {
    const auto pass = run_pass(a, *current, plan);
    const AffineMap residual = residual_map(pass);
    model = model.compose(residual);
    const double sigma_u = frequency_uncertainty(pass.bin, cfg.separation);

    RoundDiagnostics d;
    d.round = round;
    d.bin_initial = plan.bin;
    d.bin = pass.bin;
    d.significance1 = pass.peak1.significance;
    d.significance2 = pass.peak2.significance;
    d.initial_significance1 = pass.initial_significance1;
    d.initial_significance2 = pass.initial_significance2;
    d.offset1 = pass.offset1;
    d.offset2 = pass.offset2;
    d.delta_u_round = residual.delta_u();
    d.delta_u = model.delta_u();
    d.delta_T = model.delta_T();
    d.sigma_u = sigma_u;
    rounds.push_back(d);
    if (observer) {
      observer(d);
    }

    if (pass.bin <= cfg.target_bin) {
      auto est = SyncEstimate::from_model(model, static_cast<double>(pass.bin), sigma_u);
      est.window_start = plan.start;
      est.iterations = std::move(rounds);
      return est;
    }

    compensated = compensate(b, model);
    current = &compensated;
    plan.prior = 0;
    plan.slack = 4 * pass.bin;
    plan.du_bound = 4.0 * sigma_u;
    plan.bin = pass.bin / static_cast<Picoseconds>(cfg.reduction_factor);
    if (plan.bin < 1) {
      throw NonConvergence("bin width fell below 1 ps before reaching the target");
    }
  }
  throw NonConvergence("no convergence to the target bin width within " + std::to_string(cfg.max_rounds) +
                       " rounds");
}

}  // namespace pairsync::estimator
