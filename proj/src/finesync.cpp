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

#include "pairsync/finesync.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <string>

#include "pairsync/errors.hpp"

namespace pairsync::finesync
{

namespace
{

// Per-bin occupancy over [start, start + span): count and the first tag.
struct Occupancy
{
  std::vector<std::uint8_t> count;  // saturates at 2
  std::vector<Picoseconds> tag;
};

Occupancy occupy(const TagStream & s, Picoseconds start, Picoseconds span, Picoseconds bin, std::size_t n)
{
  Occupancy o{std::vector<std::uint8_t>(n, 0), std::vector<Picoseconds>(n, 0)};
  const auto first = std::lower_bound(s.tags().begin(), s.tags().end(), start);
  const auto last = std::lower_bound(first, s.tags().end(), start + span);
  for (auto it = first; it != last; ++it) {
    const auto k = static_cast<std::size_t>((*it - start) / bin);
    if (o.count[k] == 0) {
      o.tag[k] = *it;
    }
    if (o.count[k] < 2) {
      ++o.count[k];
    }
  }
  return o;
}

std::vector<CandidatePair> clean_once(const std::vector<CandidatePair> & p, std::size_t n_bins)
{
  std::vector<CandidatePair> out;
  out.reserve(p.size());
  const auto n = static_cast<long double>(n_bins);
  std::size_t i = 0;
  while (i + 1 < p.size()) {
    const long double limit = static_cast<long double>(p[i + 1].t_a - p[i].t_a) / n;
    if (static_cast<long double>(std::llabs(p[i + 1].dt - p[i].dt)) > limit) {
      i += 2;
    } else {
      out.push_back(p[i]);
      ++i;
    }
  }
  if (i + 1 == p.size()) {
    out.push_back(p[i]);
  }
  return out;
}

}  // namespace

MatchResult match_sparse(const TagStream & a, const TagStream & b_compensated, const SparseConfig & cfg)
{
  if (cfg.bin < 1 || cfg.n_bins == 0) {
    throw ParameterError("sparse matching needs a positive bin width and bin count");
  }
  const Picoseconds full = cfg.bin * static_cast<Picoseconds>(cfg.n_bins);
  const Picoseconds span = cfg.span.value_or(full);
  if (span <= 0 || span > full) {
    throw ParameterError("sparse span must lie in (0, n_bins * bin]");
  }
  if (cfg.du_bound > 0.0 &&
      static_cast<long double>(span) > static_cast<long double>(cfg.bin) / cfg.du_bound) {
    throw SpanTooLong("span " + std::to_string(span) + " ps exceeds bin / du_bound");
  }
  const auto n = static_cast<std::size_t>((span + cfg.bin - 1) / cfg.bin);
  const Occupancy oa = occupy(a, cfg.start, span, cfg.bin, n);
  const Occupancy ob = occupy(b_compensated, cfg.start, span, cfg.bin, n);

  MatchResult r;
  for (std::size_t k = 0; k < n; ++k) {
    r.single_a += oa.count[k] == 1;
    r.single_b += ob.count[k] == 1;
    r.multi_a += oa.count[k] > 1;
    r.multi_b += ob.count[k] > 1;
    if (oa.count[k] == 1 && ob.count[k] == 1) {
      r.candidates.push_back({k, oa.tag[k], ob.tag[k], oa.tag[k] - ob.tag[k]});
    }
  }
  return r;
}

std::vector<CandidatePair> clean_candidates(const std::vector<CandidatePair> & pairs, std::size_t n_bins,
                                            int passes)
{
  if (n_bins == 0) {
    throw ParameterError("n_bins must be positive");
  }
  std::vector<CandidatePair> out = pairs;
  for (int pass = 0; pass < passes; ++pass) {
    out = clean_once(out, n_bins);
  }
  return out;
}

FineFitResult fit_residual(const std::vector<CandidatePair> & pairs, double jitter_floor, std::size_t min_points)
{
  const std::size_t n = pairs.size();
  if (n < std::max<std::size_t>(min_points, 2)) {
    throw TooFewCandidates("only " + std::to_string(n) + " candidates for the residual fit", n);
  }
  long double mt = 0.0L;
  long double md = 0.0L;
  for (const auto & p : pairs) {
    mt += static_cast<long double>(p.t_a);
    md += static_cast<long double>(p.dt);
  }
  mt /= static_cast<long double>(n);
  md /= static_cast<long double>(n);
  long double sxx = 0.0L;
  long double sxy = 0.0L;
  for (const auto & p : pairs) {
    const long double x = static_cast<long double>(p.t_a) - mt;
    sxx += x * x;
    sxy += x * (static_cast<long double>(p.dt) - md);
  }
  if (!(sxx > 0.0L)) {
    throw TooFewCandidates("candidates share a single A time", n);
  }
  const long double slope = sxy / sxx;
  const long double intercept = md - slope * mt;

  long double ss = 0.0L;
  for (const auto & p : pairs) {
    const long double e = static_cast<long double>(p.dt) - intercept - slope * static_cast<long double>(p.t_a);
    ss += e * e;
  }
  const double residual_sd = n > 2 ? static_cast<double>(std::sqrt(ss / static_cast<long double>(n - 2))) : 0.0;
  const long double sigma = std::max<long double>(residual_sd, jitter_floor);

  FineFitResult f;
  f.delta_T_corr = static_cast<double>(intercept);
  f.delta_u_corr = static_cast<double>(slope);
  f.sigma_u = static_cast<double>(sigma / std::sqrt(sxx));
  f.sigma_T = static_cast<double>(sigma * std::sqrt(1.0L / static_cast<long double>(n) + mt * mt / sxx));
  f.n_candidates_raw = n;
  f.n_candidates_clean = n;
  f.residual_sd = residual_sd;
  return f;
}

estimator::SyncEstimate finalize(const estimator::SyncEstimate & sync, const FineFitResult & fit)
{
  // Compensated B satisfies b~ = (1 - u') a - T'; fold that into the model.
  const AffineMap correction(1 - exact_rational(fit.delta_u_corr), -exact_rational(fit.delta_T_corr));
  auto out = estimator::SyncEstimate::from_model(sync.model.compose(correction), fit.sigma_T, fit.sigma_u);
  out.window_start = sync.window_start;
  out.iterations = sync.iterations;
  return out;
}

FineFitResult compose(const FineFitResult & f1, const FineFitResult & f2)
{
  FineFitResult f = f2;
  f.delta_u_corr = f1.delta_u_corr + f2.delta_u_corr - f1.delta_u_corr * f2.delta_u_corr;
  f.delta_T_corr = f1.delta_T_corr + (1.0 - f1.delta_u_corr) * f2.delta_T_corr;
  return f;
}

}  // namespace pairsync::finesync
