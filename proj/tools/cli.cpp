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

#include "cli.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <memory>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "pairsync/errors.hpp"
#include "pairsync/estimator.hpp"
#include "pairsync/finesync.hpp"
#include "pairsync/simulator.hpp"
#include "pairsync/tagio.hpp"
#include "pairsync/tracker.hpp"
#include "pairsync/xcorr.hpp"

namespace pairsync::cli
{

namespace
{

namespace fs = std::filesystem;
using json = nlohmann::json;
using Clock = std::chrono::steady_clock;

Picoseconds ns_to_ps(double ns) { return static_cast<Picoseconds>(std::llround(ns * 1e3)); }

double elapsed_ms(Clock::time_point since)
{
  return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

std::string sha256_file(const fs::path & path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open " + path.string());
  }
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) {
    throw IoError("sha256 unavailable");
  }
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (in.gcount() > 0) {
      EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
    }
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), md, &len);
  std::string hex;
  char byte[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(byte, sizeof(byte), "%02x", md[i]);
    hex += byte;
  }
  return hex;
}

void write_text(const std::string & path, const std::string & text, std::ostream & out)
{
  if (path.empty() || path == "-") {
    out << text;
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f || !(f << text) || !f.flush()) {
    throw IoError("cannot write " + path);
  }
}

json input_json(const std::string & path, const TagStream & s)
{
  return {{"path", path}, {"sha256", sha256_file(path)}, {"tags", s.size()}};
}

json peak_json(const xcorr::PeakResult & p)
{
  return {{"k_max", p.k_max},
          {"offset_ns", p.tau_offset * 1e-3},
          {"peak_value", p.peak_value},
          {"significance", p.significance},
          {"miss_probability", p.miss_probability},
          {"baseline_mean", p.baseline_mean},
          {"baseline_sd", p.baseline_sd}};
}

json round_json(const estimator::RoundDiagnostics & d)
{
  return {{"round", d.round},
          {"bin_initial_ns", static_cast<double>(d.bin_initial) * 1e-3},
          {"bin_ns", static_cast<double>(d.bin) * 1e-3},
          {"significance", {d.significance1, d.significance2}},
          {"initial_significance", {d.initial_significance1, d.initial_significance2}},
          {"offset_ns", {d.offset1 * 1e-3, d.offset2 * 1e-3}},
          {"delta_u_round", d.delta_u_round},
          {"delta_u", d.delta_u},
          {"sigma_u", d.sigma_u},
          {"delta_T_ns", d.delta_T * 1e-3},
          {"sigma_T_ns", static_cast<double>(d.bin) * 1e-3}};
}

json result_json(double delta_T_ps, double sigma_T_ps, double delta_u, double sigma_u)
{
  return {{"delta_T_ps", std::llround(delta_T_ps)},
          {"delta_T_ns", delta_T_ps * 1e-3},
          {"sigma_T_ns", sigma_T_ps * 1e-3},
          {"delta_u", delta_u},
          {"sigma_u", sigma_u}};
}

json error_json(const std::exception & e)
{
  json j = {{"message", e.what()}};
  if (const auto * p = dynamic_cast<const PeakNotFound *>(&e)) {
    j["type"] = "PeakNotFound";
    j["best_significance"] = p->best_significance();
    j["last_bin_width_ns"] = p->last_bin_width_ps() * 1e-3;
  } else if (const auto * n = dynamic_cast<const NoPeakError *>(&e)) {
    j["type"] = "NoPeakError";
    j["best_significance"] = n->best_significance();
  } else if (const auto * t = dynamic_cast<const TooFewCandidates *>(&e)) {
    j["type"] = "TooFewCandidates";
    j["count"] = t->count();
  } else if (dynamic_cast<const NonConvergence *>(&e) != nullptr) {
    j["type"] = "NonConvergence";
  } else if (dynamic_cast<const SpanTooLong *>(&e) != nullptr) {
    j["type"] = "SpanTooLong";
  } else if (dynamic_cast<const CoverageError *>(&e) != nullptr) {
    j["type"] = "CoverageError";
  } else {
    j["type"] = "Error";
  }
  return j;
}

// Maps library exceptions onto the exit-code contract.
int exit_code_for(const std::exception & e)
{
  if (dynamic_cast<const ParameterError *>(&e) != nullptr || dynamic_cast<const UniformityError *>(&e) != nullptr ||
      dynamic_cast<const ShapeError *>(&e) != nullptr || dynamic_cast<const ResolutionError *>(&e) != nullptr) {
    return kExitUsage;
  }
  if (dynamic_cast<const FormatError *>(&e) != nullptr || dynamic_cast<const IoError *>(&e) != nullptr) {
    return kExitIo;
  }
  return kExitAlgorithm;
}

void dump_candidates(const std::string & path, const std::vector<finesync::CandidatePair> & c)
{
  std::ofstream f(path);
  if (!f) {
    throw IoError("cannot write " + path);
  }
  f << "# k t_a_ps dt_ps\n";
  for (const auto & p : c) {
    f << p.k << ' ' << p.t_a << ' ' << p.dt << '\n';
  }
  if (!f.flush()) {
    throw IoError("cannot write " + path);
  }
}

// --- simulate ---------------------------------------------------------------

struct SimulateArgs
{
  double rs = 0.0;
  double r1 = 0.0;
  double r2 = 0.0;
  double taud_ns = 1.0;
  double dt_ms = 0.0;
  double du = 0.0;
  double drift_amp = 0.0;
  double drift_period_s = 1.0;
  double ramp = 0.0;
  double dur_s = 0.0;
  std::uint64_t seed = 0;
  std::string out_dir;
};

int cmd_simulate(const SimulateArgs & s, std::ostream & out)
{
  sim::SourceParams p;
  p.r_s = s.rs;
  p.r1 = s.r1;
  p.r2 = s.r2;
  p.tau_d = ns_to_ps(s.taud_ns);
  p.duration = static_cast<Picoseconds>(std::llround(s.dur_s * 1e12));
  p.seed = s.seed;
  p.background_ramp = s.ramp;

  ClockModel clock;
  clock.delta_T = static_cast<Picoseconds>(std::llround(s.dt_ms * 1e9));
  clock.delta_u = s.du;
  clock.drift_amplitude = s.drift_amp;
  clock.drift_period = static_cast<Picoseconds>(std::llround(s.drift_period_s * 1e12));

  const auto session = sim::generate_session(p, clock);
  const fs::path dir(s.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    throw IoError("cannot create " + dir.string());
  }
  tagio::write_file(session.a, dir / "A.ptag");
  tagio::write_file(session.b, dir / "B.ptag");

  const json truth = {
    {"schema", kTruthSchema},
    {"clock",
     {{"delta_T_ps", clock.delta_T},
      {"delta_T_ns", static_cast<double>(clock.delta_T) * 1e-3},
      {"delta_u", clock.delta_u},
      {"drift_amplitude", clock.drift_amplitude},
      {"drift_period_ps", clock.drift_period}}},
    {"source",
     {{"r_s", p.r_s},
      {"r1", p.r1},
      {"r2", p.r2},
      {"tau_d_ps", p.tau_d},
      {"duration_ps", p.duration},
      {"seed", p.seed},
      {"background_ramp", p.background_ramp}}},
    {"counts", {{"a", session.a.size()}, {"b", session.b.size()}, {"pairs", session.pairs.size()}}},
    {"files", {{"a", "A.ptag"}, {"b", "B.ptag"}}}};
  write_text((dir / "truth.json").string(), truth.dump(2) + "\n", out);
  out << "wrote " << session.a.size() << " A tags, " << session.b.size() << " B tags, " << session.pairs.size()
      << " pairs to " << dir.string() << "\n";
  return kExitOk;
}

// --- sync -------------------------------------------------------------------

struct SyncArgs
{
  std::string a_path;
  std::string b_path;
  std::string output;
  bool assume_du0 = false;
  bool skip_fine = false;
  std::string dump_prefix;
  // correlation rounds
  double acq_ns = 268'435'456.0;
  double sep_ns = 1'073'741'824.0;
  double bin_ns = 2048.0;
  std::size_t n_bins = std::size_t{1} << 19;
  double s_th = 6.0;
  double du_max = 1e-4;
  double offset_max_ms = 400.0;
  std::size_t reduction = 8;
  double target_bin_ns = 1024.0;
  std::size_t suppress = 20;
  std::size_t max_rounds = 12;
  std::optional<double> start_ns;
  std::optional<double> prior_ns;
  // zero-rate mode
  double coarse_bin_ns = 2048.0;
  double fine_bin_ns = 2.0;
  // sparse endgame
  double sparse_bin_ns = 1024.0;
  std::size_t sparse_bins = std::size_t{1} << 19;
  double jitter_floor_ns = 1.0;
  std::size_t min_candidates = 8;
};

json sync_config_json(const SyncArgs & s)
{
  json j = {{"assume_du0", s.assume_du0},
            {"n_bins", s.n_bins},
            {"significance_threshold", s.s_th},
            {"suppress_low_freq", s.suppress}};
  if (s.start_ns) {
    j["start_ns"] = *s.start_ns;
  }
  if (s.prior_ns) {
    j["prior_ns"] = *s.prior_ns;
  }
  if (s.assume_du0) {
    j["coarse_bin_ns"] = s.coarse_bin_ns;
    j["fine_bin_ns"] = s.fine_bin_ns;
    return j;
  }
  j["acquisition_ns"] = s.acq_ns;
  j["separation_ns"] = s.sep_ns;
  j["initial_bin_ns"] = s.bin_ns;
  j["du_max"] = s.du_max;
  j["offset_max_ms"] = s.offset_max_ms;
  j["reduction_factor"] = s.reduction;
  j["target_bin_ns"] = s.target_bin_ns;
  j["max_rounds"] = s.max_rounds;
  j["fine"] = {{"skip", s.skip_fine},
               {"bin_ns", s.sparse_bin_ns},
               {"n_bins", s.sparse_bins},
               {"jitter_floor_ns", s.jitter_floor_ns},
               {"min_candidates", s.min_candidates}};
  return j;
}

int cmd_sync(const SyncArgs & s, std::ostream & out, std::ostream & err)
{
  const auto t_total = Clock::now();
  json report = {{"schema", kReportSchema}, {"command", "sync"}, {"config", sync_config_json(s)}};
  json timings;

  auto t0 = Clock::now();
  const TagStream a = tagio::read_file(s.a_path);
  const TagStream b = tagio::read_file(s.b_path);
  report["inputs"] = {{"a", input_json(s.a_path, a)}, {"b", input_json(s.b_path, b)}};
  timings["read"] = elapsed_ms(t0);

  json stages = json::object();
  int code = kExitOk;
  try {
    if (s.assume_du0) {
      xcorr::CoarseFineConfig cfg;
      cfg.coarse_bin = ns_to_ps(s.coarse_bin_ns);
      cfg.fine_bin = ns_to_ps(s.fine_bin_ns);
      cfg.n_bins = s.n_bins;
      cfg.significance_threshold = s.s_th;
      cfg.suppress_low_freq = s.suppress;
      if (s.start_ns) {
        cfg.start = ns_to_ps(*s.start_ns);
      }
      if (s.prior_ns) {
        cfg.prior_offset = ns_to_ps(*s.prior_ns);
      }
      t0 = Clock::now();
      const auto est = xcorr::find_offset_coarse_fine(a, b, cfg);
      timings["coarse_fine"] = elapsed_ms(t0);
      stages["coarse_fine"] = {{"coarse", peak_json(est.coarse)},
                               {"fine", peak_json(est.fine)},
                               {"coarse_delta_T_ns", static_cast<double>(est.coarse_delta_T) * 1e-3},
                               {"window_start_a_ps", est.window_start_a},
                               {"window_start_b_ps", est.window_start_b},
                               {"acquisition_ps", est.acquisition}};
      report["result"] = result_json(static_cast<double>(est.delta_T), static_cast<double>(est.resolution), 0.0, 0.0);
      report["result"]["delta_u_assumed"] = true;
    } else {
      estimator::EstimatorConfig cfg;
      cfg.acquisition = ns_to_ps(s.acq_ns);
      cfg.separation = ns_to_ps(s.sep_ns);
      cfg.initial_bin = ns_to_ps(s.bin_ns);
      cfg.n_bins = s.n_bins;
      cfg.significance_threshold = s.s_th;
      cfg.du_max = s.du_max;
      cfg.offset_max = static_cast<Picoseconds>(std::llround(s.offset_max_ms * 1e9));
      cfg.reduction_factor = s.reduction;
      cfg.target_bin = ns_to_ps(s.target_bin_ns);
      cfg.suppress_low_freq = s.suppress;
      cfg.max_rounds = s.max_rounds;
      if (s.start_ns) {
        cfg.start = ns_to_ps(*s.start_ns);
      }
      if (s.prior_ns) {
        cfg.prior_offset = ns_to_ps(*s.prior_ns);
      }
      cfg.validate();

      stages["estimator"] = {{"rounds", json::array()}};
      json & rounds = stages["estimator"]["rounds"];
      t0 = Clock::now();
      const auto est = estimator::iterative_sync(
        a, b, cfg, [&rounds](const estimator::RoundDiagnostics & d) { rounds.push_back(round_json(d)); });
      timings["estimator"] = elapsed_ms(t0);
      stages["estimator"]["result"] = result_json(est.delta_T, est.sigma_T, est.delta_u, est.sigma_u);
      stages["estimator"]["window_start_ps"] = est.window_start;
      report["result"] = result_json(est.delta_T, est.sigma_T, est.delta_u, est.sigma_u);

      if (!s.skip_fine) {
        t0 = Clock::now();
        const TagStream bc = estimator::compensate(b, est.model);
        finesync::SparseConfig sc;
        sc.bin = ns_to_ps(s.sparse_bin_ns);
        sc.n_bins = s.sparse_bins;
        sc.start = est.window_start;
        sc.du_bound = est.sigma_u;
        const auto m = finesync::match_sparse(a, bc, sc);
        const auto clean = finesync::clean_candidates(m.candidates, sc.n_bins);
        json fine = {{"single_a", m.single_a},
                     {"single_b", m.single_b},
                     {"multi_a", m.multi_a},
                     {"multi_b", m.multi_b},
                     {"n_candidates_raw", m.candidates.size()},
                     {"n_candidates_clean", clean.size()},
                     {"start_ps", sc.start}};
        if (!s.dump_prefix.empty()) {
          dump_candidates(s.dump_prefix + ".raw.txt", m.candidates);
          dump_candidates(s.dump_prefix + ".clean.txt", clean);
        }
        stages["finesync"] = fine;
        auto fit = finesync::fit_residual(clean, s.jitter_floor_ns * 1e3, s.min_candidates);
        fit.n_candidates_raw = m.candidates.size();
        const auto final_est = finesync::finalize(est, fit);
        timings["finesync"] = elapsed_ms(t0);
        stages["finesync"]["fit"] = {{"delta_T_corr_ns", fit.delta_T_corr * 1e-3},
                                     {"sigma_T_ns", fit.sigma_T * 1e-3},
                                     {"delta_u_corr", fit.delta_u_corr},
                                     {"sigma_u", fit.sigma_u},
                                     {"residual_sd_ns", fit.residual_sd * 1e-3}};
        report["result"] =
          result_json(final_est.delta_T, final_est.sigma_T, final_est.delta_u, final_est.sigma_u);
      }
    }
    report["status"] = "ok";
  } catch (const std::exception & e) {
    code = exit_code_for(e);
    if (code != kExitAlgorithm) {
      throw;
    }
    report["status"] = "error";
    report["error"] = error_json(e);
    err << "sync failed: " << e.what() << "\n";
  }
  report["stages"] = stages;
  timings["total"] = elapsed_ms(t_total);
  report["timings_ms"] = timings;
  write_text(s.output, report.dump(2) + "\n", out);
  return code;
}

// --- track ------------------------------------------------------------------

struct TrackArgs
{
  std::string a_path;
  std::string b_path;
  std::string report;
  std::optional<double> dt_ns;
  std::optional<double> du;
  double tau_c_ns = 2.0;
  double taud_ns = 1.0;
  double dtau_ns = 0.1;
  std::size_t n_avg = 0;
  double max_drift = 1e-8;
  double center_ns = 0.0;
  std::size_t replan = 0;
  std::string output;
};

std::string format_points(const std::vector<tracker::TrackPoint> & pts)
{
  std::ostringstream os;
  os << "# t_mid_s offset_ns n spread_ns partial\n";
  char line[128];
  for (const auto & p : pts) {
    std::snprintf(line, sizeof(line), "%.9f %.4f %zu %.4f %d\n", p.t_mid * 1e-12, p.offset * 1e-3, p.n_used,
                  p.spread * 1e-3, p.partial ? 1 : 0);
    os << line;
  }
  return os.str();
}

// Tracks in segments of `replan` points; after each segment the offset slope
// across it is folded into the model and B is compensated again.
std::vector<tracker::TrackPoint> track_replanned(const TagStream & a, const TagStream & b, AffineMap model,
                                                 tracker::TrackerConfig cfg, std::size_t replan)
{
  std::vector<tracker::TrackPoint> all;
  Picoseconds cursor = a.empty() ? 0 : a.front();
  while (true) {
    const TagStream bc = estimator::compensate(b, model);
    const auto span = a.range(cursor, std::numeric_limits<Picoseconds>::max());
    const TagStream segment(a.side(), std::vector<Picoseconds>(span.begin(), span.end()));
    std::vector<tracker::TrackPoint> pts;
    try {
      pts = tracker::track_compensated(segment, bc, cfg);
    } catch (const tracker::LockLost & e) {
      auto merged = all;
      merged.insert(merged.end(), e.points().begin(), e.points().end());
      throw tracker::LockLost(e.what(), std::move(merged), e.at());
    }
    if (replan == 0 || pts.size() <= replan) {
      all.insert(all.end(), pts.begin(), pts.end());
      return all;
    }
    pts.resize(replan);
    all.insert(all.end(), pts.begin(), pts.end());

    std::vector<finesync::CandidatePair> samples;
    for (const auto & p : pts) {
      samples.push_back({0, round_to_ps(p.t_mid), 0, round_to_ps(p.offset)});
    }
    const auto fit = finesync::fit_residual(samples, 0.0, 2);
    model = finesync::finalize(estimator::SyncEstimate::from_model(model, 0.0, 0.0), fit).model;
    cfg.initial_center = pts.back().offset - (fit.delta_T_corr + fit.delta_u_corr * pts.back().t_mid);
    cursor = pts.back().t_last + 1;
  }
}

int cmd_track(const TrackArgs & s, std::ostream & out, std::ostream & err)
{
  double delta_T_ps = 0.0;
  double delta_u = 0.0;
  if (!s.report.empty()) {
    std::ifstream f(s.report);
    if (!f) {
      throw IoError("cannot open " + s.report);
    }
    json r;
    try {
      r = json::parse(f);
    } catch (const json::exception & e) {
      throw FormatError(std::string("report is not valid JSON: ") + e.what());
    }
    if (r.value("schema", "") != kReportSchema || !r.contains("result")) {
      throw FormatError("report carries no " + std::string(kReportSchema) + " result");
    }
    delta_T_ps = r["result"]["delta_T_ns"].get<double>() * 1e3;
    delta_u = r["result"]["delta_u"].get<double>();
  } else if (s.dt_ns && s.du) {
    delta_T_ps = *s.dt_ns * 1e3;
    delta_u = *s.du;
  } else {
    throw ParameterError("track needs --report or both --dt-ns and --du");
  }

  const TagStream a = tagio::read_file(s.a_path);
  const TagStream b = tagio::read_file(s.b_path);

  tracker::TrackerConfig cfg;
  cfg.tau_c = ns_to_ps(s.tau_c_ns);
  cfg.tau_d = ns_to_ps(s.taud_ns);
  cfg.delta_tau = ns_to_ps(s.dtau_ns);
  cfg.n_avg = s.n_avg;
  cfg.max_drift_rate = s.max_drift;
  cfg.initial_center = s.center_ns * 1e3;
  cfg.validate();
  if (s.replan == 1) {
    throw ParameterError("--replan-du needs at least 2 points per segment");
  }

  try {
    const auto pts = track_replanned(a, b, AffineMap::from_clock(delta_T_ps, delta_u), cfg, s.replan);
    write_text(s.output, format_points(pts), out);
    return kExitOk;
  } catch (const tracker::LockLost & e) {
    write_text(s.output, format_points(e.points()), out);
    err << "lock lost at t=" << ps_to_seconds(e.at()) << " s: " << e.what();
    if (const auto last = e.last_point()) {
      err << "; last point t_mid=" << last->t_mid * 1e-12 << " s offset=" << last->offset * 1e-3 << " ns";
    }
    err << "\n";
    return kExitAlgorithm;
  }
}

// --- xcorr ------------------------------------------------------------------

struct XcorrArgs
{
  std::string a_path;
  std::string b_path;
  double bin_ns = 2048.0;
  std::size_t n_bins = std::size_t{1} << 19;
  std::optional<double> start_ns;
  std::optional<double> acq_ns;
  std::optional<double> prior_ns;
  std::size_t suppress = 0;
  std::size_t rebin = 1;
  std::size_t downsample = 1;
  std::string output;
};

int cmd_xcorr(const XcorrArgs & s, std::ostream & out)
{
  const TagStream a = tagio::read_file(s.a_path);
  const TagStream b = tagio::read_file(s.b_path);
  if (a.empty() || b.empty()) {
    throw CoverageError("both tag files must be non-empty");
  }
  if (s.downsample == 0 || s.rebin == 0) {
    throw ParameterError("--downsample and --rebin must be positive");
  }
  const Picoseconds bin = ns_to_ps(s.bin_ns);
  const Picoseconds period = bin * static_cast<Picoseconds>(s.n_bins);
  const Picoseconds start = s.start_ns ? ns_to_ps(*s.start_ns) : a.front();
  const Picoseconds acq = s.acq_ns ? ns_to_ps(*s.acq_ns) : period;
  const Picoseconds prior = s.prior_ns ? ns_to_ps(*s.prior_ns) : b.front() - a.front();

  const auto ca = xcorr::discretize(a, bin, s.n_bins, start, acq);
  const auto cb = xcorr::discretize(b, bin, s.n_bins, start + prior, acq);
  auto c = xcorr::cross_correlate(ca, cb, s.suppress);
  c.wrap_center = static_cast<double>(prior);
  if (s.rebin > 1) {
    c = xcorr::rebin(c, s.rebin);
  }
  const auto peak = xcorr::find_peak(c);

  std::ostringstream os;
  char line[160];
  std::snprintf(line, sizeof(line), "# k_max %zu offset_ns %.3f significance %.4f baseline_mean %.6g baseline_sd %.6g\n",
                peak.k_max, peak.tau_offset * 1e-3, peak.significance, peak.baseline_mean, peak.baseline_sd);
  os << line << "# k offset_ns value\n";
  for (std::size_t k0 = 0; k0 < c.n_bins; k0 += s.downsample) {
    const std::size_t k1 = std::min(c.n_bins, k0 + s.downsample);
    std::size_t km = k0;
    for (std::size_t k = k0; k < k1; ++k) {
      if (c.values[k] > c.values[km]) {
        km = k;
      }
    }
    std::snprintf(line, sizeof(line), "%zu %.3f %.6g\n", km, c.offset_of(km) * 1e-3, c.values[km]);
    os << line;
  }
  write_text(s.output, os.str(), out);
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string> & args, std::ostream & out, std::ostream & err)
{
  CLI::App app{"Clock offset and rate recovery from paired photon time tags", "pairsync"};
  app.require_subcommand(1);

  SimulateArgs sim_args;
  auto * sim = app.add_subcommand("simulate", "Generate a synthetic A/B tag session");
  sim->add_option("--rs", sim_args.rs, "pair rate, counts/s")->check(CLI::NonNegativeNumber);
  sim->add_option("--r1", sim_args.r1, "side A background rate, counts/s")->check(CLI::NonNegativeNumber);
  sim->add_option("--r2", sim_args.r2, "side B background rate, counts/s")->check(CLI::NonNegativeNumber);
  sim->add_option("--taud-ns", sim_args.taud_ns, "coincidence FWHM, ns")->capture_default_str();
  sim->add_option("--dt-ms", sim_args.dt_ms, "clock offset, ms")->capture_default_str();
  sim->add_option("--du", sim_args.du, "relative rate difference")->capture_default_str();
  sim->add_option("--drift-amp", sim_args.drift_amp, "sinusoidal drift amplitude (fractional)");
  sim->add_option("--drift-period-s", sim_args.drift_period_s, "drift period, s")->capture_default_str();
  sim->add_option("--ramp", sim_args.ramp, "linear background ramp in [-1, 1]");
  sim->add_option("--dur-s", sim_args.dur_s, "session length, s")->required();
  sim->add_option("--seed", sim_args.seed, "RNG seed")->capture_default_str();
  sim->add_option("-o,--out", sim_args.out_dir, "output directory")->required();

  SyncArgs sync_args;
  auto * sync = app.add_subcommand("sync", "Estimate offset and rate between two tag files");
  sync->add_option("a", sync_args.a_path, "side A tag file")->required();
  sync->add_option("b", sync_args.b_path, "side B tag file")->required();
  sync->add_option("-o,--output", sync_args.output, "report path (stdout when omitted)");
  sync->add_flag("--assume-du0", sync_args.assume_du0, "zero rate difference: coarse/fine offset only");
  sync->add_flag("--skip-fine", sync_args.skip_fine, "stop after the correlation rounds");
  sync->add_option("--dump-candidates", sync_args.dump_prefix, "write PREFIX.raw.txt and PREFIX.clean.txt");
  sync->add_option("--acq-ns", sync_args.acq_ns, "acquisition window T_a, ns")->capture_default_str();
  sync->add_option("--sep-ns", sync_args.sep_ns, "window separation T_s, ns")->capture_default_str();
  sync->add_option("--bin-ns", sync_args.bin_ns, "initial bin width, ns")->capture_default_str();
  sync->add_option("--nbins", sync_args.n_bins, "correlation length N")->capture_default_str();
  sync->add_option("--sth", sync_args.s_th, "significance threshold")->capture_default_str();
  sync->add_option("--du-max", sync_args.du_max, "prior bound on |du|")->capture_default_str();
  sync->add_option("--offset-max-ms", sync_args.offset_max_ms, "prior offset uncertainty, ms")
    ->capture_default_str();
  sync->add_option("--reduction", sync_args.reduction, "bin reduction per round (4 or 8)")->capture_default_str();
  sync->add_option("--target-bin-ns", sync_args.target_bin_ns, "stop once the bin width reaches this")
    ->capture_default_str();
  sync->add_option("--suppress", sync_args.suppress, "zeroed low-frequency components")->capture_default_str();
  sync->add_option("--max-rounds", sync_args.max_rounds, "round limit")->capture_default_str();
  sync->add_option("--start-ns", sync_args.start_ns, "first A window start, ns");
  sync->add_option("--prior-ns", sync_args.prior_ns, "expected B-minus-A offset, ns");
  sync->add_option("--coarse-bin-ns", sync_args.coarse_bin_ns, "coarse bin (--assume-du0), ns")
    ->capture_default_str();
  sync->add_option("--fine-bin-ns", sync_args.fine_bin_ns, "fine bin (--assume-du0), ns")->capture_default_str();
  sync->add_option("--sparse-bin-ns", sync_args.sparse_bin_ns, "sparse matching bin, ns")->capture_default_str();
  sync->add_option("--sparse-nbins", sync_args.sparse_bins, "sparse matching bin count")->capture_default_str();
  sync->add_option("--jitter-floor-ns", sync_args.jitter_floor_ns, "per-point timing floor, ns")
    ->capture_default_str();
  sync->add_option("--min-candidates", sync_args.min_candidates, "minimum cleaned candidates")
    ->capture_default_str();

  TrackArgs track_args;
  auto * track = app.add_subcommand("track", "Follow the residual offset after synchronization");
  track->add_option("a", track_args.a_path, "side A tag file")->required();
  track->add_option("b", track_args.b_path, "side B tag file")->required();
  track->add_option("--report", track_args.report, "sync report supplying the initial estimate");
  track->add_option("--dt-ns", track_args.dt_ns, "initial offset, ns");
  track->add_option("--du", track_args.du, "initial rate difference");
  track->add_option("--tau-c-ns", track_args.tau_c_ns, "coincidence window, ns")->capture_default_str();
  track->add_option("--taud-ns", track_args.taud_ns, "coincidence FWHM, ns")->capture_default_str();
  track->add_option("--dtau-ns", track_args.dtau_ns, "target centre uncertainty, ns")->capture_default_str();
  track->add_option("--navg", track_args.n_avg, "samples per update (0 derives it)")->capture_default_str();
  track->add_option("--max-drift", track_args.max_drift, "tolerated residual drift rate")->capture_default_str();
  track->add_option("--center-ns", track_args.center_ns, "initial window centre, ns")->capture_default_str();
  track->add_option("--replan-du", track_args.replan, "re-fit the rate every K points (0 disables)")
    ->capture_default_str();
  track->add_option("-o,--output", track_args.output, "output path (stdout when omitted)");

  XcorrArgs xc_args;
  auto * xc = app.add_subcommand("xcorr", "Dump one cross-correlation array");
  xc->add_option("a", xc_args.a_path, "side A tag file")->required();
  xc->add_option("b", xc_args.b_path, "side B tag file")->required();
  xc->add_option("--bin-ns", xc_args.bin_ns, "bin width, ns")->capture_default_str();
  xc->add_option("--nbins", xc_args.n_bins, "array length")->capture_default_str();
  xc->add_option("--start-ns", xc_args.start_ns, "A window start, ns");
  xc->add_option("--acq-ns", xc_args.acq_ns, "window span, ns (multiple of nbins * bin)");
  xc->add_option("--prior-ns", xc_args.prior_ns, "expected B-minus-A offset, ns");
  xc->add_option("--suppress", xc_args.suppress, "zeroed low-frequency components")->capture_default_str();
  xc->add_option("--rebin", xc_args.rebin, "rebin factor (power of two)")->capture_default_str();
  xc->add_option("--downsample", xc_args.downsample, "emit the maximum of each block of this many bins")
    ->capture_default_str();
  xc->add_option("-o,--output", xc_args.output, "output path (stdout when omitted)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError & e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (sim->parsed()) {
      return cmd_simulate(sim_args, out);
    }
    if (sync->parsed()) {
      return cmd_sync(sync_args, out, err);
    }
    if (track->parsed()) {
      return cmd_track(track_args, out, err);
    }
    return cmd_xcorr(xc_args, out);
  } catch (const std::exception & e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e);
  }
}

}  // namespace pairsync::cli
