// Acceptance gate: one PASS/FAIL line per criterion.
//
//   uqbench_acceptance          run every criterion
//   uqbench_acceptance 4 7      run the listed criteria
//
// Exit status is non-zero if any selected criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/core.h>

#include "json.hpp"
#include "test_support.hpp"
#include "uqbench/bootstrap.hpp"
#include "uqbench/commands.hpp"
#include "uqbench/errors.hpp"
#include "uqbench/estimators.hpp"
#include "uqbench/io.hpp"
#include "uqbench/metrics.hpp"
#include "uqbench/parallel.hpp"
#include "uqbench/report.hpp"
#include "uqbench/synth.hpp"

namespace uqbench {
namespace {

namespace fs = std::filesystem;
using testing::TempDir;

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int number;
  std::string title;
  double time_limit_s;
  std::function<Outcome()> run;
};

// ---------------------------------------------------------------------------
// 1. analytic metric values

Outcome analytic_metrics() {
  std::vector<std::string> failures;
  const double v = nll(std::vector{0.0}, std::vector{1.0});
  if (std::fabs(v - 0.9189385) > 1e-6 || std::fabs(v - 0.5 * std::log(2 * M_PI)) > 1e-9)
    failures.push_back(fmt::format("nll(0,1)={:.12f}", v));

  const double area = miscalibration_area(std::vector<double>(1000, 0.0), std::vector<double>(1000, 0.7));
  if (std::fabs(area - 0.5) > 1e-6) failures.push_back(fmt::format("miscal_area(0)={}", area));

  std::mt19937_64 gen(1);
  std::normal_distribution<double> n01;
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> a(3 + 40 * trial), up(a.size()), down(a.size());
    for (double& x : a) x = n01(gen);
    for (std::size_t i = 0; i < a.size(); ++i) {
      up[i] = std::exp(a[i]) + a[i];
      down[i] = -a[i] * a[i] * a[i];
    }
    if (spearman(a, up) != 1.0 || spearman(a, down) != -1.0) {
      failures.push_back(fmt::format("spearman monotone trial {}", trial));
      break;
    }
  }
  return {failures.empty(), failures.empty() ? "nll, miscalibration area and rank correlation exact"
                                             : fmt::format("{} failures, first: {}", failures.size(),
                                                           failures.front())};
}

// ---------------------------------------------------------------------------
// 2. agreement with brute-force oracles

Outcome oracle_equivalence() {
  std::mt19937_64 gen(2);
  int auroc_ok = 0;
  int auroc_runs = 0;
  while (auroc_runs < 100) {
    const std::size_t n = std::uniform_int_distribution<std::size_t>(2, 500)(gen);
    std::exponential_distribution<double> expo(4.0);
    std::uniform_int_distribution<int> coarse(0, 20);
    const bool tied = auroc_runs % 2 == 0;
    std::vector<double> err(n), sig(n);
    for (std::size_t i = 0; i < n; ++i) {
      err[i] = expo(gen);
      sig[i] = tied ? 0.05 * coarse(gen) : err[i] + expo(gen);
    }
    double got;
    double want;
    try {
      want = synth::oracle_auroc(err, sig, 0.25);
    } catch (const Error&) {
      continue;  // single class instance, draw another
    }
    got = auroc(err, sig, 0.25);
    ++auroc_runs;
    auroc_ok += got == want;
  }

  int nearest_ok = 0;
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::uint32_t dim = std::uniform_int_distribution<std::uint32_t>(1, 32)(gen);
    const std::size_t n_train = std::uniform_int_distribution<std::size_t>(1, 120)(gen);
    const std::size_t n_query = std::uniform_int_distribution<std::size_t>(1, 120)(gen);
    const auto train = testing::random_latents(gen, n_train, dim, 4, "t");
    const auto query = testing::random_latents(gen, n_query, dim, 4, "q");
    if (train.n_rows() > 500 || query.n_rows() > 500) {
      --trial;
      continue;
    }
    const auto got = nearest_distances(build_index(train), query);
    const auto want = synth::oracle_nearest(train, query);
    bool ok = true;
    std::size_t r = 0;
    for (const auto& sys : got)
      for (double d : sys) {
        const double rel = std::fabs(d - want[r]) / std::max(want[r], 1e-300);
        if (want[r] == 0.0 ? d != 0.0 : rel > 1e-6) ok = false;
        if (want[r] != 0.0) worst = std::max(worst, rel);
        ++r;
      }
    nearest_ok += ok && r == want.size();
  }
  return {auroc_ok == 100 && nearest_ok == 100,
          fmt::format("auroc exact {}/100, nearest within 1e-6 {}/100 (worst rel {:.2e})", auroc_ok,
                      nearest_ok, worst)};
}

// ---------------------------------------------------------------------------
// 3. coverage of the variance confidence interval

Outcome bca_coverage() {
  int covered = 0;
  for (int trial = 0; trial < 500; ++trial) {
    std::mt19937_64 gen(substream_seed(3, trial));
    std::normal_distribution<double> n01;
    std::vector<double> z(200);
    for (double& v : z) v = n01(gen);
    const std::vector<double> unit(z.size(), 1.0);
    const auto test = ci_var_z_test(z, unit, {2000, 0.95, static_cast<std::uint64_t>(trial)});
    covered += test.interval.contains(1.0);
  }
  const double rate = covered / 500.0;
  return {std::fabs(rate - 0.95) <= 0.02, fmt::format("coverage {}/500 = {:.3f} (target 0.95 +/- 0.02)",
                                                      covered, rate)};
}

// ---------------------------------------------------------------------------
// 4/5. recalibration round trip through the calibrate and evaluate commands

struct RoundTrip {
  int passed = 0;
  int trials = 0;
  int parity_ok = 0;
  int flag_ok = 0;
  std::vector<double> miscal;
};

synth::SynthConfig round_trip_config(synth::NoiseFamily family, std::uint64_t seed) {
  synth::SynthConfig cfg;
  cfg.n_systems = 20000;
  // latents and trajectories play no part here; keep them minimal
  cfg.n_train_systems = 1;
  cfg.latent_dim = 2;
  cfg.ensemble_members = 2;
  cfg.frames_min = 1;
  cfg.frames_max = 1;
  cfg.noise_family = family;
  cfg.distortion.kind = synth::Distortion::Kind::affine;
  cfg.distortion.slope = 0.5;
  cfg.distortion.intercept = 0.2;
  cfg.seed = seed;
  return cfg;
}

MetricsReport read_report(const fs::path& path) {
  return report::metrics_from_json(nlohmann::json::parse(io::read_text(path))["report"]);
}

RoundTrip recalibration_round_trip(synth::NoiseFamily family, int trials) {
  RoundTrip out;
  std::ostringstream sink;
  TempDir dir("roundtrip");
  for (int t = 0; t < trials; ++t) {
    const auto family_offset = static_cast<std::uint64_t>(family) * 100000;
    const auto cal = synth::generate(round_trip_config(family, 4000 + family_offset + t));
    const auto test = synth::generate(round_trip_config(family, 9000 + family_offset + t));
    io::write_records(dir / "cal_records.jsonl", cal.records);
    io::write_sigmas(dir / "cal_sigmas.jsonl", cal.reported);
    io::write_records(dir / "test_records.jsonl", test.records);
    io::write_sigmas(dir / "test_sigmas.jsonl", test.reported);

    cli::CalibrateArgs ca;
    ca.records = dir / "cal_records.jsonl";
    ca.sigmas = dir / "cal_sigmas.jsonl";
    ca.seed = 100 + t;
    ca.out = dir / "fit.json";
    cli::cmd_calibrate(ca, sink);

    cli::EvaluateArgs ea;
    ea.records = dir / "test_records.jsonl";
    ea.sigmas = dir / "test_sigmas.jsonl";
    ea.fit = dir / "fit.json";
    ea.seed = 200 + t;
    ea.out = dir / "report.json";
    cli::cmd_evaluate(ea, sink);

    const auto r = read_report(dir / "report.json");
    const bool parity = r.parity_r2 > 0.9;
    out.parity_ok += parity;
    out.flag_ok += r.calibrated_flag;
    out.passed += parity && r.calibrated_flag;
    out.miscal.push_back(r.miscal_area);
    ++out.trials;
  }
  return out;
}

bool round_trip_passes(const RoundTrip& r) { return r.passed * 10 >= r.trials * 9; }

std::string describe(const RoundTrip& r) {
  return fmt::format("{}/{} trials pass (parity_r2>0.9: {}, calibrated_flag: {})", r.passed, r.trials,
                     r.parity_ok, r.flag_ok);
}

Outcome recalibration_gaussian() {
  const auto r = recalibration_round_trip(synth::NoiseFamily::gaussian, 50);
  return {round_trip_passes(r), describe(r) + ", need >= 45"};
}

double mean_of(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

Outcome distribution_free() {
  bool pass = true;
  std::string detail;
  for (auto family : {synth::NoiseFamily::gaussian, synth::NoiseFamily::laplace, synth::NoiseFamily::skewed}) {
    const auto r = recalibration_round_trip(family, 50);
    const double area = mean_of(r.miscal);
    const bool non_gaussian = family != synth::NoiseFamily::gaussian;
    const bool ok = round_trip_passes(r) && (!non_gaussian || area > 0.02);
    pass = pass && ok;
    detail += fmt::format("{}{}: {}, mean miscal_area {:.4f}{}", detail.empty() ? "" : "; ",
                          synth::to_string(family), describe(r), area, non_gaussian ? " (need > 0.02)" : "");
  }
  return {pass, detail};
}

// ---------------------------------------------------------------------------
// 6. estimator reductions on fixtures

Outcome estimator_definitions() {
  std::vector<std::string> failures;
  auto check = [&](bool ok, const std::string& what) {
    if (!ok) failures.push_back(what);
  };

  // frame strategies on the fixture trajectories
  const auto trajs = io::read_trajectories(fs::path(UQBENCH_FIXTURE_DIR) / "trajectories.jsonl");
  const auto& spread = trajs.at(0);  // frame variances 1, 0, 9
  check(ensemble_frame_variances(spread) == std::vector<double>{1.0, 0.0, 9.0}, "frame variances");
  check(ensemble_uncertainty(spread, FrameStrategy::first).sigma == 1.0, "first");
  check(ensemble_uncertainty(spread, FrameStrategy::last).sigma == 3.0, "last");
  check(ensemble_uncertainty(spread, FrameStrategy::max).sigma == 3.0, "max");
  check(std::fabs(ensemble_uncertainty(spread, FrameStrategy::mean).sigma - std::sqrt(10.0 / 3.0)) < 1e-15,
        "mean");
  const auto& single = trajs.at(1);
  const double first = ensemble_uncertainty(single, FrameStrategy::first).sigma;
  for (auto s : {FrameStrategy::last, FrameStrategy::mean, FrameStrategy::max})
    check(ensemble_uncertainty(single, s).sigma == first, "single-frame collapse");

  // per-atom aggregations: train points (0,0) and (10,0); query atoms at distances 1, 2, 3
  const auto index = build_index(LatentMatrix(2, {"a", "b"}, {1, 1}, {0, 0, 10, 0}));
  const LatentMatrix query(2, {"q"}, {3}, {1, 0, 0, 2, 7, 0});
  check(nearest_distances(index, query)[0] == std::vector<double>{1.0, 2.0, 3.0}, "per-atom distances");
  check(distance_uncertainty(index, query, AggregationMode::atom_mean)[0].sigma == 2.0, "atom-mean");
  check(distance_uncertainty(index, query, AggregationMode::atom_sum)[0].sigma == 6.0, "atom-sum");
  check(distance_uncertainty(index, query, AggregationMode::atom_max)[0].sigma == 3.0, "atom-max");
  // query mean (8/3, 2/3) against system means (0,0) and (10,0)
  const double sm = distance_uncertainty(index, query, AggregationMode::system_mean)[0].sigma;
  check(std::fabs(sm - std::sqrt(68.0) / 3.0) < 1e-6, fmt::format("system-mean {}", sm));

  // single-atom systems collapse every per-atom aggregation to the raw distance
  const auto fixture = io::read_latents(fs::path(UQBENCH_FIXTURE_DIR) / "small.uqlt");
  const LatentMatrix singles(3, {"p", "r"}, {1, 1}, {0.5f, 0.5f, 0.5f, -3.0f, 1.0f, 2.0f});
  const auto fixture_index = build_index(fixture);
  const auto raw = nearest_distances(fixture_index, singles);
  for (auto mode : {AggregationMode::atom_mean, AggregationMode::atom_sum, AggregationMode::atom_max}) {
    const auto est = distance_uncertainty(fixture_index, singles, mode);
    for (std::size_t s = 0; s < est.size(); ++s) check(est[s].sigma == raw[s][0], "single-atom collapse");
  }
  return {failures.empty(), failures.empty() ? "frame strategies and aggregations match hand values"
                                             : fmt::format("mismatch: {}", failures.front())};
}

// ---------------------------------------------------------------------------
// 7. end-to-end distance pipeline against shuffled latents

LatentMatrix shuffle_rows(const LatentMatrix& m, std::uint64_t seed) {
  std::vector<std::size_t> perm(m.n_rows());
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::mt19937_64 gen(seed);
  std::shuffle(perm.begin(), perm.end(), gen);
  std::vector<float> data;
  data.reserve(m.data().size());
  for (auto r : perm) {
    const auto row = m.row(r);
    data.insert(data.end(), row.begin(), row.end());
  }
  return LatentMatrix(m.dim(), m.system_ids(), m.atom_counts(), std::move(data));
}

double distance_chain(const TempDir& dir, const std::string& tag, const LatentMatrix& query,
                      const io::DatasetSplit& split, std::uint64_t seed) {
  std::ostringstream sink;
  const auto latents = dir / (tag + "_latents.uqlt");
  io::write_latents(latents, query);

  cli::EstimateDistanceArgs da;
  da.index = dir / "index.uqix";
  da.latents = latents;
  da.agg = "atom-mean";
  da.out = dir / (tag + "_sigmas.jsonl");
  cli::cmd_estimate_distance(da, sink);

  const auto sigmas = io::read_sigmas(da.out);
  io::write_sigmas(dir / (tag + "_cal_sigmas.jsonl"), io::align_estimates(split.calibration, sigmas));
  io::write_sigmas(dir / (tag + "_test_sigmas.jsonl"), io::align_estimates(split.test, sigmas));

  cli::CalibrateArgs ca;
  ca.records = dir / "cal_records.jsonl";
  ca.sigmas = dir / (tag + "_cal_sigmas.jsonl");
  ca.seed = seed;
  ca.out = dir / (tag + "_fit.json");
  cli::cmd_calibrate(ca, sink);

  cli::EvaluateArgs ea;
  ea.records = dir / "test_records.jsonl";
  ea.sigmas = dir / (tag + "_test_sigmas.jsonl");
  ea.fit = ca.out;
  ea.seed = seed + 1;
  ea.out = dir / (tag + "_report.json");
  cli::cmd_evaluate(ea, sink);
  return read_report(ea.out).parity_r2;
}

Outcome distance_pipeline() {
  int wins = 0;
  double min_gap = INFINITY;
  double sum_real = 0;
  double sum_shuffled = 0;
  std::ostringstream sink;
  for (int t = 0; t < 20; ++t) {
    TempDir dir("pipeline");
    synth::SynthConfig cfg;
    cfg.n_systems = 8000;
    cfg.n_train_systems = 500;
    cfg.seed = 7000 + t;
    const auto data = synth::generate(cfg);
    io::write_latents(dir / "train.uqlt", data.train_latents);
    cli::cmd_index_build({dir / "train.uqlt", dir / "index.uqix"}, sink, sink);

    const auto split = io::split_records(data.records, 0.5, 300 + t);
    io::write_records(dir / "cal_records.jsonl", split.calibration);
    io::write_records(dir / "test_records.jsonl", split.test);

    const double real = distance_chain(dir, "real", data.latents, split, 10 * t);
    const double shuffled =
        distance_chain(dir, "shuffled", shuffle_rows(data.latents, 500 + t), split, 10 * t);
    const double gap = std::isnan(shuffled) ? (std::isnan(real) ? -INFINITY : INFINITY) : real - shuffled;
    wins += gap >= 0.2;
    min_gap = std::min(min_gap, gap);
    sum_real += real;
    sum_shuffled += shuffled;
  }
  return {wins >= 18, fmt::format("{}/20 trials with parity_r2 gap >= 0.2 (need >= 18); mean real {:.3f}, "
                                  "mean shuffled {:.3f}, min gap {:.3f}",
                                  wins, sum_real / 20, sum_shuffled / 20, min_gap)};
}

// ---------------------------------------------------------------------------
// 8. binary formats

Outcome file_formats() {
  std::vector<std::string> failures;
  const fs::path fixtures = UQBENCH_FIXTURE_DIR;
  const auto uqlt = io::read_bytes(fixtures / "small.uqlt");
  const auto uqix = io::read_bytes(fixtures / "small.uqix");
  if (io::encode_latents(io::decode_latents(uqlt)) != uqlt) failures.push_back("UQLT round-trip");
  if (io::encode_index(io::decode_index(uqix)) != uqix) failures.push_back("UQIX round-trip");
  if (io::encode_index(build_index(io::decode_latents(uqlt))) != uqix)
    failures.push_back("UQIX rebuilt from UQLT");

  auto expect = [&](Errc want, const std::vector<std::uint8_t>& bytes, bool index, const std::string& what) {
    try {
      if (index)
        io::decode_index(bytes);
      else
        io::decode_latents(bytes);
      failures.push_back(what + ": no error");
    } catch (const Error& e) {
      if (e.code() != want) failures.push_back(what + ": " + e.what());
    }
  };
  for (bool index : {false, true}) {
    auto bytes = index ? uqix : uqlt;
    auto bad = bytes;
    bad[1] ^= 0xff;
    expect(Errc::bad_magic, bad, index, "corrupted magic");
    expect(Errc::truncated_file, {bytes.begin(), bytes.end() - 1}, index, "truncated payload");
    expect(Errc::truncated_file, {bytes.begin(), bytes.begin() + 24}, index, "truncated header");
  }
  return {failures.empty(), failures.empty() ? "fixtures round-trip bit-exactly; corruption raises typed errors"
                                             : failures.front()};
}

// ---------------------------------------------------------------------------
// 9. command determinism across runs and thread counts

Outcome determinism() {
  TempDir dir("determinism");
  const std::string cli = UQBENCH_CLI_PATH;
  auto q = [&](const std::string& name) { return "'" + (dir / name).string() + "'"; };
  io::write_text(dir / "cfg.json", R"({"n_systems": 3000, "n_train_systems": 300, "seed": 9})");

  // every command, writing into a directory named by the run tag
  const std::vector<std::string> steps{
      "synth --config " + q("cfg.json") + " --out-dir " + q("@"),
      "index build --latents " + q("@/train_latents.uqlt") + " --out " + q("@/index.uqix"),
      "estimate distance --index " + q("@/index.uqix") + " --latents " + q("@/latents.uqlt") +
          " --agg atom-max --out " + q("@/dist.jsonl"),
      "estimate ensemble --trajectories " + q("@/trajectories.jsonl") + " --frame mean --out " +
          q("@/ens.jsonl"),
      "calibrate --records " + q("@/records.jsonl") + " --sigmas " + q("@/dist.jsonl") +
          " --seed 4 --out " + q("@/fit.json"),
      "evaluate --records " + q("@/records.jsonl") + " --sigmas " + q("@/dist.jsonl") + " --fit " +
          q("@/fit.json") + " --seed 5 --out " + q("@/report.json"),
      "report --report " + q("@/report.json") + " --plot " + q("@/plot.svg") + " --csv " +
          q("@/bins.csv"),
  };
  const std::vector<std::string> outputs{
      "records.jsonl", "sigmas.jsonl", "true_sigmas.jsonl", "latents.uqlt", "train_latents.uqlt",
      "trajectories.jsonl", "config.json", "index.uqix", "dist.jsonl", "ens.jsonl",
      "fit.json", "report.json", "plot.svg", "bins.csv"};

  // The report embeds input paths, so every run works in the same directory
  // and its outputs are moved aside afterwards.
  const std::vector<std::string> envs{"UQBENCH_THREADS=1", "UQBENCH_THREADS=1", "UQBENCH_THREADS=3",
                                      "UQBENCH_THREADS=8"};
  std::vector<std::vector<std::string>> contents;
  std::vector<std::string> stdouts;
  for (std::size_t run = 0; run < envs.size(); ++run) {
    std::string captured;
    for (const auto& step : steps) {
      std::string args = step;
      for (std::size_t pos; (pos = args.find("@")) != std::string::npos;) args.replace(pos, 1, "work");
      const auto r = testing::run_command(cli, args, dir.path(), envs[run]);
      if (r.exit_code != 0) return {false, fmt::format("'{}' failed: {}", step.substr(0, 30), r.err)};
      captured += r.out;
    }
    std::vector<std::string> files;
    for (const auto& f : outputs) files.push_back(testing::slurp(dir / "work" / f));
    contents.push_back(std::move(files));
    stdouts.push_back(captured);
    fs::rename(dir / "work", dir / ("run" + std::to_string(run)));
  }
  for (std::size_t run = 1; run < envs.size(); ++run) {
    for (std::size_t f = 0; f < outputs.size(); ++f) {
      if (contents[run][f] != contents[0][f] || contents[0][f].empty())
        return {false, fmt::format("{} differs under {}", outputs[f], envs[run])};
    }
    if (stdouts[run] != stdouts[0]) return {false, "stdout differs under " + envs[run]};
  }
  return {true, fmt::format("{} commands x {} runs (threads 1,1,3,8): {} outputs byte-identical", steps.size(),
                            envs.size(), outputs.size())};
}

const std::vector<Criterion>& criteria() {
  static const std::vector<Criterion> all{
      {1, "analytic metric checks", 1.0, analytic_metrics},
      {2, "oracle equivalence", 30.0, oracle_equivalence},
      {3, "BCa coverage of CI(Var(Z))", 60.0, bca_coverage},
      {4, "recalibration round-trip", 120.0, recalibration_gaussian},
      {5, "distribution-free robustness", 180.0, distribution_free},
      {6, "estimator definitions", 1.0, estimator_definitions},
      {7, "end-to-end distance pipeline", 180.0, distance_pipeline},
      {8, "file-format golden tests", 1.0, file_formats},
      {9, "determinism", 120.0, determinism},
  };
  return all;
}

}  // namespace
}  // namespace uqbench

int main(int argc, char** argv) {
  using namespace uqbench;
  std::vector<int> selected;
  for (int i = 1; i < argc; ++i) selected.push_back(std::atoi(argv[i]));
  bool all_pass = true;
  for (const auto& c : criteria()) {
    if (!selected.empty() && std::find(selected.begin(), selected.end(), c.number) == selected.end())
      continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = c.run();
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = secs <= c.time_limit_s;
    const bool pass = outcome.pass && in_time;
    all_pass = all_pass && pass;
    std::cout << fmt::format("[{}] criterion {}: {} -- {} ({:.2f} s, limit {:.0f} s{})", pass ? "PASS" : "FAIL",
                             c.number, c.title, outcome.detail, secs, c.time_limit_s,
                             in_time ? "" : ", over time")
              << std::endl;
  }
  return all_pass ? 0 : 1;
}
