#include "uqbench/commands.hpp"

#include <cmath>
#include <ostream>

#include "CLI11.hpp"
#include "json.hpp"
#include "uqbench/calibration.hpp"
#include "uqbench/errors.hpp"
#include "uqbench/estimators.hpp"
#include "uqbench/io.hpp"
#include "uqbench/metrics.hpp"
#include "uqbench/report.hpp"
#include "uqbench/synth.hpp"

namespace uqbench::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

namespace {

ordered_json input_digest(const fs::path& path) {
  ordered_json j;
  j["path"] = path.string();
  j["sha256"] = io::file_sha256(path);
  return j;
}

ordered_json base_metadata(const char* command) {
  ordered_json j;
  j["tool"] = "uqbench";
  j["version"] = kVersion;
  j["command"] = command;
  return j;
}

void write_json(const fs::path& path, const ordered_json& j) { io::write_text(path, j.dump(2) + "\n"); }

json read_json(const fs::path& path) {
  const std::string text = io::read_text(path);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(Errc::parse_error, path.string() + ": " + e.what());
  }
}

BootstrapConfig boot_config(std::uint32_t resamples, double level, std::uint64_t seed) {
  BootstrapConfig cfg{resamples, level, seed};
  cfg.validate();
  return cfg;
}

}  // namespace

void cmd_index_build(const IndexBuildArgs& args, std::ostream& out, std::ostream& /*diag*/) {
  LatentMatrix train = io::read_latents(args.latents);
  const DistanceIndex index = build_index(std::move(train));
  io::write_index(args.out, index);
  out << "row_count " << index.row_count() << "\n"
      << "dim " << index.dim() << "\n";
}

void cmd_estimate_distance(const EstimateDistanceArgs& args, std::ostream& /*diag*/) {
  const AggregationMode mode = parse_aggregation(args.agg);
  const DistanceIndex index = io::read_index(args.index);
  const LatentMatrix query = io::read_latents(args.latents);
  io::write_sigmas(args.out, distance_uncertainty(index, query, mode));
}

void cmd_estimate_ensemble(const EstimateEnsembleArgs& args, std::ostream& /*diag*/) {
  const FrameStrategy strategy = parse_frame_strategy(args.frame);
  const auto trajectories = io::read_trajectories(args.trajectories);
  std::vector<UncertaintyEstimate> out;
  out.reserve(trajectories.size());
  for (const auto& t : trajectories) out.push_back(ensemble_uncertainty(t, strategy));
  io::write_sigmas(args.out, out);
}

void cmd_calibrate(const CalibrateArgs& args, std::ostream& /*diag*/) {
  const BootstrapConfig boot = boot_config(args.resamples, args.level, args.seed);
  const auto records = io::read_records(args.records);
  const auto estimates = io::read_sigmas(args.sigmas);
  const JoinedSample joined = join(records, estimates);
  const auto bins = bin_by_uncertainty(joined.errors, joined.sigmas, args.bins, boot);
  const CalibrationFit fit = fit_calibration(bins);

  ordered_json meta = base_metadata("calibrate");
  meta["seed"] = args.seed;
  meta["n_resamples"] = args.resamples;
  meta["level"] = args.level;
  meta["n_points"] = joined.errors.size();
  meta["inputs"] = {{"records", input_digest(args.records)}, {"sigmas", input_digest(args.sigmas)}};

  ordered_json j;
  j["fit"] = report::to_json(fit);
  j["bins"] = report::to_json(bins);
  j["metadata"] = meta;
  write_json(args.out, j);
}

void cmd_evaluate(const EvaluateArgs& args, std::ostream& diag) {
  const BootstrapConfig boot = boot_config(args.resamples, args.level, args.seed);
  const auto records = io::read_records(args.records);
  auto estimates = io::read_sigmas(args.sigmas);

  std::optional<CalibrationFit> fit;
  std::size_t floored = 0;
  double miscal_uncalibrated = kUndefined;
  std::vector<std::string> extra_warnings;
  if (args.fit) {
    const json fit_json = read_json(*args.fit);
    try {
      fit = report::fit_from_json(fit_json.at("fit"));
    } catch (const json::exception& e) {
      throw Error(Errc::parse_error, args.fit->string() + ": " + e.what());
    }
    const JoinedSample raw = join(records, estimates);
    try {
      miscal_uncalibrated = miscalibration_area(raw.errors, raw.sigmas);
    } catch (const Error& e) {
      extra_warnings.push_back(std::string("uncalibrated miscalibration area undefined: ") + e.what());
    }
    Recalibration recal = recalibrate(estimates, *fit);
    floored = recal.floored.size();
    for (const auto& id : recal.floored) {
      diag << "warning: recalibrated sigma for '" << id << "' was <= 0, floored at "
           << kSigmaFloor << " eV\n";
    }
    if (floored > 0) {
      extra_warnings.push_back(std::to_string(floored) + " recalibrated sigmas floored at 1e-6 eV");
    }
    estimates = std::move(recal.estimates);
  } else if (args.allow_uncalibrated) {
    const JoinedSample raw = join(records, estimates);
    miscal_uncalibrated = miscalibration_area(raw.errors, raw.sigmas);
  }

  EvaluateOptions options;
  options.n_bins = args.bins;
  options.allow_uncalibrated = args.allow_uncalibrated;
  Evaluation eval = evaluate(records, estimates, args.auroc_threshold, boot, options);
  eval.report.warnings.insert(eval.report.warnings.end(), extra_warnings.begin(), extra_warnings.end());
  for (const auto& w : eval.report.warnings) diag << "warning: " << w << "\n";

  ordered_json meta = base_metadata("evaluate");
  meta["seed"] = args.seed;
  meta["n_resamples"] = args.resamples;
  meta["level"] = args.level;
  meta["n_bins"] = args.bins;
  meta["auroc_threshold"] = args.auroc_threshold;
  meta["allow_uncalibrated"] = args.allow_uncalibrated;
  ordered_json inputs;
  inputs["records"] = input_digest(args.records);
  inputs["sigmas"] = input_digest(args.sigmas);
  if (args.fit) inputs["fit"] = input_digest(*args.fit);
  meta["inputs"] = inputs;

  ordered_json j;
  j["report"] = report::to_json(eval.report);
  ordered_json recal = nullptr;
  if (fit) {
    recal = ordered_json::object();
    recal["fit"] = report::to_json(*fit);
    recal["floored"] = floored;
  }
  j["recalibration"] = recal;
  j["uncalibrated"] = {{"miscal_area", report::number_or_null(miscal_uncalibrated)}};
  j["curve"] = report::to_json(eval.bins);
  j["metadata"] = meta;
  write_json(args.out, j);
}

void cmd_report(const ReportArgs& args, std::ostream& /*diag*/) {
  const report::ReportBundle bundle = report::bundle_from_json(read_json(args.report));
  if (args.plot) {
    io::write_text(*args.plot,
                   report::calibration_svg(bundle.bins, bundle.metrics.slope, bundle.metrics.intercept));
  }
  if (args.csv) io::write_text(*args.csv, report::bins_csv(bundle.bins));
}

void cmd_synth(const SynthArgs& args, std::ostream& /*diag*/) {
  synth::SynthConfig cfg;
  try {
    cfg = synth::config_from_json(read_json(args.config));
  } catch (const json::exception& e) {
    throw Error(Errc::invalid_config, args.config.string() + ": " + e.what());
  }
  const synth::SynthData data = synth::generate(cfg);
  std::error_code ec;
  fs::create_directories(args.out_dir, ec);
  if (ec) throw Error(Errc::io_failure, "cannot create '" + args.out_dir.string() + "': " + ec.message());

  std::vector<UncertaintyEstimate> truth;
  truth.reserve(data.records.size());
  for (std::size_t i = 0; i < data.records.size(); ++i) {
    truth.push_back({data.records[i].system_id, data.true_sigmas[i], UqMethod::external, true});
  }
  io::write_records(args.out_dir / "records.jsonl", data.records);
  io::write_sigmas(args.out_dir / "sigmas.jsonl", data.reported);
  io::write_sigmas(args.out_dir / "true_sigmas.jsonl", truth);
  io::write_latents(args.out_dir / "latents.uqlt", data.latents);
  io::write_latents(args.out_dir / "train_latents.uqlt", data.train_latents);
  io::write_trajectories(args.out_dir / "trajectories.jsonl", data.trajectories);
  write_json(args.out_dir / "config.json", synth::config_to_json(cfg));
}

int run(int argc, char** argv, std::ostream& out, std::ostream& diag) {
  CLI::App app{"Uncertainty estimation, recalibration and validation for relaxed-energy predictions"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  IndexBuildArgs index_args;
  auto* index_cmd = app.add_subcommand("index", "Distance index over training latents");
  index_cmd->require_subcommand(1);
  auto* build_cmd = index_cmd->add_subcommand("build", "Build and persist a distance index");
  build_cmd->add_option("--latents", index_args.latents, "Training latents (UQLT)")->required();
  build_cmd->add_option("--out", index_args.out, "Output index (UQIX)")->required();

  auto* estimate_cmd = app.add_subcommand("estimate", "Produce uncalibrated uncertainties");
  estimate_cmd->require_subcommand(1);
  EstimateDistanceArgs dist_args;
  auto* dist_cmd = estimate_cmd->add_subcommand("distance", "Latent nearest-neighbour distance");
  dist_cmd->add_option("--index", dist_args.index, "Distance index (UQIX)")->required();
  dist_cmd->add_option("--latents", dist_args.latents, "Query latents (UQLT)")->required();
  dist_cmd->add_option("--agg", dist_args.agg, "Per-system reduction")
      ->check(CLI::IsMember({"atom-mean", "atom-sum", "atom-max", "system-mean"}))
      ->capture_default_str();
  dist_cmd->add_option("--out", dist_args.out, "Output sigma file")->required();

  EstimateEnsembleArgs ens_args;
  auto* ens_cmd = estimate_cmd->add_subcommand("ensemble", "Ensemble variance over a trajectory");
  ens_cmd->add_option("--trajectories", ens_args.trajectories, "Trajectory file")->required();
  ens_cmd->add_option("--frame", ens_args.frame, "Frame strategy")
      ->check(CLI::IsMember({"first", "last", "mean", "max"}))
      ->capture_default_str();
  ens_cmd->add_option("--out", ens_args.out, "Output sigma file")->required();

  CalibrateArgs cal_args;
  auto* cal_cmd = app.add_subcommand("calibrate", "Fit RMSE against RMV on a calibration split");
  cal_cmd->add_option("--records", cal_args.records, "Energy records")->required();
  cal_cmd->add_option("--sigmas", cal_args.sigmas, "Uncertainty estimates")->required();
  cal_cmd->add_option("--bins", cal_args.bins, "Number of equal-count bins")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cal_cmd->add_option("--seed", cal_args.seed, "Bootstrap seed")->required();
  cal_cmd->add_option("--resamples", cal_args.resamples, "Bootstrap resamples")->capture_default_str();
  cal_cmd->add_option("--level", cal_args.level, "Confidence level")->capture_default_str();
  cal_cmd->add_option("--out", cal_args.out, "Output fit (JSON)")->required();

  EvaluateArgs eval_args;
  std::string fit_path;
  auto* eval_cmd = app.add_subcommand("evaluate", "Recalibrate and compute the metric suite");
  eval_cmd->add_option("--records", eval_args.records, "Energy records")->required();
  eval_cmd->add_option("--sigmas", eval_args.sigmas, "Uncertainty estimates")->required();
  eval_cmd->add_option("--fit", fit_path, "Calibration fit from `calibrate`");
  eval_cmd->add_option("--auroc-threshold", eval_args.auroc_threshold,
                       "|error| above which a system counts as a positive (eV)")
      ->capture_default_str();
  eval_cmd->add_option("--seed", eval_args.seed, "Bootstrap seed")->required();
  eval_cmd->add_option("--resamples", eval_args.resamples, "Bootstrap resamples")->capture_default_str();
  eval_cmd->add_option("--level", eval_args.level, "Confidence level")->capture_default_str();
  eval_cmd->add_option("--bins", eval_args.bins, "Number of equal-count bins")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  eval_cmd->add_flag("--allow-uncalibrated", eval_args.allow_uncalibrated,
                     "Evaluate sigmas that have not been recalibrated");
  eval_cmd->add_option("--out", eval_args.out, "Output report (JSON)")->required();

  ReportArgs rep_args;
  std::string plot_path;
  std::string csv_path;
  auto* rep_cmd = app.add_subcommand("report", "Render a report as SVG plot and CSV bin table");
  rep_cmd->add_option("--report", rep_args.report, "Report from `evaluate`")->required();
  rep_cmd->add_option("--plot", plot_path, "Output SVG");
  rep_cmd->add_option("--csv", csv_path, "Output CSV");

  SynthArgs synth_args;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic dataset");
  synth_cmd->add_option("--config", synth_args.config, "Synth config (JSON)")->required();
  synth_cmd->add_option("--out-dir", synth_args.out_dir, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, diag);
  }

  try {
    if (build_cmd->parsed()) {
      cmd_index_build(index_args, out, diag);
    } else if (dist_cmd->parsed()) {
      cmd_estimate_distance(dist_args, diag);
    } else if (ens_cmd->parsed()) {
      cmd_estimate_ensemble(ens_args, diag);
    } else if (cal_cmd->parsed()) {
      cmd_calibrate(cal_args, diag);
    } else if (eval_cmd->parsed()) {
      if (!fit_path.empty()) eval_args.fit = fit_path;
      cmd_evaluate(eval_args, diag);
    } else if (rep_cmd->parsed()) {
      if (!plot_path.empty()) rep_args.plot = plot_path;
      if (!csv_path.empty()) rep_args.csv = csv_path;
      cmd_report(rep_args, diag);
    } else if (synth_cmd->parsed()) {
      cmd_synth(synth_args, diag);
    }
  } catch (const Error& e) {
    diag << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    diag << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace uqbench::cli
