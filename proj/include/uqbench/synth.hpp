#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "uqbench/model.hpp"

namespace uqbench::synth {

enum class NoiseFamily { gaussian, laplace, skewed };

NoiseFamily parse_noise_family(std::string_view text);
std::string_view to_string(NoiseFamily family);

/// True dispersion as a function of the latent novelty score s in (0, 1]:
/// sigma_true = a * s + b.
struct SigmaLaw {
  double a = 0.45;
  double b = 0.05;
};

/// How the reported sigma departs from the true dispersion t.
struct Distortion {
  enum class Kind { none, scale, affine, noisy };
  Kind kind = Kind::none;
  double factor = 1.0;     // scale: factor * t
  double slope = 1.0;      // affine: slope * t + intercept
  double intercept = 0.0;
  double jitter = 0.0;     // noisy: t * exp(jitter * N(0, 1))
};

struct SynthConfig {
  std::size_t n_systems = 1000;
  std::size_t n_train_systems = 500;
  std::uint32_t atoms_min = 2;
  std::uint32_t atoms_max = 6;
  std::uint32_t latent_dim = 8;
  std::size_t n_clusters = 8;
  double center_spread = 5.0;   // sd of cluster centre components
  double cluster_spread = 0.05; // sd of atom scatter around a centre
  double novelty_scale = 1.0;   // query atom offset = score * novelty_scale
  NoiseFamily noise_family = NoiseFamily::gaussian;
  double skew_shape = 0.5;      // log-normal shape of the skewed family
  SigmaLaw sigma_law;
  Distortion distortion;
  std::uint32_t ensemble_members = 5;
  std::uint32_t frames_min = 1;
  std::uint32_t frames_max = 8;
  double energy_mean = -1.5;
  double energy_sd = 1.0;
  std::string id_prefix = "sys";
  std::uint64_t seed = 0;

  /// Throws invalid_config on any inconsistent field.
  void validate() const;
};

SynthConfig config_from_json(const nlohmann::json& j);
nlohmann::ordered_json config_to_json(const SynthConfig& cfg);

struct SynthData {
  std::vector<EnergyRecord> records;
  std::vector<double> true_sigmas;
  std::vector<UncertaintyEstimate> reported;
  LatentMatrix latents;
  LatentMatrix train_latents;
  std::vector<TrajectoryEnsemble> trajectories;
};

/// Draws a dataset whose errors have known per-system dispersion. Query
/// atoms sit score * novelty_scale away from a training cluster centre in
/// random directions, so nearest-neighbour distance grows with the score
/// that also sets the true dispersion. The last trajectory frame's member
/// variance equals the true dispersion squared. Deterministic per seed.
SynthData generate(const SynthConfig& cfg);

/// Brute-force AUROC: every (positive, negative) pair, ties count 1/2.
double oracle_auroc(std::span<const double> abs_errors, std::span<const double> sigmas,
                    double threshold);

/// Brute-force per-atom nearest distance by a triple loop.
std::vector<double> oracle_nearest(const LatentMatrix& train, const LatentMatrix& query);

}  // namespace uqbench::synth
