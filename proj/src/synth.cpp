#include "uqbench/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "uqbench/errors.hpp"
#include "uqbench/parallel.hpp"

namespace uqbench::synth {

using json = nlohmann::json;

NoiseFamily parse_noise_family(std::string_view text) {
  if (text == "gaussian") return NoiseFamily::gaussian;
  if (text == "laplace") return NoiseFamily::laplace;
  if (text == "skewed") return NoiseFamily::skewed;
  throw Error(Errc::invalid_config, "unknown noise_family '" + std::string(text) +
                                        "' (allowed: gaussian, laplace, skewed)");
}

std::string_view to_string(NoiseFamily family) {
  switch (family) {
    case NoiseFamily::gaussian: return "gaussian";
    case NoiseFamily::laplace: return "laplace";
    case NoiseFamily::skewed: return "skewed";
  }
  return "gaussian";
}

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(Errc::invalid_config, what);
}

}  // namespace

void SynthConfig::validate() const {
  require(n_systems >= 1, "n_systems must be at least 1");
  require(n_train_systems >= 1, "n_train_systems must be at least 1");
  require(atoms_min >= 1 && atoms_min <= atoms_max, "atoms_per_system must be a range [min, max] with min >= 1");
  require(latent_dim >= 1, "latent_dim must be at least 1");
  require(n_clusters >= 1, "n_clusters must be at least 1");
  require(center_spread >= 0.0 && cluster_spread >= 0.0 && novelty_scale >= 0.0,
          "latent spreads must be non-negative");
  require(skew_shape > 0.0, "skew_shape must be positive");
  require(sigma_law.a > 0.0, "sigma_law.a must be positive");
  require(sigma_law.b >= 0.0, "sigma_law.b must be non-negative");
  switch (distortion.kind) {
    case Distortion::Kind::none: break;
    case Distortion::Kind::scale:
      require(distortion.factor > 0.0, "distortion.factor must be positive");
      break;
    case Distortion::Kind::affine:
      require(distortion.slope > 0.0, "distortion.slope must be positive");
      require(distortion.slope * sigma_law.b + distortion.intercept > 0.0,
              "affine distortion would produce non-positive reported sigma");
      break;
    case Distortion::Kind::noisy:
      require(distortion.jitter >= 0.0, "distortion.jitter must be non-negative");
      break;
  }
  require(ensemble_members >= 2, "ensemble.members must be at least 2");
  require(frames_min >= 1 && frames_min <= frames_max, "ensemble.frames must be a range [min, max] with min >= 1");
  require(energy_sd >= 0.0, "energy_sd must be non-negative");
  require(!id_prefix.empty(), "id_prefix must be non-empty");
}

namespace {

template <typename T>
void read_opt(const json& j, const char* key, T& out) {
  if (auto it = j.find(key); it != j.end()) {
    try {
      out = it->get<T>();
    } catch (const json::exception& e) {
      throw Error(Errc::invalid_config, std::string("field '") + key + "': " + e.what());
    }
  }
}

void read_range(const json& j, const char* key, std::uint32_t& lo, std::uint32_t& hi) {
  if (auto it = j.find(key); it != j.end()) {
    if (it->is_number_integer()) {
      lo = hi = it->get<std::uint32_t>();
    } else if (it->is_array() && it->size() == 2 && (*it)[0].is_number_integer() &&
               (*it)[1].is_number_integer()) {
      lo = (*it)[0].get<std::uint32_t>();
      hi = (*it)[1].get<std::uint32_t>();
    } else {
      throw Error(Errc::invalid_config, std::string("field '") + key + "' must be [min, max]");
    }
  }
}

}  // namespace

SynthConfig config_from_json(const json& j) {
  if (!j.is_object()) throw Error(Errc::invalid_config, "synth config must be a JSON object");
  SynthConfig c;
  read_opt(j, "n_systems", c.n_systems);
  read_opt(j, "n_train_systems", c.n_train_systems);
  read_range(j, "atoms_per_system", c.atoms_min, c.atoms_max);
  read_opt(j, "latent_dim", c.latent_dim);
  read_opt(j, "n_clusters", c.n_clusters);
  read_opt(j, "center_spread", c.center_spread);
  read_opt(j, "cluster_spread", c.cluster_spread);
  read_opt(j, "novelty_scale", c.novelty_scale);
  if (auto it = j.find("noise_family"); it != j.end()) {
    if (!it->is_string()) throw Error(Errc::invalid_config, "noise_family must be a string");
    c.noise_family = parse_noise_family(it->get<std::string>());
  }
  read_opt(j, "skew_shape", c.skew_shape);
  if (auto it = j.find("sigma_law"); it != j.end()) {
    read_opt(*it, "a", c.sigma_law.a);
    read_opt(*it, "b", c.sigma_law.b);
  }
  if (auto it = j.find("distortion"); it != j.end()) {
    std::string kind = "none";
    read_opt(*it, "kind", kind);
    if (kind == "none") {
      c.distortion.kind = Distortion::Kind::none;
    } else if (kind == "scale") {
      c.distortion.kind = Distortion::Kind::scale;
      read_opt(*it, "factor", c.distortion.factor);
    } else if (kind == "affine") {
      c.distortion.kind = Distortion::Kind::affine;
      read_opt(*it, "slope", c.distortion.slope);
      read_opt(*it, "intercept", c.distortion.intercept);
    } else if (kind == "noisy") {
      c.distortion.kind = Distortion::Kind::noisy;
      read_opt(*it, "jitter", c.distortion.jitter);
    } else {
      throw Error(Errc::invalid_config, "unknown distortion kind '" + kind +
                                            "' (allowed: none, scale, affine, noisy)");
    }
  }
  if (auto it = j.find("ensemble"); it != j.end()) {
    read_opt(*it, "members", c.ensemble_members);
    read_range(*it, "frames", c.frames_min, c.frames_max);
  }
  read_opt(j, "energy_mean", c.energy_mean);
  read_opt(j, "energy_sd", c.energy_sd);
  read_opt(j, "id_prefix", c.id_prefix);
  read_opt(j, "seed", c.seed);
  c.validate();
  return c;
}

nlohmann::ordered_json config_to_json(const SynthConfig& c) {
  nlohmann::ordered_json j;
  j["n_systems"] = c.n_systems;
  j["n_train_systems"] = c.n_train_systems;
  j["atoms_per_system"] = {c.atoms_min, c.atoms_max};
  j["latent_dim"] = c.latent_dim;
  j["n_clusters"] = c.n_clusters;
  j["center_spread"] = c.center_spread;
  j["cluster_spread"] = c.cluster_spread;
  j["novelty_scale"] = c.novelty_scale;
  j["noise_family"] = std::string(to_string(c.noise_family));
  j["skew_shape"] = c.skew_shape;
  j["sigma_law"] = {{"a", c.sigma_law.a}, {"b", c.sigma_law.b}};
  nlohmann::ordered_json d;
  switch (c.distortion.kind) {
    case Distortion::Kind::none: d["kind"] = "none"; break;
    case Distortion::Kind::scale:
      d["kind"] = "scale";
      d["factor"] = c.distortion.factor;
      break;
    case Distortion::Kind::affine:
      d["kind"] = "affine";
      d["slope"] = c.distortion.slope;
      d["intercept"] = c.distortion.intercept;
      break;
    case Distortion::Kind::noisy:
      d["kind"] = "noisy";
      d["jitter"] = c.distortion.jitter;
      break;
  }
  j["distortion"] = d;
  j["ensemble"] = {{"members", c.ensemble_members}, {"frames", {c.frames_min, c.frames_max}}};
  j["energy_mean"] = c.energy_mean;
  j["energy_sd"] = c.energy_sd;
  j["id_prefix"] = c.id_prefix;
  j["seed"] = c.seed;
  return j;
}

namespace {

// Independent generator per concern so that, e.g., changing the latent
// dimension leaves the drawn errors untouched.
enum Stream : std::uint64_t { kScores = 1, kNoise, kLatents, kTrain, kReported, kTrajectories, kEnergies };

double draw_unit_noise(NoiseFamily family, double shape, std::mt19937_64& gen) {
  switch (family) {
    case NoiseFamily::gaussian: return std::normal_distribution<double>(0.0, 1.0)(gen);
    case NoiseFamily::laplace: {
      // inverse CDF of Laplace(0, 1/sqrt(2)), which has unit variance
      const double u = std::uniform_real_distribution<double>(-0.5, 0.5)(gen);
      const double scale = 1.0 / std::sqrt(2.0);
      return u < 0.0 ? scale * std::log1p(2.0 * u) : -scale * std::log1p(-2.0 * u);
    }
    case NoiseFamily::skewed: {
      const double x = std::exp(shape * std::normal_distribution<double>(0.0, 1.0)(gen));
      const double s2 = shape * shape;
      const double mean = std::exp(s2 / 2.0);
      const double sd = std::sqrt((std::exp(s2) - 1.0) * std::exp(s2));
      return (x - mean) / sd;
    }
  }
  return 0.0;
}

std::vector<double> cluster_centres(const SynthConfig& cfg, std::mt19937_64& gen) {
  std::normal_distribution<double> n01(0.0, 1.0);
  std::vector<double> centres(cfg.n_clusters * cfg.latent_dim);
  for (double& c : centres) c = cfg.center_spread * n01(gen);
  return centres;
}

void unit_direction(std::mt19937_64& gen, std::vector<double>& dir) {
  std::normal_distribution<double> n01(0.0, 1.0);
  double norm = 0.0;
  do {
    norm = 0.0;
    for (double& d : dir) {
      d = n01(gen);
      norm += d * d;
    }
  } while (norm == 0.0);
  norm = std::sqrt(norm);
  for (double& d : dir) d /= norm;
}

std::string make_id(const std::string& prefix, std::size_t i) {
  std::string digits = std::to_string(i);
  if (digits.size() < 6) digits.insert(0, 6 - digits.size(), '0');
  return prefix + "-" + digits;
}

}  // namespace

SynthData generate(const SynthConfig& cfg) {
  cfg.validate();
  const std::size_t dim = cfg.latent_dim;
  std::mt19937_64 scores_gen(substream_seed(cfg.seed, kScores));
  std::mt19937_64 noise_gen(substream_seed(cfg.seed, kNoise));
  std::mt19937_64 latent_gen(substream_seed(cfg.seed, kLatents));
  std::mt19937_64 train_gen(substream_seed(cfg.seed, kTrain));
  std::mt19937_64 reported_gen(substream_seed(cfg.seed, kReported));
  std::mt19937_64 traj_gen(substream_seed(cfg.seed, kTrajectories));
  std::mt19937_64 energy_gen(substream_seed(cfg.seed, kEnergies));

  // Centres are shared by training and query systems: they come from a
  // stream that depends only on the seed and the latent geometry.
  std::mt19937_64 centre_gen(substream_seed(cfg.seed, 0));
  const std::vector<double> centres = cluster_centres(cfg, centre_gen);

  std::normal_distribution<double> n01(0.0, 1.0);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::uniform_int_distribution<std::uint32_t> pick_atoms(cfg.atoms_min, cfg.atoms_max);
  std::uniform_int_distribution<std::size_t> pick_cluster(0, cfg.n_clusters - 1);
  std::uniform_int_distribution<std::uint32_t> pick_frames(cfg.frames_min, cfg.frames_max);

  SynthData out;
  out.records.reserve(cfg.n_systems);
  out.true_sigmas.reserve(cfg.n_systems);
  out.reported.reserve(cfg.n_systems);
  out.trajectories.reserve(cfg.n_systems);

  std::vector<std::string> ids;
  std::vector<std::uint32_t> counts;
  std::vector<float> rows;
  std::vector<double> dir(dim);

  for (std::size_t i = 0; i < cfg.n_systems; ++i) {
    const std::string id = make_id(cfg.id_prefix, i);
    const double score = 1.0 - u01(scores_gen);  // (0, 1]
    const double t = cfg.sigma_law.a * score + cfg.sigma_law.b;

    // latents
    const std::size_t cluster = pick_cluster(latent_gen);
    const std::uint32_t atoms = pick_atoms(latent_gen);
    for (std::uint32_t a = 0; a < atoms; ++a) {
      unit_direction(latent_gen, dir);
      for (std::size_t k = 0; k < dim; ++k) {
        const double v = centres[cluster * dim + k] + score * cfg.novelty_scale * dir[k] +
                         cfg.cluster_spread * n01(latent_gen);
        rows.push_back(static_cast<float>(v));
      }
    }
    ids.push_back(id);
    counts.push_back(atoms);

    // energies
    const double eps = t * draw_unit_noise(cfg.noise_family, cfg.skew_shape, noise_gen);
    const double e_true = cfg.energy_mean + cfg.energy_sd * n01(energy_gen);
    out.records.push_back({id, e_true + eps, e_true});
    out.true_sigmas.push_back(t);

    // reported sigma
    double reported = t;
    switch (cfg.distortion.kind) {
      case Distortion::Kind::none: break;
      case Distortion::Kind::scale: reported = cfg.distortion.factor * t; break;
      case Distortion::Kind::affine:
        reported = cfg.distortion.slope * t + cfg.distortion.intercept;
        break;
      case Distortion::Kind::noisy:
        reported = t * std::exp(cfg.distortion.jitter * n01(reported_gen));
        break;
    }
    out.reported.push_back({id, reported, UqMethod::external, false});

    // trajectory: member spread relaxes towards the true dispersion, and
    // the last frame's sample variance is exactly t^2
    const std::uint32_t n_frames = pick_frames(traj_gen);
    const std::uint32_t m = cfg.ensemble_members;
    const double e_pred = out.records.back().e_pred;
    std::vector<std::vector<double>> frames(n_frames, std::vector<double>(m));
    for (std::uint32_t f = 0; f < n_frames; ++f) {
      const bool last = f + 1 == n_frames;
      const double variance = last ? t * t : t * t * std::exp(0.5 * n01(traj_gen));
      const double centre = e_pred + 0.05 * static_cast<double>(n_frames - 1 - f);
      std::vector<double> dev(m);
      double mean = 0.0;
      for (double& d : dev) {
        d = n01(traj_gen);
        mean += d;
      }
      mean /= m;
      double ss = 0.0;
      for (double& d : dev) {
        d -= mean;
        ss += d * d;
      }
      const double scale = ss > 0.0 ? std::sqrt(variance * (m - 1) / ss) : 0.0;
      for (std::uint32_t j = 0; j < m; ++j) frames[f][j] = centre + scale * dev[j];
    }
    out.trajectories.emplace_back(id, std::move(frames));
  }
  out.latents = LatentMatrix(cfg.latent_dim, std::move(ids), std::move(counts), std::move(rows));

  // training systems sit on the cluster centres
  std::vector<std::string> train_ids;
  std::vector<std::uint32_t> train_counts;
  std::vector<float> train_rows;
  for (std::size_t i = 0; i < cfg.n_train_systems; ++i) {
    const std::size_t cluster = pick_cluster(train_gen);
    const std::uint32_t atoms = pick_atoms(train_gen);
    for (std::uint32_t a = 0; a < atoms; ++a) {
      for (std::size_t k = 0; k < dim; ++k) {
        train_rows.push_back(static_cast<float>(centres[cluster * dim + k] +
                                                cfg.cluster_spread * n01(train_gen)));
      }
    }
    train_ids.push_back(make_id(cfg.id_prefix + "-train", i));
    train_counts.push_back(atoms);
  }
  out.train_latents = LatentMatrix(cfg.latent_dim, std::move(train_ids), std::move(train_counts),
                                   std::move(train_rows));
  return out;
}

double oracle_auroc(std::span<const double> abs_errors, std::span<const double> sigmas,
                    double threshold) {
  if (abs_errors.size() != sigmas.size()) {
    throw Error(Errc::length_mismatch, "abs_errors and sigmas differ in length");
  }
  double concordant = 0.0;
  std::size_t pos = 0;
  std::size_t neg = 0;
  for (std::size_t i = 0; i < abs_errors.size(); ++i) {
    if (std::fabs(abs_errors[i]) > threshold) {
      ++pos;
    } else {
      ++neg;
    }
  }
  if (pos == 0 || neg == 0) throw Error(Errc::single_class, "oracle AUROC needs both classes");
  for (std::size_t i = 0; i < abs_errors.size(); ++i) {
    if (!(std::fabs(abs_errors[i]) > threshold)) continue;
    for (std::size_t j = 0; j < abs_errors.size(); ++j) {
      if (std::fabs(abs_errors[j]) > threshold) continue;
      if (sigmas[i] > sigmas[j]) {
        concordant += 1.0;
      } else if (sigmas[i] == sigmas[j]) {
        concordant += 0.5;
      }
    }
  }
  return concordant / (static_cast<double>(pos) * static_cast<double>(neg));
}

std::vector<double> oracle_nearest(const LatentMatrix& train, const LatentMatrix& query) {
  if (train.dim() != query.dim()) throw Error(Errc::dim_mismatch, "train and query dims differ");
  if (train.n_rows() == 0) throw Error(Errc::empty_train_set, "no training rows");
  std::vector<double> out(query.n_rows());
  for (std::size_t q = 0; q < query.n_rows(); ++q) {
    const auto x = query.row(q);
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < train.n_rows(); ++r) {
      const auto y = train.row(r);
      double acc = 0.0;
      for (std::size_t k = 0; k < train.dim(); ++k) {
        const double d = static_cast<double>(x[k]) - static_cast<double>(y[k]);
        acc += d * d;
      }
      best = std::min(best, std::sqrt(acc));
    }
    out[q] = best;
  }
  return out;
}

}  // namespace uqbench::synth
