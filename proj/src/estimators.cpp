#include "uqbench/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "uqbench/errors.hpp"
#include "uqbench/parallel.hpp"

namespace uqbench {

DistanceIndex::DistanceIndex(LatentMatrix train, std::vector<float> system_means)
    : train_(std::move(train)), system_means_(std::move(system_means)) {
  if (train_.n_rows() == 0) throw Error(Errc::empty_train_set, "training latents have no rows");
  if (system_means_.size() != train_.n_systems() * train_.dim()) {
    throw Error(Errc::length_mismatch, "system means block does not match the training systems");
  }
}

std::vector<float> system_mean_vectors(const LatentMatrix& latents) {
  const std::size_t dim = latents.dim();
  std::vector<float> means(latents.n_systems() * dim);
  std::vector<double> acc(dim);
  for (std::size_t s = 0; s < latents.n_systems(); ++s) {
    std::fill(acc.begin(), acc.end(), 0.0);
    const auto block = latents.system_block(s);
    const std::size_t atoms = latents.atom_counts()[s];
    for (std::size_t a = 0; a < atoms; ++a) {
      for (std::size_t k = 0; k < dim; ++k) acc[k] += block[a * dim + k];
    }
    for (std::size_t k = 0; k < dim; ++k) {
      means[s * dim + k] = static_cast<float>(acc[k] / static_cast<double>(atoms));
    }
  }
  return means;
}

DistanceIndex build_index(LatentMatrix train) {
  if (train.n_rows() == 0) throw Error(Errc::empty_train_set, "training latents have no rows");
  auto means = system_mean_vectors(train);
  return DistanceIndex(std::move(train), std::move(means));
}

namespace {

void require_dim(const DistanceIndex& index, const LatentMatrix& query) {
  if (query.dim() != index.dim()) {
    throw Error(Errc::dim_mismatch, "query latent dim " + std::to_string(query.dim()) +
                                        " does not match index dim " +
                                        std::to_string(index.dim()));
  }
}

// Minimum squared distance from each of `n_query` double rows to the float
// rows of `train`. The query block is scanned together against every
// training row so each training row is read once per block.
void min_squared_distances(std::span<const double> queries, std::size_t n_query,
                           std::span<const float> train, std::size_t dim,
                           std::span<double> best) {
  std::fill(best.begin(), best.end(), std::numeric_limits<double>::infinity());
  const std::size_t n_train = train.size() / dim;
  for (std::size_t r = 0; r < n_train; ++r) {
    const float* t = train.data() + r * dim;
    for (std::size_t q = 0; q < n_query; ++q) {
      const double* x = queries.data() + q * dim;
      double acc = 0.0;
      for (std::size_t k = 0; k < dim; ++k) {
        const double d = x[k] - static_cast<double>(t[k]);
        acc += d * d;
      }
      best[q] = std::min(best[q], acc);
    }
  }
}

}  // namespace

std::vector<std::vector<double>> nearest_distances(const DistanceIndex& index,
                                                   const LatentMatrix& query) {
  require_dim(index, query);
  const std::size_t dim = index.dim();
  std::vector<std::vector<double>> out(query.n_systems());
  parallel_for(query.n_systems(), [&](std::size_t begin, std::size_t end) {
    std::vector<double> rows;
    for (std::size_t s = begin; s < end; ++s) {
      const auto block = query.system_block(s);
      const std::size_t atoms = query.atom_counts()[s];
      rows.assign(block.begin(), block.end());
      out[s].resize(atoms);
      min_squared_distances(rows, atoms, index.train().data(), dim, out[s]);
      for (double& d : out[s]) d = std::sqrt(d);
    }
  });
  return out;
}

AggregationMode parse_aggregation(std::string_view text) {
  if (text == "atom-mean" || text == "atom_mean") return AggregationMode::atom_mean;
  if (text == "atom-sum" || text == "atom_sum") return AggregationMode::atom_sum;
  if (text == "atom-max" || text == "atom_max") return AggregationMode::atom_max;
  if (text == "system-mean" || text == "system_mean") return AggregationMode::system_mean;
  throw Error(Errc::invalid_argument, "unknown aggregation '" + std::string(text) +
                                          "' (allowed: atom-mean, atom-sum, atom-max, system-mean)");
}

FrameStrategy parse_frame_strategy(std::string_view text) {
  if (text == "first") return FrameStrategy::first;
  if (text == "last") return FrameStrategy::last;
  if (text == "mean") return FrameStrategy::mean;
  if (text == "max") return FrameStrategy::max;
  throw Error(Errc::invalid_argument, "unknown frame strategy '" + std::string(text) +
                                          "' (allowed: first, last, mean, max)");
}

std::string_view to_string(AggregationMode mode) {
  switch (mode) {
    case AggregationMode::atom_mean: return "atom-mean";
    case AggregationMode::atom_sum: return "atom-sum";
    case AggregationMode::atom_max: return "atom-max";
    case AggregationMode::system_mean: return "system-mean";
  }
  return "atom-mean";
}

std::string_view to_string(FrameStrategy strategy) {
  switch (strategy) {
    case FrameStrategy::first: return "first";
    case FrameStrategy::last: return "last";
    case FrameStrategy::mean: return "mean";
    case FrameStrategy::max: return "max";
  }
  return "last";
}

double reduce_distances(std::span<const double> per_atom, AggregationMode mode) {
  if (per_atom.empty()) throw Error(Errc::invalid_argument, "no per-atom distances to reduce");
  const double sum = std::accumulate(per_atom.begin(), per_atom.end(), 0.0);
  switch (mode) {
    case AggregationMode::atom_mean: return sum / static_cast<double>(per_atom.size());
    case AggregationMode::atom_sum: return sum;
    case AggregationMode::atom_max: return *std::max_element(per_atom.begin(), per_atom.end());
    case AggregationMode::system_mean: break;
  }
  throw Error(Errc::invalid_argument, "system-mean is not a per-atom reduction");
}

std::vector<UncertaintyEstimate> distance_uncertainty(const DistanceIndex& index,
                                                      const LatentMatrix& query,
                                                      AggregationMode mode) {
  require_dim(index, query);
  std::vector<double> sigma(query.n_systems());
  if (mode == AggregationMode::system_mean) {
    const std::size_t dim = index.dim();
    const std::vector<float> query_means = system_mean_vectors(query);
    parallel_for(query.n_systems(), [&](std::size_t begin, std::size_t end) {
      std::vector<double> mean(dim);
      double best = 0.0;
      for (std::size_t s = begin; s < end; ++s) {
        std::copy_n(query_means.begin() + static_cast<std::ptrdiff_t>(s * dim), dim, mean.begin());
        min_squared_distances(mean, 1, index.system_means(), dim, {&best, 1});
        sigma[s] = std::sqrt(best);
      }
    });
  } else {
    const auto per_atom = nearest_distances(index, query);
    for (std::size_t s = 0; s < per_atom.size(); ++s) sigma[s] = reduce_distances(per_atom[s], mode);
  }
  std::vector<UncertaintyEstimate> out;
  out.reserve(sigma.size());
  for (std::size_t s = 0; s < sigma.size(); ++s) {
    out.push_back({query.system_ids()[s], sigma[s], UqMethod::distance, false});
  }
  return out;
}

std::vector<double> ensemble_frame_variances(const TrajectoryEnsemble& traj) {
  const std::size_t m = traj.n_members();
  if (m < 2) throw Error(Errc::too_few_members, "ensemble variance needs at least 2 members");
  std::vector<double> out;
  out.reserve(traj.n_frames());
  for (const auto& frame : traj.frames()) {
    const double mean = std::accumulate(frame.begin(), frame.end(), 0.0) / static_cast<double>(m);
    double ss = 0.0;
    for (double e : frame) ss += (e - mean) * (e - mean);
    out.push_back(ss / static_cast<double>(m - 1));
  }
  return out;
}

double select_variance(std::span<const double> v, FrameStrategy strategy) {
  if (v.empty()) throw Error(Errc::invalid_argument, "trajectory has no frames");
  switch (strategy) {
    case FrameStrategy::first: return v.front();
    case FrameStrategy::last: return v.back();
    case FrameStrategy::mean: {
      const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
      const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
      return std::clamp(mean, *lo, *hi);
    }
    case FrameStrategy::max: return *std::max_element(v.begin(), v.end());
  }
  return v.back();
}

UncertaintyEstimate ensemble_uncertainty(const TrajectoryEnsemble& traj, FrameStrategy strategy) {
  const auto variances = ensemble_frame_variances(traj);
  return {traj.system_id(), std::sqrt(select_variance(variances, strategy)), UqMethod::ensemble,
          false};
}

}  // namespace uqbench
