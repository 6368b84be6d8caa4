#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "uqbench/model.hpp"

namespace uqbench {

/// Exact nearest-neighbour index over every training atom row, plus one
/// mean latent vector per training system for system-level distances.
/// Immutable once built; safe to query from several threads.
class DistanceIndex {
 public:
  /// Adopts precomputed system means (n_systems x dim, row-major).
  DistanceIndex(LatentMatrix train, std::vector<float> system_means);

  std::uint32_t dim() const noexcept { return train_.dim(); }
  std::size_t row_count() const noexcept { return train_.n_rows(); }
  const LatentMatrix& train() const noexcept { return train_; }
  std::span<const float> system_means() const noexcept { return system_means_; }

  friend bool operator==(const DistanceIndex&, const DistanceIndex&) = default;

 private:
  LatentMatrix train_;
  std::vector<float> system_means_;
};

/// Per-system mean of the atom rows, accumulated in double and stored as float.
std::vector<float> system_mean_vectors(const LatentMatrix& latents);

/// Throws empty_train_set when `train` has no rows.
DistanceIndex build_index(LatentMatrix train);

/// For every query atom, the minimum Euclidean distance to any training
/// row; result[s][a] is atom a of query system s.
std::vector<std::vector<double>> nearest_distances(const DistanceIndex& index,
                                                   const LatentMatrix& query);

enum class AggregationMode { atom_mean, atom_sum, atom_max, system_mean };
enum class FrameStrategy { first, last, mean, max };

AggregationMode parse_aggregation(std::string_view text);
FrameStrategy parse_frame_strategy(std::string_view text);
std::string_view to_string(AggregationMode mode);
std::string_view to_string(FrameStrategy strategy);

double reduce_distances(std::span<const double> per_atom, AggregationMode mode);

/// Uncalibrated latent-distance uncertainty, one estimate per query system.
/// The atom_* modes reduce per-atom nearest distances; system_mean compares
/// the query system's mean vector against the training system means.
std::vector<UncertaintyEstimate> distance_uncertainty(const DistanceIndex& index,
                                                      const LatentMatrix& query,
                                                      AggregationMode mode);

/// Sample variance (divisor m-1) across members, one value per frame.
std::vector<double> ensemble_frame_variances(const TrajectoryEnsemble& traj);

double select_variance(std::span<const double> frame_variances, FrameStrategy strategy);

/// sigma = sqrt(variance selected by strategy), uncalibrated.
UncertaintyEstimate ensemble_uncertainty(const TrajectoryEnsemble& traj, FrameStrategy strategy);

}  // namespace uqbench
