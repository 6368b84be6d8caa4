#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace uqbench {

/// Predicted and reference relaxed energy (eV) for one system.
struct EnergyRecord {
  std::string system_id;
  double e_pred = 0.0;
  double e_true = 0.0;

  double error() const noexcept { return e_pred - e_true; }
};

inline double error(const EnergyRecord& record) noexcept { return record.error(); }

std::vector<double> errors_of(std::span<const EnergyRecord> records);

enum class UqMethod { distance, ensemble, external };

std::string_view to_string(UqMethod method);
UqMethod parse_uq_method(std::string_view text);

/// Scalar dispersion (eV) attached to one system.
struct UncertaintyEstimate {
  std::string system_id;
  double sigma = 0.0;
  UqMethod method = UqMethod::external;
  bool calibrated = false;
};

std::vector<double> sigmas_of(std::span<const UncertaintyEstimate> estimates);

/// Per-atom latent vectors for a set of systems, stored row-major with one
/// row per atom. Rows of system s are contiguous and follow those of s-1.
class LatentMatrix {
 public:
  LatentMatrix() = default;
  LatentMatrix(std::uint32_t dim, std::vector<std::string> system_ids,
               std::vector<std::uint32_t> atom_counts, std::vector<float> data);

  std::uint32_t dim() const noexcept { return dim_; }
  std::size_t n_systems() const noexcept { return system_ids_.size(); }
  std::size_t n_rows() const noexcept { return dim_ == 0 ? 0 : data_.size() / dim_; }

  const std::vector<std::string>& system_ids() const noexcept { return system_ids_; }
  const std::vector<std::uint32_t>& atom_counts() const noexcept { return atom_counts_; }
  std::span<const float> data() const noexcept { return data_; }

  std::span<const float> row(std::size_t r) const noexcept {
    return {data_.data() + r * dim_, dim_};
  }
  /// First row index of system s.
  std::size_t row_offset(std::size_t s) const noexcept { return offsets_[s]; }
  /// All rows of system s as one contiguous block.
  std::span<const float> system_block(std::size_t s) const noexcept {
    return {data_.data() + offsets_[s] * dim_, std::size_t{atom_counts_[s]} * dim_};
  }

  friend bool operator==(const LatentMatrix&, const LatentMatrix&) = default;

 private:
  std::uint32_t dim_ = 0;
  std::vector<std::string> system_ids_;
  std::vector<std::uint32_t> atom_counts_;
  std::vector<float> data_;
  std::vector<std::size_t> offsets_;
};

/// Member energy predictions (eV) along one relaxation trajectory.
/// frames()[f][m] is member m at frame f.
class TrajectoryEnsemble {
 public:
  TrajectoryEnsemble(std::string system_id, std::vector<std::vector<double>> frames);

  const std::string& system_id() const noexcept { return system_id_; }
  const std::vector<std::vector<double>>& frames() const noexcept { return frames_; }
  std::size_t n_frames() const noexcept { return frames_.size(); }
  std::size_t n_members() const noexcept { return frames_.front().size(); }

 private:
  std::string system_id_;
  std::vector<std::vector<double>> frames_;
};

struct IntervalCI {
  double lo = 0.0;
  double hi = 0.0;
  double level = 0.95;
  /// Set when the bootstrap distribution collapsed to a single value.
  bool degenerate = false;

  bool contains(double x) const noexcept { return lo <= x && x <= hi; }
};

struct CalibrationBin {
  double rmv = 0.0;
  double rmse = 0.0;
  std::size_t count = 0;
  double rmse_ci_lo = 0.0;
  double rmse_ci_hi = 0.0;
};

/// Line RMSE = slope * RMV + intercept through binned calibration points.
struct CalibrationFit {
  double slope = 1.0;
  double intercept = 0.0;
  double fit_r2 = 1.0;
  double parity_r2 = 1.0;
  std::size_t n_bins = 0;
};

inline constexpr double kUndefined = std::numeric_limits<double>::quiet_NaN();

struct MetricsReport {
  double parity_r2 = kUndefined;
  double fit_r2 = kUndefined;
  double slope = kUndefined;
  double intercept = kUndefined;
  double nll = kUndefined;
  double spearman_rho = kUndefined;
  double auroc = kUndefined;
  double miscal_area = kUndefined;
  double var_z = kUndefined;
  IntervalCI ci_var_z;
  bool calibrated_flag = false;
  std::size_t n = 0;
  std::vector<std::string> warnings;
};

/// Maps system_id -> position. Throws duplicate_id on repeated or empty ids;
/// `what` names the source in the message.
std::unordered_map<std::string, std::size_t> index_ids(std::span<const std::string> ids,
                                                       std::string_view what);

/// Pairs every record with its estimate by system_id. Both sides must carry
/// exactly the same id set; otherwise join_failure.
struct JoinedSample {
  std::vector<double> errors;
  std::vector<double> sigmas;
  std::vector<const UncertaintyEstimate*> estimates;
};

JoinedSample join(std::span<const EnergyRecord> records,
                  std::span<const UncertaintyEstimate> estimates);

}  // namespace uqbench
