#include "uqbench/model.hpp"

#include <cmath>
#include <numeric>

#include "uqbench/errors.hpp"

namespace uqbench {

std::vector<double> errors_of(std::span<const EnergyRecord> records) {
  std::vector<double> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(r.error());
  return out;
}

std::vector<double> sigmas_of(std::span<const UncertaintyEstimate> estimates) {
  std::vector<double> out;
  out.reserve(estimates.size());
  for (const auto& e : estimates) out.push_back(e.sigma);
  return out;
}

std::string_view to_string(UqMethod method) {
  switch (method) {
    case UqMethod::distance: return "distance";
    case UqMethod::ensemble: return "ensemble";
    case UqMethod::external: return "external";
  }
  return "external";
}

UqMethod parse_uq_method(std::string_view text) {
  if (text == "distance") return UqMethod::distance;
  if (text == "ensemble") return UqMethod::ensemble;
  if (text == "external") return UqMethod::external;
  throw Error(Errc::invalid_argument, "unknown uncertainty method '" + std::string(text) + "'");
}

LatentMatrix::LatentMatrix(std::uint32_t dim, std::vector<std::string> system_ids,
                           std::vector<std::uint32_t> atom_counts, std::vector<float> data)
    : dim_(dim),
      system_ids_(std::move(system_ids)),
      atom_counts_(std::move(atom_counts)),
      data_(std::move(data)) {
  if (dim_ == 0) throw Error(Errc::invalid_argument, "latent dimension must be positive");
  if (atom_counts_.size() != system_ids_.size()) {
    throw Error(Errc::length_mismatch, "atom_counts has " + std::to_string(atom_counts_.size()) +
                                           " entries but there are " +
                                           std::to_string(system_ids_.size()) + " systems");
  }
  offsets_.reserve(atom_counts_.size());
  std::size_t rows = 0;
  for (std::size_t s = 0; s < atom_counts_.size(); ++s) {
    if (atom_counts_[s] == 0) {
      throw Error(Errc::invalid_argument, "system '" + system_ids_[s] + "' has zero atoms");
    }
    offsets_.push_back(rows);
    rows += atom_counts_[s];
  }
  if (data_.size() != rows * dim_) {
    throw Error(Errc::length_mismatch, "latent data holds " + std::to_string(data_.size()) +
                                           " values, expected " + std::to_string(rows) + " rows x " +
                                           std::to_string(dim_));
  }
  for (std::size_t i = 0; i < data_.size(); ++i) {
    if (!std::isfinite(data_[i])) {
      throw Error(Errc::invalid_argument,
                  "non-finite latent component at row " + std::to_string(i / dim_));
    }
  }
  index_ids(system_ids_, "latent matrix");
}

TrajectoryEnsemble::TrajectoryEnsemble(std::string system_id,
                                       std::vector<std::vector<double>> frames)
    : system_id_(std::move(system_id)), frames_(std::move(frames)) {
  if (frames_.empty()) {
    throw Error(Errc::invalid_argument, "trajectory '" + system_id_ + "' has no frames");
  }
  const std::size_t members = frames_.front().size();
  for (std::size_t f = 0; f < frames_.size(); ++f) {
    if (frames_[f].size() != members) {
      throw Error(Errc::ragged_frames, "trajectory '" + system_id_ + "' frame " +
                                           std::to_string(f) + " has " +
                                           std::to_string(frames_[f].size()) +
                                           " members, frame 0 has " + std::to_string(members));
    }
  }
  if (members < 2) {
    throw Error(Errc::too_few_members,
                "trajectory '" + system_id_ + "' needs at least 2 ensemble members");
  }
}

std::unordered_map<std::string, std::size_t> index_ids(std::span<const std::string> ids,
                                                       std::string_view what) {
  std::unordered_map<std::string, std::size_t> out;
  out.reserve(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i].empty()) {
      throw Error(Errc::duplicate_id, std::string(what) + ": empty system_id at position " +
                                          std::to_string(i));
    }
    if (!out.emplace(ids[i], i).second) {
      throw Error(Errc::duplicate_id,
                  std::string(what) + ": duplicate system_id '" + ids[i] + "'");
    }
  }
  return out;
}

JoinedSample join(std::span<const EnergyRecord> records,
                  std::span<const UncertaintyEstimate> estimates) {
  std::vector<std::string> ids;
  ids.reserve(estimates.size());
  for (const auto& e : estimates) ids.push_back(e.system_id);
  std::unordered_map<std::string, std::size_t> by_id;
  try {
    by_id = index_ids(ids, "uncertainty estimates");
    std::vector<std::string> rec_ids;
    rec_ids.reserve(records.size());
    for (const auto& r : records) rec_ids.push_back(r.system_id);
    index_ids(rec_ids, "energy records");
  } catch (const Error& e) {
    throw Error(Errc::join_failure, e.what());
  }
  if (records.size() != estimates.size()) {
    throw Error(Errc::join_failure, std::to_string(records.size()) + " records but " +
                                        std::to_string(estimates.size()) + " estimates");
  }
  JoinedSample out;
  out.errors.reserve(records.size());
  out.sigmas.reserve(records.size());
  out.estimates.reserve(records.size());
  for (const auto& r : records) {
    auto it = by_id.find(r.system_id);
    if (it == by_id.end()) {
      throw Error(Errc::join_failure, "no uncertainty estimate for system '" + r.system_id + "'");
    }
    const auto& est = estimates[it->second];
    out.errors.push_back(r.error());
    out.sigmas.push_back(est.sigma);
    out.estimates.push_back(&est);
  }
  return out;
}

}  // namespace uqbench
