#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "uqbench/estimators.hpp"
#include "uqbench/model.hpp"

namespace uqbench::io {

// Line-delimited JSON streams. One object per line; blank lines are
// skipped. Numbers are written in shortest round-trip form.

/// Keys: system_id (string), e_pred (number), e_true (number).
std::vector<EnergyRecord> read_records(const std::filesystem::path& path);
void write_records(const std::filesystem::path& path, std::span<const EnergyRecord> records);

/// Keys: system_id, sigma, method (distance|ensemble|external), calibrated.
std::vector<UncertaintyEstimate> read_sigmas(const std::filesystem::path& path);
void write_sigmas(const std::filesystem::path& path,
                  std::span<const UncertaintyEstimate> estimates);

/// Keys: system_id, frames (array of equally sized arrays of numbers).
std::vector<TrajectoryEnsemble> read_trajectories(const std::filesystem::path& path);
void write_trajectories(const std::filesystem::path& path,
                        std::span<const TrajectoryEnsemble> trajectories);

// Binary formats, all integers little-endian.
//
// UQLT (latent matrix):
//   "UQLT" | u32 version = 1 | u32 dim | u64 n_systems
//   n_systems x ( u16 id_len | id bytes (UTF-8) | u32 atom_count )
//   sum(atom_count) x dim x f32 (IEEE-754, row-major)
//
// UQIX (distance index):
//   "UQIX" | u32 version = 1 | UQLT payload of the training latents
//   | u64 n_means | n_means x dim x f32 per-system mean vectors

inline constexpr std::uint32_t kFormatVersion = 1;

std::vector<std::uint8_t> encode_latents(const LatentMatrix& latents);
LatentMatrix decode_latents(std::span<const std::uint8_t> bytes);
LatentMatrix read_latents(const std::filesystem::path& path);
void write_latents(const std::filesystem::path& path, const LatentMatrix& latents);

std::vector<std::uint8_t> encode_index(const DistanceIndex& index);
DistanceIndex decode_index(std::span<const std::uint8_t> bytes);
DistanceIndex read_index(const std::filesystem::path& path);
void write_index(const std::filesystem::path& path, const DistanceIndex& index);

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path);
void write_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

/// Hex SHA-256 of a file's contents.
std::string file_sha256(const std::filesystem::path& path);

/// Calibration/test partition of one dataset with disjoint system_id sets.
struct DatasetSplit {
  std::vector<EnergyRecord> calibration;
  std::vector<EnergyRecord> test;
};

/// Seeded random partition; round(fraction * n) records go to calibration.
/// Input order is preserved within each side.
DatasetSplit split_records(std::span<const EnergyRecord> records, double calibration_fraction,
                           std::uint64_t seed);

/// Throws join_failure if the two record sets share a system_id.
void require_disjoint(std::span<const EnergyRecord> a, std::span<const EnergyRecord> b);

/// The estimates for `records`, in record order. Estimates for other systems
/// are dropped (e.g. when `records` is one split of a dataset); a record
/// without an estimate is a join_failure.
std::vector<UncertaintyEstimate> align_estimates(std::span<const EnergyRecord> records,
                                                 std::span<const UncertaintyEstimate> estimates);

}  // namespace uqbench::io
