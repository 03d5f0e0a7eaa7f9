#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "dpanther/sim.hpp"
#include "dpanther/student.hpp"

namespace dpanther {

/// One JSON object per line:
///   {"observation": [43 reals], "actions": [[13 reals], ...], "costs": [...]}
void write_dataset(const std::filesystem::path& path, std::span<const Demonstration> data);
std::vector<Demonstration> read_dataset(const std::filesystem::path& path);

/// Serializes a demonstration exactly as one dataset line (without newline).
std::string demonstration_to_json(const Demonstration& demo);
Demonstration demonstration_from_json(const std::string& line);

/// Checkpoint: {"format": "dpanther-policy", "version": 1, "arch": [...],
/// "normalizer": {...}, "weights": [...]}; doubles round-trip exactly.
void save_policy(const std::filesystem::path& path, const Policy& policy);
Policy load_policy(const std::filesystem::path& path);

/// "epoch,loss" rows preceded by a comment line carrying the config hash.
void write_loss_csv(const std::filesystem::path& path, std::span<const double> loss_curve,
                    const std::string& config_hash);

/// ReplanRecord as a JSON object (one mission-log line).
std::string replan_record_to_json(const ReplanRecord& record);

/// 16 hex digits of the 64-bit FNV-1a hash of `text`.
std::string fnv1a_hex(const std::string& text);

}  // namespace dpanther
