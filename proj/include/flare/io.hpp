#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "flare/data.hpp"
#include "flare/neural_field.hpp"

namespace flare::io {

namespace fs = std::filesystem;

// Point file, little-endian:
//   "FLD1" | u32 n | n x (x, y, z, u_x, u_y, u_z) as f64
void write_point_file(const fs::path& path, const Eigen::MatrixXd& coords,
                      const Eigen::MatrixXd& targets);
void read_point_file(const fs::path& path, Eigen::MatrixXd& coords, Eigen::MatrixXd& targets);

/// Dataset directory: manifest.json plus one point file per sample.
void save_dataset(const fs::path& dir, const data::Dataset& dataset);
data::Dataset load_dataset(const fs::path& dir);

void save_split(const fs::path& path, const data::Split& split);
data::Split load_split(const fs::path& path);

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Weight container, little-endian:
///   "FLW1" | u32 version | u32 octaves | u32 width count | widths (u32) |
///   u32 N | N columns of f64 (column length implied by the payload)
/// The JSON sidecar `<path>.json` carries everything else (kind tag,
/// parameter matrix, coefficients, seeds).
struct Checkpoint {
  std::uint32_t octaves = 0;
  std::vector<std::uint32_t> widths;
  Eigen::MatrixXd columns;  // D x N
  nlohmann::json meta = nlohmann::json::object();

  /// Field architecture when widths describe one (first = 3 + 6L, last = 3).
  nn::Architecture architecture() const;
  static Checkpoint for_architecture(const nn::Architecture& arch, Eigen::MatrixXd columns);
};

fs::path sidecar_path(const fs::path& checkpoint);
void save_checkpoint(const fs::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const fs::path& path);

/// Write bytes atomically enough for our purposes (temp file then rename).
void write_text(const fs::path& path, const std::string& text);
std::string read_text(const fs::path& path);

nlohmann::json to_json(const Eigen::VectorXd& v);
nlohmann::json to_json(const Eigen::MatrixXd& m);  // array of rows
Eigen::VectorXd vector_from_json(const nlohmann::json& j);
Eigen::MatrixXd matrix_from_json(const nlohmann::json& j);

}  // namespace flare::io
