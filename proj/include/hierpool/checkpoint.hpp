#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "hierpool/gnn.hpp"
#include "hierpool/pool.hpp"

namespace hierpool {

/// Everything needed to reproduce a run; flags and config files both map
/// onto this.
struct RunConfig {
  std::string dataset = "hierarchical";  // hierarchical | expressivity | tu:<NAME>
  std::string data_dir;                  // TU root; HIERPOOL_DATA_ROOT when empty
  int dataset_size = 2000;
  std::uint64_t data_seed = 7;

  std::string dims = "32 32 [Pool] 32 32 [Pool] 32 4";
  std::vector<int> clusters = {10, 15};
  double merge_fraction = 0.1;

  int epochs = 2000;
  int batch_size = 64;
  double lr = 1e-3;
  double weight_decay = 5e-4;
  std::string cluster_mode = "batch";          // batch | global
  std::string grad_mode = "straight-through";  // straight-through | hyperplane
  int hyper_samples = 10;
  double hyper_sigma = -1.0;  // <= 0: scale-aware default
  double hyper_mix = 0.5;
  std::uint64_t seed = 1;
  int early_stop_patience = 0;
  int eval_every = 1;
  double budget = 1.0;  // epoch scaler for desk-size runs

  bool operator==(const RunConfig&) const = default;
};

nlohmann::json to_json(const RunConfig& config);
RunConfig run_config_from_json(const nlohmann::json& j);

nlohmann::json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const nlohmann::json& j);

struct Checkpoint {
  std::string kind;  // "help" | "baseline"
  HelpModel model;
  GcnBaseline baseline;
  RunConfig config;
  nlohmann::json metadata;
};

/// Versioned JSON container: config, weights, per-block centroids, seed and
/// metadata. Doubles serialize shortest-round-trip, so a reload reproduces
/// predictions bit-identically.
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace hierpool
