#pragma once

// JSON checkpoints, experiment configs and reports; CSV exports.

#include "mdreg/baselines.hpp"
#include "mdreg/experiment.hpp"
#include "mdreg/gol.hpp"
#include "mdreg/mdr.hpp"
#include "mdreg/synthetic.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mdreg::io {

inline constexpr int kSchemaVersion = 1;

/// Embedder, references and/or a regression head in one JSON document:
/// {schema_version, weight, bias, reference_points, groups, params, seed, step, head}.
struct Checkpoint {
  std::optional<eval::GolModel> gol;
  std::optional<baselines::LinearHead> head;
  HyperParams params;
  std::uint64_t seed = 0;
  std::size_t step = 0;
};

std::string checkpoint_to_json(const Checkpoint& checkpoint);
/// Throws ParameterError on malformed documents.
Checkpoint parse_checkpoint(std::string_view json);
Checkpoint read_checkpoint(const std::filesystem::path& path);

std::string read_text_file(const std::filesystem::path& path);

// Sub-object parsers; missing keys keep their defaults, unknown keys are rejected.
HyperParams parse_hyperparams(std::string_view json);
gol::TrainSchedule parse_train_schedule(std::string_view json);
eval::SyntheticSpec parse_synthetic_spec(std::string_view json);
std::string hyperparams_to_json(const HyperParams& params);
std::string synthetic_spec_to_json(const eval::SyntheticSpec& spec);

/// Where the source and target embeddings come from.
struct DataSource {
  std::optional<eval::SyntheticSpec> synthetic;
  std::filesystem::path source_path;
  std::filesystem::path target_path;  // empty when only training
  std::string source_domain = "source";
  std::string target_domain = "target";
};

struct ExperimentSetup {
  eval::ExperimentConfig config;
  DataSource data;
  std::optional<std::filesystem::path> checkpoint;
  std::uint64_t master_seed = 0;
};

/// Parses a versioned experiment config. Relative paths resolve against
/// `base_dir`. `seed_override` replaces the master seed; explicit "seeds"
/// win over seeds derived from (master seed, repeat index).
ExperimentSetup parse_experiment_config(std::string_view json, const std::filesystem::path& base_dir,
                                        std::optional<std::uint64_t> seed_override = std::nullopt);

/// Loads or generates the domains; file-load warnings are appended.
eval::Domains load_domains(const DataSource& data, std::vector<std::string>* warnings = nullptr);
/// Loads or generates the source domain only (training needs no target).
EmbeddingSet load_source_domain(const DataSource& data, std::vector<std::string>* warnings = nullptr);

std::string report_to_json(const eval::ExperimentReport& report);
/// `method,run,r2` for the main section.
std::string report_runs_csv(const eval::ExperimentReport& report);
/// `section,value,method,run,r2` for both sweeps.
std::string report_sweep_csv(const eval::ExperimentReport& report);

/// Graph triplets `i,j,w` (both orientations) and the JSON sidecar.
std::string graph_triplets_csv(const mdr::AffinityGraph& graph);
std::string graph_sidecar_json(Eigen::Index n, int k, double gamma, double alpha);
/// Dense matrix, header `s0,...,s{k-1}`.
std::string dense_matrix_csv(const Eigen::MatrixXd& m, std::string_view column_prefix);

std::string loss_trace_csv(const std::vector<gol::TrainRecord>& trace);

}  // namespace mdreg::io
