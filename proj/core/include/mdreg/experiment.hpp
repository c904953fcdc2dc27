#pragma once

// Few-shot cross-domain evaluation: prepares source-trained models once, then
// for every seed draws a fresh target support set, runs each method on the
// remaining target rows and scores it with R².

#include "mdreg/baselines.hpp"
#include "mdreg/gol.hpp"
#include "mdreg/types.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mdreg::eval {

enum class Method {
  kRegression,     // source-trained probe applied as is
  kRegressionCal,  // probe + linear calibration on the support set
  kKnn,            // weighted kNN on backbone embeddings
  kGolKnn,         // weighted kNN on GOL embeddings
  kGolMdr,         // diffusion readout on GOL embeddings
  kGolFtMdr,       // GOL embedder fine-tuned on the support set, then diffusion
  kProbeFt,        // probe fine-tuned on the support set
};

std::string_view method_name(Method m);
std::optional<Method> parse_method(std::string_view name);
/// All method names in declaration order.
std::vector<std::string> method_names();

bool needs_gol(Method m);
bool needs_probe(Method m);

struct ProbeSettings {
  double ridge_lambda = 1e-3;
  std::size_t finetune_steps = 200;
  double finetune_learning_rate = 0.05;
};

struct GolFinetuneSettings {
  std::size_t steps = 50;
  double learning_rate = 1e-3;
  std::size_t batch_size = 32;
};

struct ExperimentConfig {
  std::vector<Method> methods;
  int shots = 5;
  int group_count = 5;
  std::vector<std::uint64_t> seeds;  // one repeat per seed
  HyperParams params;
  gol::TrainSchedule train;  // source-domain GOL training
  ProbeSettings probe;
  GolFinetuneSettings gol_finetune;
  std::vector<int> shots_sweep;
  std::vector<int> kv_sweep;

  /// Throws ParameterError on empty methods, repeated seeds, bad counts.
  void validate() const;
};

/// The trained GOL feature extractor plus the groups it was trained with.
struct GolModel {
  gol::LinearEmbedder embedder;
  ReferencePoints refs;
  ValueGroups groups;
};

/// Source and target backbone embeddings.
struct Domains {
  EmbeddingSet source;
  EmbeddingSet target;
};

/// Models trained on the source domain (or loaded from a checkpoint).
struct PreparedModels {
  std::optional<GolModel> gol;
  std::optional<baselines::LinearHead> probe;
};

/// Trains whatever `config.methods` (and sweeps) need that `given` lacks.
PreparedModels prepare_models(const ExperimentConfig& config, const Domains& domains, PreparedModels given = {});

/// Trains a GOL embedder on the source domain with percentile group bounds.
GolModel train_gol_model(const EmbeddingSet& source, int group_count, const HyperParams& params,
                         const gol::TrainSchedule& schedule);

struct SingleRun {
  Method method = Method::kKnn;
  std::uint64_t seed = 0;
  int shots = 0;
  SupportSet support;
  std::vector<std::size_t> query_rows;  // target rows that were scored
  std::vector<double> predictions;      // aligned with query_rows
  double r2 = 0.0;
  std::vector<std::string> warnings;
};

/// Evaluation state shared by all runs over one (domains, models) pair.
class Evaluator {
 public:
  Evaluator(const ExperimentConfig& config, const Domains& domains, const PreparedModels& models);

  /// Draws the support for `seed` and runs `method`. `k_v` overrides the
  /// config's diffusion readout width.
  SingleRun run(Method method, int shots, std::uint64_t seed, std::optional<int> k_v = std::nullopt) const;

  const ValueGroups& target_groups() const { return target_groups_; }
  bool target_bounds_fallback() const { return target_fallback_; }

 private:
  std::vector<double> predict(Method method, const SupportSet& support, const std::vector<std::size_t>& queries,
                              int shots, int k_v, std::uint64_t seed, std::vector<std::string>& warnings) const;
  std::vector<double> diffuse_predict(const RowMatrix& embedded, const SupportSet& support,
                                      const std::vector<std::size_t>& queries, int shots, int k_v,
                                      std::vector<std::string>& warnings) const;

  const ExperimentConfig& config_;
  const Domains& domains_;
  const PreparedModels& models_;
  ValueGroups target_groups_;
  bool target_fallback_ = false;
  std::optional<RowMatrix> gol_target_;  // GOL embeddings of the target rows
};

struct MethodSummary {
  Method method = Method::kKnn;
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation; 0 for a single run
  double median = 0.0;
  std::vector<double> runs;  // R² per successful run, in seed order
  std::vector<std::string> errors;
  std::vector<std::string> warnings;
  bool complete = true;
};

struct SweepSection {
  std::string parameter;  // "shots" or "k_v"
  int value = 0;
  std::vector<MethodSummary> methods;
};

struct ExperimentReport {
  ExperimentConfig config;
  std::vector<MethodSummary> methods;
  double label_shift_w1 = 0.0;
  ValueGroups target_groups{0.0, 1.0, 1};
  std::vector<SweepSection> shots_sweep;
  std::vector<SweepSection> kv_sweep;
  std::vector<std::string> warnings;
};

ExperimentReport run_experiment(const ExperimentConfig& config, const Domains& domains,
                                const PreparedModels& given = {});

/// Mean, sample standard deviation and median of successful runs.
MethodSummary summarize(Method method, std::vector<double> runs);

}  // namespace mdreg::eval
