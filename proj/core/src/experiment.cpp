#include "mdreg/experiment.hpp"

#include "mdreg/mdr.hpp"
#include "mdreg/metrics.hpp"
#include "mdreg/support.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <set>

namespace mdreg::eval {

namespace {

constexpr std::array<std::pair<Method, std::string_view>, 7> kMethodNames{{
    {Method::kRegression, "regression"},
    {Method::kRegressionCal, "regression_cal"},
    {Method::kKnn, "knn"},
    {Method::kGolKnn, "gol_knn"},
    {Method::kGolMdr, "gol_mdr"},
    {Method::kGolFtMdr, "gol_ft_mdr"},
    {Method::kProbeFt, "probe_ft"},
}};

RowMatrix gather_rows(const RowMatrix& m, const std::vector<std::size_t>& rows) {
  RowMatrix out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i)
    out.row(static_cast<Eigen::Index>(i)) = m.row(static_cast<Eigen::Index>(rows[i]));
  return out;
}

std::vector<double> gather(const std::vector<double>& v, const std::vector<std::size_t>& rows) {
  std::vector<double> out;
  out.reserve(rows.size());
  for (auto r : rows) out.push_back(v[r]);
  return out;
}

}  // namespace

std::string_view method_name(Method m) {
  for (const auto& [method, name] : kMethodNames)
    if (method == m) return name;
  return "unknown";
}

std::optional<Method> parse_method(std::string_view name) {
  for (const auto& [method, n] : kMethodNames)
    if (n == name) return method;
  return std::nullopt;
}

std::vector<std::string> method_names() {
  std::vector<std::string> out;
  for (const auto& [method, name] : kMethodNames) out.emplace_back(name);
  return out;
}

bool needs_gol(Method m) { return m == Method::kGolKnn || m == Method::kGolMdr || m == Method::kGolFtMdr; }

bool needs_probe(Method m) {
  return m == Method::kRegression || m == Method::kRegressionCal || m == Method::kProbeFt;
}

void ExperimentConfig::validate() const {
  if (methods.empty()) throw ParameterError("no methods configured");
  if (shots < 1) throw ParameterError("shots must be >= 1");
  if (group_count < 2) throw ParameterError("group count must be >= 2");
  if (seeds.empty()) throw ParameterError("at least one seed (repeat) is required");
  if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size())
    throw ParameterError("seeds must be distinct");
  for (int n : shots_sweep)
    if (n < 1) throw ParameterError("shots sweep values must be >= 1");
  for (int k : kv_sweep)
    if (k < 1) throw ParameterError("k_v sweep values must be >= 1");
  params.validate();
}

GolModel train_gol_model(const EmbeddingSet& source, int group_count, const HyperParams& params,
                         const gol::TrainSchedule& schedule) {
  const auto bounds = compute_group_bounds(source.labels, group_count);
  auto trained = gol::train_toy_embedder(source.vectors, source.labels, bounds.groups, params, schedule);
  return GolModel{std::move(trained.embedder), std::move(trained.refs), bounds.groups};
}

PreparedModels prepare_models(const ExperimentConfig& config, const Domains& domains, PreparedModels given) {
  const bool want_gol = std::any_of(config.methods.begin(), config.methods.end(), needs_gol);
  const bool want_probe = std::any_of(config.methods.begin(), config.methods.end(), needs_probe);
  if (want_gol && !given.gol)
    given.gol = train_gol_model(domains.source, config.group_count, config.params, config.train);
  if (want_probe && !given.probe)
    given.probe = baselines::fit_linear_probe(domains.source, config.probe.ridge_lambda);
  return given;
}

Evaluator::Evaluator(const ExperimentConfig& config, const Domains& domains, const PreparedModels& models)
    : config_(config),
      domains_(domains),
      models_(models),
      target_groups_(compute_group_bounds(domains.target.labels, config.group_count).groups) {
  target_fallback_ = domains.target.size() < 100;
  if (models.gol) gol_target_ = models.gol->embedder.embed_all(domains.target.vectors);
}

SingleRun Evaluator::run(Method method, int shots, std::uint64_t seed, std::optional<int> k_v) const {
  SingleRun r;
  r.method = method;
  r.seed = seed;
  r.shots = shots;
  r.support = sample_support(domains_.target, target_groups_, shots, seed);
  r.warnings = r.support.warnings;
  r.query_rows = query_rows(domains_.target.size(), r.support);
  if (r.query_rows.size() < 2) throw ParameterError("fewer than two target rows left to score");
  const int readout = k_v.value_or(config_.params.resolved_k_v(shots));
  r.predictions = predict(method, r.support, r.query_rows, shots, readout, seed, r.warnings);
  r.r2 = r2_score(gather(domains_.target.labels, r.query_rows), r.predictions);
  return r;
}

std::vector<double> Evaluator::diffuse_predict(const RowMatrix& embedded, const SupportSet& support,
                                               const std::vector<std::size_t>& queries, int shots, int k_v,
                                               std::vector<std::string>& warnings) const {
  const int k = config_.params.resolved_knn_k(shots);
  auto build = mdr::build_affinity(embedded, k, config_.params.diffusion_gamma);
  warnings.insert(warnings.end(), build.warnings.begin(), build.warnings.end());
  const mdr::SupportMatrix s(embedded.rows(), support.indices);
  const auto solved = mdr::diffuse_closed(build.graph, s, config_.params.diffusion_alpha);
  Eigen::MatrixXd query_scores(static_cast<Eigen::Index>(queries.size()), solved.scores.cols());
  for (std::size_t i = 0; i < queries.size(); ++i)
    query_scores.row(static_cast<Eigen::Index>(i)) = solved.scores.row(static_cast<Eigen::Index>(queries[i]));
  const int width = std::min<int>(k_v, static_cast<int>(support.size()));
  if (width < k_v) warnings.push_back("k_v reduced to the support size " + std::to_string(width));
  return mdr::predict_mdr(query_scores, support.labels, width);
}

std::vector<double> Evaluator::predict(Method method, const SupportSet& support,
                                       const std::vector<std::size_t>& queries, int shots, int k_v,
                                       std::uint64_t seed, std::vector<std::string>& warnings) const {
  const auto& target = domains_.target;
  const int knn_k = std::min<int>(config_.params.resolved_knn_k(shots), static_cast<int>(support.size()));

  if (needs_gol(method) && !models_.gol) throw ParameterError(std::string(method_name(method)) + " needs a GOL model");
  if (needs_probe(method) && !models_.probe)
    throw ParameterError(std::string(method_name(method)) + " needs a regression head");

  switch (method) {
    case Method::kRegression:
      return models_.probe->predict_all(gather_rows(target.vectors, queries));
    case Method::kRegressionCal: {
      const auto raw_support = models_.probe->predict_all(gather_rows(target.vectors, support.indices));
      const auto cal = baselines::calibrate_linear(raw_support, support.labels);
      auto preds = models_.probe->predict_all(gather_rows(target.vectors, queries));
      for (auto& p : preds) p = cal.apply(p);
      return preds;
    }
    case Method::kKnn:
      return baselines::predict_knn(gather_rows(target.vectors, queries), target, support, knn_k);
    case Method::kGolKnn: {
      const RowMatrix& emb = *gol_target_;
      return baselines::predict_knn(gather_rows(emb, queries), gather_rows(emb, support.indices), support.labels,
                                    knn_k);
    }
    case Method::kGolMdr:
      return diffuse_predict(*gol_target_, support, queries, shots, k_v, warnings);
    case Method::kGolFtMdr: {
      gol::TrainSchedule schedule;
      schedule.learning_rate = config_.gol_finetune.learning_rate;
      schedule.steps = config_.gol_finetune.steps;
      schedule.batch_size = config_.gol_finetune.batch_size;
      schedule.seed = seed;
      schedule.embedding_dim = static_cast<int>(models_.gol->embedder.output_dim());
      auto tuned = gol::continue_training(gather_rows(target.vectors, support.indices), support.labels,
                                          target_groups_, config_.params, schedule, models_.gol->embedder,
                                          models_.gol->refs);
      return diffuse_predict(tuned.embedder.embed_all(target.vectors), support, queries, shots, k_v, warnings);
    }
    case Method::kProbeFt: {
      const auto tuned =
          baselines::finetune_probe(*models_.probe, gather_rows(target.vectors, support.indices), support.labels,
                                    config_.probe.finetune_steps, config_.probe.finetune_learning_rate);
      return tuned.head.predict_all(gather_rows(target.vectors, queries));
    }
  }
  throw ParameterError("unknown method");
}

MethodSummary summarize(Method method, std::vector<double> runs) {
  MethodSummary s;
  s.method = method;
  s.runs = std::move(runs);
  const auto n = s.runs.size();
  if (n == 0) {
    s.complete = false;
    return s;
  }
  s.mean = std::accumulate(s.runs.begin(), s.runs.end(), 0.0) / static_cast<double>(n);
  double ss = 0.0;
  for (double r : s.runs) ss += (r - s.mean) * (r - s.mean);
  s.stddev = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) : 0.0;
  std::vector<double> sorted = s.runs;
  std::sort(sorted.begin(), sorted.end());
  s.median = n % 2 == 1 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
  return s;
}

namespace {

MethodSummary evaluate_method(const Evaluator& evaluator, Method method, int shots,
                              const std::vector<std::uint64_t>& seeds, std::optional<int> k_v) {
  std::vector<double> runs;
  std::vector<std::string> errors, warnings;
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    try {
      const auto r = evaluator.run(method, shots, seeds[i], k_v);
      runs.push_back(r.r2);
      for (const auto& w : r.warnings) warnings.push_back("run " + std::to_string(i) + ": " + w);
    } catch (const std::exception& e) {
      errors.push_back("run " + std::to_string(i) + ": " + e.what());
    }
  }
  auto s = summarize(method, std::move(runs));
  s.errors = std::move(errors);
  s.warnings = std::move(warnings);
  s.complete = s.errors.empty() && !s.runs.empty();
  return s;
}

}  // namespace

ExperimentReport run_experiment(const ExperimentConfig& config, const Domains& domains, const PreparedModels& given) {
  config.validate();
  ExperimentReport report;
  report.config = config;
  report.label_shift_w1 = wasserstein1(domains.source.labels, domains.target.labels);

  const PreparedModels models = prepare_models(config, domains, given);
  const Evaluator evaluator(config, domains, models);
  report.target_groups = evaluator.target_groups();
  if (evaluator.target_bounds_fallback())
    report.warnings.push_back("fewer than 100 target labels; group bounds use min/max");

  for (Method m : config.methods)
    report.methods.push_back(evaluate_method(evaluator, m, config.shots, config.seeds, std::nullopt));

  for (int shots : config.shots_sweep) {
    SweepSection section{"shots", shots, {}};
    for (Method m : config.methods)
      section.methods.push_back(evaluate_method(evaluator, m, shots, config.seeds, std::nullopt));
    report.shots_sweep.push_back(std::move(section));
  }
  for (int k_v : config.kv_sweep) {
    SweepSection section{"k_v", k_v, {}};
    for (Method m : config.methods) {
      if (m != Method::kGolMdr && m != Method::kGolFtMdr) continue;
      section.methods.push_back(evaluate_method(evaluator, m, config.shots, config.seeds, k_v));
    }
    report.kv_sweep.push_back(std::move(section));
  }
  return report;
}

}  // namespace mdreg::eval
