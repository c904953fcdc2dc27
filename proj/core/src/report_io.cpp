#include "json_codec.hpp"
#include "mdreg/embedding_io.hpp"
#include "mdreg/rng.hpp"
#include "mdreg/serialize.hpp"

#include <sstream>

namespace mdreg::io {

using detail::Json;

namespace {

gol::TrainSchedule train_schedule_from(const Json& j) {
  constexpr std::string_view what = "train";
  detail::check_keys(j, what, {"learning_rate", "steps", "batch_size", "seed", "embedding_dim"});
  gol::TrainSchedule s;
  detail::read_field(j, "learning_rate", s.learning_rate, what);
  detail::read_field(j, "steps", s.steps, what);
  detail::read_field(j, "batch_size", s.batch_size, what);
  detail::read_field(j, "seed", s.seed, what);
  detail::read_field(j, "embedding_dim", s.embedding_dim, what);
  if (!(s.learning_rate > 0.0)) throw ParameterError("train: learning_rate must be positive");
  if (s.batch_size < 1) throw ParameterError("train: batch_size must be >= 1");
  if (s.embedding_dim < 2) throw ParameterError("train: embedding_dim must be >= 2");
  return s;
}

Json train_schedule_json(const gol::TrainSchedule& s) {
  return {{"learning_rate", s.learning_rate},
          {"steps", s.steps},
          {"batch_size", s.batch_size},
          {"seed", s.seed},
          {"embedding_dim", s.embedding_dim}};
}

eval::SyntheticSpec synthetic_from(const Json& j) {
  constexpr std::string_view what = "synthetic";
  detail::check_keys(j, what, {"n_source", "n_target", "dim", "rotation_degrees", "label_scale", "label_shift",
                               "noise", "nuisance", "arc_degrees", "winding", "seed"});
  eval::SyntheticSpec s;
  detail::read_field(j, "n_source", s.n_source, what);
  detail::read_field(j, "n_target", s.n_target, what);
  detail::read_field(j, "dim", s.dim, what);
  detail::read_field(j, "rotation_degrees", s.rotation_degrees, what);
  detail::read_field(j, "label_scale", s.label_scale, what);
  detail::read_field(j, "label_shift", s.label_shift, what);
  detail::read_field(j, "noise", s.noise, what);
  detail::read_field(j, "nuisance", s.nuisance, what);
  detail::read_field(j, "arc_degrees", s.arc_degrees, what);
  detail::read_field(j, "winding", s.winding, what);
  detail::read_field(j, "seed", s.seed, what);
  return s;
}

Json synthetic_json(const eval::SyntheticSpec& s) {
  return {{"n_source", s.n_source}, {"n_target", s.n_target},       {"dim", s.dim},
          {"rotation_degrees", s.rotation_degrees}, {"label_scale", s.label_scale},
          {"label_shift", s.label_shift},           {"noise", s.noise},
          {"nuisance", s.nuisance},                 {"arc_degrees", s.arc_degrees},
          {"winding", s.winding},                   {"seed", s.seed}};
}

Json summary_json(const eval::MethodSummary& s) {
  return {{"method", std::string(eval::method_name(s.method))},
          {"mean_r2", s.mean},
          {"std_r2", s.stddev},
          {"median_r2", s.median},
          {"runs", s.runs},
          {"errors", s.errors},
          {"warnings", s.warnings},
          {"complete", s.complete}};
}

Json config_json(const eval::ExperimentConfig& c) {
  Json methods = Json::array();
  for (auto m : c.methods) methods.push_back(std::string(eval::method_name(m)));
  return {{"methods", methods},
          {"shots", c.shots},
          {"groups", c.group_count},
          {"seeds", c.seeds},
          {"params", detail::hyperparams_json(c.params)},
          {"train", train_schedule_json(c.train)},
          {"probe",
           {{"ridge_lambda", c.probe.ridge_lambda},
            {"finetune_steps", c.probe.finetune_steps},
            {"finetune_learning_rate", c.probe.finetune_learning_rate}}},
          {"gol_finetune",
           {{"steps", c.gol_finetune.steps},
            {"learning_rate", c.gol_finetune.learning_rate},
            {"batch_size", c.gol_finetune.batch_size}}},
          {"shots_sweep", c.shots_sweep},
          {"kv_sweep", c.kv_sweep}};
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

}  // namespace

gol::TrainSchedule parse_train_schedule(std::string_view json) {
  return train_schedule_from(detail::parse_json(json, "train"));
}

eval::SyntheticSpec parse_synthetic_spec(std::string_view json) {
  return synthetic_from(detail::parse_json(json, "synthetic"));
}

std::string synthetic_spec_to_json(const eval::SyntheticSpec& spec) { return synthetic_json(spec).dump(2) + "\n"; }

ExperimentSetup parse_experiment_config(std::string_view text, const std::filesystem::path& base_dir,
                                        std::optional<std::uint64_t> seed_override) {
  const Json j = detail::parse_json(text, "config");
  constexpr std::string_view what = "config";
  detail::check_keys(j, what,
                     {"schema_version", "data", "methods", "shots", "groups", "seeds", "repeats", "seed", "params",
                      "train", "probe", "gol_finetune", "shots_sweep", "kv_sweep", "checkpoint"});
  if (!j.contains("schema_version")) throw ParameterError("config: missing schema_version");
  int version = 0;
  detail::read_field(j, "schema_version", version, what);
  if (version != kSchemaVersion) throw ParameterError("config: unsupported schema_version " + std::to_string(version));

  ExperimentSetup setup;
  auto& c = setup.config;

  if (!j.contains("data")) throw ParameterError("config: missing data section");
  const auto& data = j["data"];
  detail::check_keys(data, "data", {"synthetic", "source", "target", "source_domain", "target_domain"});
  if (data.contains("synthetic")) {
    setup.data.synthetic = synthetic_from(data["synthetic"]);
  } else {
    std::string source, target;
    detail::read_field(data, "source", source, "data");
    detail::read_field(data, "target", target, "data");
    if (source.empty()) throw ParameterError("data: need either synthetic or a source path");
    setup.data.source_path = resolve(base_dir, source);
    if (!target.empty()) setup.data.target_path = resolve(base_dir, target);
    detail::read_field(data, "source_domain", setup.data.source_domain, "data");
    detail::read_field(data, "target_domain", setup.data.target_domain, "data");
  }

  Json methods = Json::array();
  for (const auto& n : eval::method_names()) methods.push_back(n);
  if (j.contains("methods")) methods = j["methods"];
  if (!methods.is_array()) throw ParameterError("config: methods must be an array");
  for (const auto& m : methods) {
    const auto name = m.is_string() ? m.get<std::string>() : std::string{};
    const auto method = eval::parse_method(name);
    if (!method) {
      std::string valid;
      for (const auto& n : eval::method_names()) valid += (valid.empty() ? "" : ", ") + n;
      throw ParameterError("config: unknown method '" + name + "' (valid: " + valid + ")");
    }
    c.methods.push_back(*method);
  }
  detail::read_field(j, "shots", c.shots, what);
  detail::read_field(j, "groups", c.group_count, what);
  if (j.contains("params")) c.params = detail::hyperparams_from(j["params"]);
  if (j.contains("train")) c.train = train_schedule_from(j["train"]);
  if (j.contains("probe")) {
    const auto& p = j["probe"];
    detail::check_keys(p, "probe", {"ridge_lambda", "finetune_steps", "finetune_learning_rate"});
    detail::read_field(p, "ridge_lambda", c.probe.ridge_lambda, "probe");
    detail::read_field(p, "finetune_steps", c.probe.finetune_steps, "probe");
    detail::read_field(p, "finetune_learning_rate", c.probe.finetune_learning_rate, "probe");
  }
  if (j.contains("gol_finetune")) {
    const auto& g = j["gol_finetune"];
    detail::check_keys(g, "gol_finetune", {"steps", "learning_rate", "batch_size"});
    detail::read_field(g, "steps", c.gol_finetune.steps, "gol_finetune");
    detail::read_field(g, "learning_rate", c.gol_finetune.learning_rate, "gol_finetune");
    detail::read_field(g, "batch_size", c.gol_finetune.batch_size, "gol_finetune");
  }
  detail::read_field(j, "shots_sweep", c.shots_sweep, what);
  detail::read_field(j, "kv_sweep", c.kv_sweep, what);

  detail::read_field(j, "seed", setup.master_seed, what);
  if (seed_override) setup.master_seed = *seed_override;
  if (j.contains("seeds")) {
    detail::read_field(j, "seeds", c.seeds, what);
  } else {
    std::size_t repeats = 1;
    detail::read_field(j, "repeats", repeats, what);
    if (repeats < 1) throw ParameterError("config: repeats must be >= 1");
    for (std::size_t i = 0; i < repeats; ++i) c.seeds.push_back(mix_seed(setup.master_seed, i));
  }
  if (j.contains("checkpoint")) {
    std::string cp;
    detail::read_field(j, "checkpoint", cp, what);
    setup.checkpoint = resolve(base_dir, cp);
  }
  c.validate();
  return setup;
}

eval::Domains load_domains(const DataSource& data, std::vector<std::string>* warnings) {
  if (data.synthetic) {
    auto bench = eval::make_synthetic_benchmark(*data.synthetic);
    return {std::move(bench.source), std::move(bench.target)};
  }
  auto collect = [&](const EmbeddingFile& f) {
    if (warnings) warnings->insert(warnings->end(), f.warnings.begin(), f.warnings.end());
  };
  if (data.target_path.empty()) throw ParameterError("data: no target path configured");
  const auto source_file = read_embedding_csv(data.source_path);
  collect(source_file);
  eval::Domains d;
  d.source = source_file.domain(data.source_domain);
  if (data.target_path == data.source_path) {
    d.target = source_file.domain(data.target_domain);
  } else {
    const auto target_file = read_embedding_csv(data.target_path);
    collect(target_file);
    d.target = target_file.domain(data.target_domain);
  }
  return d;
}

EmbeddingSet load_source_domain(const DataSource& data, std::vector<std::string>* warnings) {
  if (data.synthetic) return eval::make_synthetic_benchmark(*data.synthetic).source;
  const auto file = read_embedding_csv(data.source_path);
  if (warnings) warnings->insert(warnings->end(), file.warnings.begin(), file.warnings.end());
  return file.domain(data.source_domain);
}

std::string report_to_json(const eval::ExperimentReport& r) {
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["config"] = config_json(r.config);
  j["label_shift_w1"] = r.label_shift_w1;
  j["target_groups"] = {{"lower", r.target_groups.lower()},
                        {"upper", r.target_groups.upper()},
                        {"count", r.target_groups.count()},
                        {"boundaries", r.target_groups.boundaries()}};
  Json methods = Json::array();
  for (const auto& m : r.methods) methods.push_back(summary_json(m));
  j["methods"] = methods;
  auto sweep = [](const std::vector<eval::SweepSection>& sections) {
    Json out = Json::array();
    for (const auto& s : sections) {
      Json ms = Json::array();
      for (const auto& m : s.methods) ms.push_back(summary_json(m));
      out.push_back({{"parameter", s.parameter}, {"value", s.value}, {"methods", ms}});
    }
    return out;
  };
  j["shots_sweep"] = sweep(r.shots_sweep);
  j["kv_sweep"] = sweep(r.kv_sweep);
  j["warnings"] = r.warnings;
  bool complete = true;
  for (const auto& m : r.methods) complete = complete && m.complete;
  j["complete"] = complete;
  return j.dump(2) + "\n";
}

std::string report_runs_csv(const eval::ExperimentReport& r) {
  std::ostringstream out;
  out << "method,run,r2\r\n";
  for (const auto& m : r.methods)
    for (std::size_t i = 0; i < m.runs.size(); ++i)
      out << eval::method_name(m.method) << ',' << i << ',' << format_real(m.runs[i]) << "\r\n";
  return out.str();
}

std::string report_sweep_csv(const eval::ExperimentReport& r) {
  std::ostringstream out;
  out << "section,value,method,run,r2\r\n";
  for (const auto* sections : {&r.shots_sweep, &r.kv_sweep})
    for (const auto& s : *sections)
      for (const auto& m : s.methods)
        for (std::size_t i = 0; i < m.runs.size(); ++i)
          out << s.parameter << ',' << s.value << ',' << eval::method_name(m.method) << ',' << i << ','
              << format_real(m.runs[i]) << "\r\n";
  return out.str();
}

std::string graph_triplets_csv(const mdr::AffinityGraph& graph) {
  std::ostringstream out;
  out << "i,j,w\r\n";
  const auto& w = graph.weights();
  for (Eigen::Index i = 0; i < w.outerSize(); ++i)
    for (mdr::SparseMatrix::InnerIterator it(w, i); it; ++it)
      out << i << ',' << it.col() << ',' << format_real(it.value()) << "\r\n";
  return out.str();
}

std::string graph_sidecar_json(Eigen::Index n, int k, double gamma, double alpha) {
  Json j{{"n", n}, {"k", k}, {"gamma", gamma}, {"alpha", alpha}};
  return j.dump(2) + "\n";
}

std::string dense_matrix_csv(const Eigen::MatrixXd& m, std::string_view column_prefix) {
  std::ostringstream out;
  for (Eigen::Index c = 0; c < m.cols(); ++c) out << (c ? "," : "") << column_prefix << c;
  out << "\r\n";
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) out << (c ? "," : "") << format_real(m(r, c));
    out << "\r\n";
  }
  return out.str();
}

std::string loss_trace_csv(const std::vector<gol::TrainRecord>& trace) {
  std::ostringstream out;
  out << "step,total,order,metric,center\r\n";
  for (const auto& t : trace)
    out << t.step << ',' << format_real(t.loss.total) << ',' << format_real(t.loss.order) << ','
        << format_real(t.loss.metric) << ',' << format_real(t.loss.center) << "\r\n";
  return out.str();
}

}  // namespace mdreg::io
