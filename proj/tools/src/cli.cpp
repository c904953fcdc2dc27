#include "mdreg/cli.hpp"

#include "CLI11.hpp"
#include <nlohmann/json.hpp>
#include "mdreg/embedding_io.hpp"
#include "mdreg/metrics.hpp"
#include "mdreg/projection.hpp"
#include "mdreg/serialize.hpp"
#include "mdreg/support.hpp"

#include <filesystem>
#include <functional>
#include <memory>
#include <numeric>
#include <ostream>
#include <sstream>

namespace mdreg::cli {

namespace fs = std::filesystem;
using Json = nlohmann::json;

namespace {

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = ".";
  int verbosity = 0;
  std::string method;  // adapt only
  std::string space = "gol";  // project only
};

class Logger {
 public:
  Logger(std::ostream& err, int verbosity) : err_(err), verbosity_(verbosity) {}
  void info(const std::string& msg) const {
    if (verbosity_ > 0) err_ << "mdreg: " << msg << '\n';
  }
  void warn(const std::string& msg) const { err_ << "mdreg: warning: " << msg << '\n'; }

 private:
  std::ostream& err_;
  int verbosity_;
};

/// Everything a subcommand needs after the config has been validated.
struct Context {
  io::ExperimentSetup setup;
  fs::path out_dir;
  Logger log;
};

Context load_context(const Options& o, std::ostream& err) {
  const fs::path config_path(o.config);
  const std::string text = io::read_text_file(config_path);
  auto setup = io::parse_experiment_config(text, config_path.parent_path(), o.seed);
  Context ctx{std::move(setup), fs::path(o.out), Logger(err, o.verbosity)};
  if (ctx.setup.checkpoint && !fs::exists(*ctx.setup.checkpoint))
    throw ParameterError("checkpoint not found: " + ctx.setup.checkpoint->string());
  fs::create_directories(ctx.out_dir);
  return ctx;
}

void write(const Context& ctx, const std::string& name, std::string_view contents) {
  const fs::path path = ctx.out_dir / name;
  io::write_file_atomic(path, contents);
  ctx.log.info("wrote " + path.string());
}

eval::PreparedModels given_models(const Context& ctx) {
  eval::PreparedModels given;
  if (ctx.setup.checkpoint) {
    auto cp = io::read_checkpoint(*ctx.setup.checkpoint);
    given.gol = std::move(cp.gol);
    given.probe = std::move(cp.head);
    ctx.log.info("loaded checkpoint " + ctx.setup.checkpoint->string());
  }
  return given;
}

eval::Domains domains_for(const Context& ctx) {
  std::vector<std::string> warnings;
  auto d = io::load_domains(ctx.setup.data, &warnings);
  for (const auto& w : warnings) ctx.log.warn(w);
  ctx.log.info("source rows " + std::to_string(d.source.size()) + ", target rows " + std::to_string(d.target.size()));
  return d;
}

/// GOL model from the checkpoint, or trained on the source domain.
eval::GolModel gol_model(const Context& ctx, const EmbeddingSet& source) {
  auto given = given_models(ctx);
  if (given.gol) return std::move(*given.gol);
  ctx.log.info("training GOL embedder on the source domain");
  const auto& c = ctx.setup.config;
  return eval::train_gol_model(source, c.group_count, c.params, c.train);
}

std::string predictions_csv(const EmbeddingSet& target, const std::vector<std::size_t>& rows,
                            const std::vector<double>& predictions) {
  std::ostringstream out;
  out << "id,true,pred\r\n";
  for (std::size_t i = 0; i < rows.size(); ++i)
    out << io::csv_escape(target.ids[rows[i]]) << ',' << io::format_real(target.labels[rows[i]]) << ','
        << io::format_real(predictions[i]) << "\r\n";
  return out.str();
}

// ---- subcommands ----------------------------------------------------------

int cmd_generate(const Context& ctx) {
  if (!ctx.setup.data.synthetic) throw ParameterError("generate needs a data.synthetic section");
  const auto bench = eval::make_synthetic_benchmark(*ctx.setup.data.synthetic);
  std::ostringstream csv;
  io::write_embedding_csv(csv, {&bench.source, &bench.target});
  write(ctx, "embeddings.csv", csv.str());
  return kSuccess;
}

int cmd_train(const Context& ctx) {
  const auto& c = ctx.setup.config;
  std::vector<std::string> warnings;
  const auto source = io::load_source_domain(ctx.setup.data, &warnings);
  for (const auto& w : warnings) ctx.log.warn(w);
  const auto bounds = eval::compute_group_bounds(source.labels, c.group_count);
  if (bounds.used_min_max) ctx.log.warn("fewer than 100 source labels; group bounds use min/max");

  ctx.log.info("training on " + std::to_string(source.size()) + " rows for " + std::to_string(c.train.steps) +
               " steps");
  auto trained = gol::train_toy_embedder(source.vectors, source.labels, bounds.groups, c.params, c.train);

  io::Checkpoint cp;
  cp.gol = eval::GolModel{std::move(trained.embedder), std::move(trained.refs), bounds.groups};
  cp.head = baselines::fit_linear_probe(source, c.probe.ridge_lambda);
  cp.params = c.params;
  cp.seed = c.train.seed;
  cp.step = c.train.steps;
  write(ctx, "checkpoint.json", io::checkpoint_to_json(cp));
  write(ctx, "loss_trace.csv", io::loss_trace_csv(trained.trace));
  return kSuccess;
}

int cmd_embed(const Context& ctx) {
  const auto domains = domains_for(ctx);
  const auto model = gol_model(ctx, domains.source);
  const auto source = model.embedder.embed_set(domains.source);
  const auto target = model.embedder.embed_set(domains.target);
  std::ostringstream csv;
  io::write_embedding_csv(csv, {&source, &target});
  write(ctx, "embedded.csv", csv.str());
  return kSuccess;
}

int cmd_diffuse(const Context& ctx) {
  const auto& c = ctx.setup.config;
  const auto domains = domains_for(ctx);
  const auto model = gol_model(ctx, domains.source);
  const RowMatrix embedded = model.embedder.embed_all(domains.target.vectors);

  const auto groups = eval::compute_group_bounds(domains.target.labels, c.group_count).groups;
  const auto support = eval::sample_support(domains.target, groups, c.shots, ctx.setup.master_seed);
  for (const auto& w : support.warnings) ctx.log.warn(w);

  const int k = c.params.resolved_knn_k(c.shots);
  auto build = mdr::build_affinity(embedded, k, c.params.diffusion_gamma);
  for (const auto& w : build.warnings) ctx.log.warn(w);
  const mdr::SupportMatrix s(embedded.rows(), support.indices);
  const auto solved = mdr::diffuse_closed(build.graph, s, c.params.diffusion_alpha);
  ctx.log.info("diffusion used " + std::to_string(solved.iterations) + " CG iterations" +
               (solved.used_dense_fallback ? " and the dense fallback" : ""));

  const int k_v = std::min<int>(c.params.resolved_k_v(c.shots), static_cast<int>(support.size()));
  const auto predictions = mdr::predict_mdr(solved.scores, support.labels, k_v);
  std::vector<std::size_t> all(domains.target.size());
  std::iota(all.begin(), all.end(), std::size_t{0});

  write(ctx, "graph.csv", io::graph_triplets_csv(build.graph));
  write(ctx, "graph.json", io::graph_sidecar_json(embedded.rows(), k, c.params.diffusion_gamma,
                                                  c.params.diffusion_alpha));
  write(ctx, "scores.csv", io::dense_matrix_csv(solved.scores, "s"));
  write(ctx, "predictions.csv", predictions_csv(domains.target, all, predictions));
  return kSuccess;
}

int cmd_adapt(const Context& ctx, const std::string& method_flag) {
  auto config = ctx.setup.config;
  if (!method_flag.empty()) {
    const auto m = eval::parse_method(method_flag);
    if (!m) {
      std::string valid;
      for (const auto& n : eval::method_names()) valid += (valid.empty() ? "" : ", ") + n;
      throw ParameterError("unknown method '" + method_flag + "' (valid: " + valid + ")");
    }
    config.methods = {*m};
  }
  if (config.methods.size() != 1)
    throw ParameterError("adapt runs exactly one method; pass --method or list a single method in the config");
  const auto method = config.methods.front();

  const auto domains = domains_for(ctx);
  const auto models = eval::prepare_models(config, domains, given_models(ctx));
  const eval::Evaluator evaluator(config, domains, models);
  const auto run = evaluator.run(method, config.shots, ctx.setup.master_seed);
  for (const auto& w : run.warnings) ctx.log.warn(w);
  ctx.log.info(std::string(eval::method_name(method)) + " R2 = " + io::format_real(run.r2));

  Json support_ids = Json::array();
  for (auto i : run.support.indices) support_ids.push_back(domains.target.ids[i]);
  Json report{{"schema_version", io::kSchemaVersion},
              {"method", std::string(eval::method_name(method))},
              {"seed", run.seed},
              {"shots", run.shots},
              {"r2", run.r2},
              {"support_ids", support_ids},
              {"scored_rows", run.query_rows.size()},
              {"warnings", run.warnings}};
  write(ctx, "predictions.csv", predictions_csv(domains.target, run.query_rows, run.predictions));
  write(ctx, "adapt_report.json", report.dump(2) + "\n");
  return kSuccess;
}

int cmd_bench(const Context& ctx) {
  const auto domains = domains_for(ctx);
  const auto report = eval::run_experiment(ctx.setup.config, domains, given_models(ctx));
  write(ctx, "report.json", io::report_to_json(report));
  write(ctx, "runs.csv", io::report_runs_csv(report));
  write(ctx, "sweep.csv", io::report_sweep_csv(report));

  bool complete = true;
  for (const auto& m : report.methods) {
    ctx.log.info(std::string(eval::method_name(m.method)) + ": mean R2 " + io::format_real(m.mean));
    for (const auto& e : m.errors) ctx.log.warn(std::string(eval::method_name(m.method)) + " " + e);
    complete = complete && m.complete;
  }
  for (const auto* sections : {&report.shots_sweep, &report.kv_sweep})
    for (const auto& s : *sections)
      for (const auto& m : s.methods) complete = complete && m.complete;
  if (!complete) {
    ctx.log.warn("some runs failed; the report is flagged incomplete");
    return kSolver;
  }
  return kSuccess;
}

int cmd_project(const Context& ctx, const std::string& space) {
  if (space != "raw" && space != "gol") throw ParameterError("--space must be 'raw' or 'gol'");
  const auto domains = domains_for(ctx);
  EmbeddingSet source = domains.source, target = domains.target;
  if (space == "gol") {
    const auto model = gol_model(ctx, domains.source);
    source = model.embedder.embed_set(source);
    target = model.embedder.embed_set(target);
  }
  EmbeddingSet both;
  both.domain_tag = "all";
  both.ids = source.ids;
  both.ids.insert(both.ids.end(), target.ids.begin(), target.ids.end());
  both.labels = source.labels;
  both.labels.insert(both.labels.end(), target.labels.begin(), target.labels.end());
  both.vectors.resize(source.vectors.rows() + target.vectors.rows(), source.vectors.cols());
  both.vectors << source.vectors, target.vectors;
  write(ctx, "projection.csv", eval::projection_csv(both));
  return kSuccess;
}

int guarded(std::ostream& err, const std::function<int()>& body) {
  try {
    return body();
  } catch (const DivergenceError& e) {
    err << "mdreg: error: " << e.what() << '\n';
    return kTraining;
  } catch (const DegenerateDirection& e) {
    err << "mdreg: error: " << e.what() << '\n';
    return kTraining;
  } catch (const SolverError& e) {
    err << "mdreg: error: " << e.what() << '\n';
    return kSolver;
  } catch (const ParameterError& e) {
    err << "mdreg: error: " << e.what() << '\n';
    return kValidation;
  } catch (const fs::filesystem_error& e) {
    err << "mdreg: error: " << e.what() << '\n';
    return kValidation;
  } catch (const std::exception& e) {
    err << "mdreg: internal error: " << e.what() << '\n';
    return kInternal;
  }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Few-shot cross-domain regression with ordered embeddings and manifold diffusion", "mdreg"};
  app.require_subcommand(1);

  // Each subcommand binds its own Options: CLI11 resets shared targets when
  // it finalizes the subcommands that were not invoked.
  using Handler = std::function<int(const Context&, const Options&)>;
  struct Subcommand {
    CLI::App* app;
    std::unique_ptr<Options> options;
    Handler handler;
  };
  std::vector<Subcommand> subs;
  auto add = [&](const char* name, const char* help, Handler handler) -> Subcommand& {
    auto opts = std::make_unique<Options>();
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", opts->config, "Experiment config (JSON, schema_version 1)")->required();
    sub->add_option("--seed", opts->seed, "Override the master seed");
    sub->add_option("--out", opts->out, "Output directory")->capture_default_str();
    sub->add_flag("-v,--verbose", opts->verbosity, "Log progress to stderr");
    subs.push_back({sub, std::move(opts), std::move(handler)});
    return subs.back();
  };
  add("generate", "Write a synthetic source/target embedding file",
      [](const Context& c, const Options&) { return cmd_generate(c); });
  add("train", "Train the GOL embedder and regression head on the source",
      [](const Context& c, const Options&) { return cmd_train(c); });
  add("embed", "Write GOL embeddings of both domains", [](const Context& c, const Options&) { return cmd_embed(c); });
  add("diffuse", "Build the target graph and export diffusion scores",
      [](const Context& c, const Options&) { return cmd_diffuse(c); });
  auto& adapt = add("adapt", "Run one method on one seeded support set",
                    [](const Context& c, const Options& o) { return cmd_adapt(c, o.method); });
  adapt.app->add_option("--method", adapt.options->method, "Method name (overrides the config)");
  add("bench", "Run the multi-method, multi-seed experiment",
      [](const Context& c, const Options&) { return cmd_bench(c); });
  auto& project = add("project", "Export a 2-D PCA projection of both domains",
                      [](const Context& c, const Options& o) { return cmd_project(c, o.space); });
  project.app->add_option("--space", project.options->space, "raw or gol")->capture_default_str();

  std::vector<std::string> argv_store{"mdreg"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_store) argv.push_back(a.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kSuccess;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kSuccess;
  } catch (const CLI::ParseError& e) {
    err << "mdreg: error: " << e.what() << '\n';
    return kValidation;
  }

  for (const auto& sub : subs) {
    if (!sub.app->parsed()) continue;
    return guarded(err, [&]() -> int {
      const Context ctx = load_context(*sub.options, err);
      return sub.handler(ctx, *sub.options);
    });
  }
  return kValidation;
}

}  // namespace mdreg::cli
