// Acceptance gates for the mdreg library and CLI.
//
// Prints one PASS/FAIL line per criterion with the measured quantities and
// the wall time, then exits non-zero when any gate fails. Thresholds below
// are frozen; the measured values they were set against are in README.md.

#include "mdreg/baselines.hpp"
#include "mdreg/cli.hpp"
#include "mdreg/experiment.hpp"
#include "mdreg/gol.hpp"
#include "mdreg/mdr.hpp"
#include "mdreg/metrics.hpp"
#include "mdreg/serialize.hpp"
#include "mdreg/support.hpp"
#include "mdreg/synthetic.hpp"
#include "oracles.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

namespace {

namespace fs = std::filesystem;
using namespace mdreg;
using Json = nlohmann::json;

// ---------------------------------------------------------------------------
// Frozen thresholds
// ---------------------------------------------------------------------------

constexpr double kDiffusionDenseTol = 1e-8;
constexpr double kDiffusionIterTol = 1e-6;
constexpr double kAlphaLimitTol = 1e-10;
constexpr double kGradientRelTol = 1e-4;
constexpr double kGradientMinMagnitude = 1e-6;
constexpr double kLossExactTol = 1e-12;
constexpr double kSourceMinR2 = 0.9;
constexpr double kSourceParityGap = 0.05;
constexpr double kTrendMinGainOverKnn = 0.03;
constexpr double kSweepMaxDrop = 0.05;
constexpr double kMetricTol = 1e-10;
constexpr double kTranslationTol = 1e-12;

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  const char* name;
  double budget_seconds;
  std::function<Outcome()> check;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// ---------------------------------------------------------------------------
// 1-2: diffusion solves against dense inversion on seeded kNN graphs
// ---------------------------------------------------------------------------

struct SeededGraph {
  mdr::AffinityGraph graph;
  mdr::SupportMatrix support;
};

std::vector<SeededGraph> seeded_graphs() {
  std::vector<SeededGraph> out;
  Rng rng(1001);
  for (int g = 0; g < 100; ++g) {
    const Eigen::Index n = 12 + static_cast<Eigen::Index>(rng.below(39));  // 12..50
    const int k = 1 + static_cast<int>(rng.below(10));                      // 1..10
    const RowMatrix v = oracle::random_unit_rows(rng, n, 3);
    auto graph = mdr::build_affinity(v, k, 3.0).graph;
    const auto support_rows = rng.sample_without_replacement(static_cast<std::size_t>(n), 5);
    out.push_back({std::move(graph), mdr::SupportMatrix(n, support_rows)});
  }
  return out;
}

Outcome diffusion_oracle() {
  Rng rng(7);
  double worst_dense = 0.0, worst_iter = 0.0;
  for (const auto& [graph, support] : seeded_graphs()) {
    const double alpha = rng.uniform(0.5, 0.99);
    const Eigen::Index n = graph.size();
    const Eigen::MatrixXd system =
        Eigen::MatrixXd::Identity(n, n) - alpha * oracle::normalize_dense(Eigen::MatrixXd(graph.weights()));
    const Eigen::MatrixXd dense = oracle::invert(system) * support.dense();
    const auto closed = mdr::diffuse_closed(graph, support, alpha).scores;
    const auto iterative = mdr::diffuse_iterative(graph, support, alpha).scores;
    worst_dense = std::max(worst_dense, (closed - dense).cwiseAbs().maxCoeff());
    worst_iter = std::max(worst_iter, (iterative - closed).cwiseAbs().maxCoeff());
  }
  return {worst_dense <= kDiffusionDenseTol && worst_iter <= kDiffusionIterTol,
          "100 graphs; max |closed - dense| = " + fmt("%.2e", worst_dense) + ", max |iterative - closed| = " +
              fmt("%.2e", worst_iter)};
}

Outcome alpha_limit() {
  double worst = 0.0;
  for (const auto& [graph, support] : seeded_graphs())
    worst = std::max(worst, (mdr::diffuse_closed(graph, support, 1e-15).scores - support.dense()).cwiseAbs().maxCoeff());
  return {worst <= kAlphaLimitTol, "100 graphs; max |S* - S| = " + fmt("%.2e", worst)};
}

// ---------------------------------------------------------------------------
// 3: analytic loss gradient against central differences
// ---------------------------------------------------------------------------

Outcome gradient_check() {
  Rng rng(2024);
  const double h = 1e-5;
  int configs = 0, coords = 0, failures = 0;
  double worst = 0.0;
  for (; configs < 60; ++configs) {
    const Eigen::Index d = 2 + static_cast<Eigen::Index>(rng.below(7));
    const Eigen::Index p = 3 + static_cast<Eigen::Index>(rng.below(4));
    const int m = 5;
    const RowMatrix raw = oracle::random_matrix(rng, 12, p);
    gol::LinearEmbedder e{oracle::random_matrix(rng, d, p, 0.5), oracle::random_matrix(rng, d, 1, 0.1).col(0)};
    ReferencePoints refs{oracle::random_matrix(rng, m, d, 0.5)};
    gol::GolBatch batch;
    std::vector<int> group_of(12);
    for (auto& g : group_of) g = static_cast<int>(rng.below(m));
    for (int k = 0; k < 6; ++k) {
      const std::size_t a = rng.below(12);
      std::size_t b = rng.below(12);
      if (b == a) b = (a + 1) % 12;
      batch.push_back({a, b, group_of[a], group_of[b]});
    }
    const HyperParams params;
    const auto g = gol::loss_gradient(batch, raw, e, refs, params);
    auto probe = [&](double analytic, double& coord) {
      if (std::abs(analytic) <= kGradientMinMagnitude) return;
      const double keep = coord;
      coord = keep + h;
      const double up = gol::embedder_loss(batch, raw, e, refs, params).total;
      coord = keep - h;
      const double down = gol::embedder_loss(batch, raw, e, refs, params).total;
      coord = keep;
      const double fd = (up - down) / (2.0 * h);
      const double rel = std::abs(analytic - fd) / std::max(std::abs(analytic), std::abs(fd));
      worst = std::max(worst, rel);
      ++coords;
      failures += rel >= kGradientRelTol;
    };
    for (Eigen::Index i = 0; i < e.weight.rows(); ++i)
      for (Eigen::Index j = 0; j < e.weight.cols(); ++j) probe(g.d_weight(i, j), e.weight(i, j));
    for (Eigen::Index i = 0; i < e.bias.size(); ++i) probe(g.d_bias(i), e.bias(i));
    for (Eigen::Index i = 0; i < refs.points.rows(); ++i)
      for (Eigen::Index j = 0; j < refs.points.cols(); ++j) probe(g.d_refs(i, j), refs.points(i, j));
  }
  return {failures == 0, std::to_string(configs) + " configs, " + std::to_string(coords) +
                             " coordinates; worst relative error " + fmt("%.2e", worst)};
}

// ---------------------------------------------------------------------------
// 4: exact loss values at the special configurations
// ---------------------------------------------------------------------------

Outcome loss_semantics() {
  RowMatrix pts(3, 2);
  pts << -1, 0, 0, 0, 1, 0;
  const ReferencePoints refs{pts};
  Vector on0 = pts.row(0).transpose(), on2 = pts.row(2).transpose();
  const double center = gol::center_loss(on0, on2, refs, 0, 2);

  Vector a(2), b(2);
  a << 0.5, 0.5;
  b << 0.5, -0.5;  // equidistant from every reference on the x axis
  const double metric_equal = gol::metric_loss(a, b, refs, 1, 1, 0.1);

  Vector va(2), vb(2);
  va << 0.6, -0.8;
  vb << 0.6, 0.8;  // orthogonal to both reference directions
  const double order = gol::order_loss(va, vb, refs, 1, 2);

  const double err = std::max({std::abs(center), std::abs(metric_equal), std::abs(order - std::log(2.0))});
  return {err <= kLossExactTol, "L_c = " + fmt("%.1e", center) + ", equal-group L_m = " + fmt("%.1e", metric_equal) +
                                    ", L_o - log 2 = " + fmt("%.1e", order - std::log(2.0))};
}

// ---------------------------------------------------------------------------
// 5: source-domain parity of GOL + kNN and the linear probe
// ---------------------------------------------------------------------------

Outcome source_sanity() {
  eval::SyntheticSpec spec;
  spec.n_source = 1500;
  spec.noise = 0.05;
  spec.seed = 11;
  const auto bench = eval::make_synthetic_benchmark(spec);
  std::vector<std::size_t> train_rows, test_rows;
  for (std::size_t i = 0; i < bench.source.size(); ++i) (i % 3 == 2 ? test_rows : train_rows).push_back(i);
  const auto train = bench.source.subset(train_rows);
  const auto test = bench.source.subset(test_rows);

  const auto model = eval::train_gol_model(train, 5, HyperParams{}, gol::TrainSchedule{});
  const RowMatrix train_emb = model.embedder.embed_all(train.vectors);
  const RowMatrix test_emb = model.embedder.embed_all(test.vectors);
  const double gol_r2 = eval::r2_score(test.labels, baselines::predict_knn(test_emb, train_emb, train.labels, 5));

  const auto probe = baselines::fit_linear_probe(train, 1e-3);
  const double probe_r2 = eval::r2_score(test.labels, probe.predict_all(test.vectors));
  const bool pass = gol_r2 > kSourceMinR2 && probe_r2 > kSourceMinR2 && std::abs(gol_r2 - probe_r2) <= kSourceParityGap;
  return {pass, "held-out R2: gol_knn " + fmt("%.4f", gol_r2) + ", probe " + fmt("%.4f", probe_r2) + ", gap " +
                    fmt("%.4f", std::abs(gol_r2 - probe_r2))};
}

// ---------------------------------------------------------------------------
// 6, 7, 9: canonical benchmark through the CLI
// ---------------------------------------------------------------------------

struct BenchRuns {
  int status_a = -1, status_b = -1;
  fs::path a, b;
  std::string error;
};

const BenchRuns& canonical_bench() {
  static const BenchRuns runs = [] {
    BenchRuns r;
    const fs::path root = fs::temp_directory_path() / "mdreg_acceptance";
    fs::remove_all(root);
    r.a = root / "first";
    r.b = root / "second";
    const std::string config = std::string(MDREG_CONFIG_DIR) + "/canonical.json";
    std::ostringstream out, err;
    r.status_a = cli::run({"bench", "--config", config, "--out", r.a.string()}, out, err);
    r.status_b = cli::run({"bench", "--config", config, "--out", r.b.string()}, out, err);
    r.error = err.str();
    return r;
  }();
  return runs;
}

Json canonical_report() { return Json::parse(io::read_text_file(canonical_bench().a / "report.json")); }

double mean_of(const Json& methods, const std::string& name) {
  for (const auto& m : methods)
    if (m["method"] == name) return m["mean_r2"].get<double>();
  throw Error("method " + name + " missing from report");
}

Outcome cross_domain_trend() {
  const auto& runs = canonical_bench();
  if (runs.status_a != 0) return {false, "bench exited " + std::to_string(runs.status_a) + ": " + runs.error};
  const Json report = canonical_report();
  const double mdr = mean_of(report["methods"], "gol_mdr");
  const double gknn = mean_of(report["methods"], "gol_knn");
  const double knn = mean_of(report["methods"], "knn");
  const bool pass = mdr >= gknn && mdr - knn >= kTrendMinGainOverKnn;
  return {pass, "mean R2 over seeds 0-9: gol_mdr " + fmt("%.4f", mdr) + ", gol_knn " + fmt("%.4f", gknn) + ", knn " +
                    fmt("%.4f", knn) + " (gol_mdr - gol_knn " + fmt("%+.4f", mdr - gknn) + ", gol_mdr - knn " +
                    fmt("%+.4f", mdr - knn) + ")"};
}

Outcome few_shot_protocol() {
  const auto bench = eval::make_synthetic_benchmark(eval::canonical_benchmark_spec());
  const auto bounds = eval::compute_group_bounds(bench.target.labels, 5);
  const auto support = eval::sample_support(bench.target, bounds.groups, 5, 0);
  const bool populated = support.warnings.empty();

  const auto& runs = canonical_bench();
  if (runs.status_a != 0) return {false, "bench exited " + std::to_string(runs.status_a)};
  const Json report = canonical_report();
  std::string medians;
  double worst_drop = 0.0;
  double previous = std::nan("");
  for (const auto& section : report["shots_sweep"]) {
    double median = std::nan("");
    for (const auto& m : section["methods"])
      if (m["method"] == "gol_mdr") median = m["median_r2"].get<double>();
    medians += (medians.empty() ? "" : ", ") + std::string("N=") + std::to_string(section["value"].get<int>()) + " " +
               fmt("%.4f", median);
    if (!std::isnan(previous)) worst_drop = std::max(worst_drop, previous - median);
    previous = median;
  }
  const bool pass = populated && support.size() == 25 && report["shots_sweep"].size() == 4 &&
                    worst_drop <= kSweepMaxDrop;
  return {pass, "5-way 5-shot support size " + std::to_string(support.size()) + "; gol_mdr median R2 " + medians +
                    "; largest drop " + fmt("%.4f", worst_drop)};
}

Outcome bench_determinism() {
  const auto& runs = canonical_bench();
  if (runs.status_a != 0 || runs.status_b != 0) return {false, "bench failed: " + runs.error};
  int identical = 0;
  for (const char* name : {"report.json", "runs.csv", "sweep.csv"})
    identical += io::read_text_file(runs.a / name) == io::read_text_file(runs.b / name);
  return {identical == 3, std::to_string(identical) + "/3 report files byte-identical"};
}

// ---------------------------------------------------------------------------
// 8: metric example tables
// ---------------------------------------------------------------------------

Outcome metric_tables() {
  using V = std::vector<double>;
  double err = 0.0;
  err = std::max(err, std::abs(eval::r2_score(V{1, 2, 3}, V{1, 2, 3}) - 1.0));
  err = std::max(err, std::abs(eval::r2_score(V{1, 2, 3}, V{2, 2, 2}) - 0.0));
  err = std::max(err, std::abs(eval::r2_score(V{1, 2, 3}, V{1, 2, 4}) - 0.5));
  err = std::max(err, std::abs(eval::wasserstein1(V{3, 1, 2}, V{2, 3, 1}) - 0.0));
  err = std::max(err, std::abs(eval::wasserstein1(V{0}, V{1}) - 1.0));
  err = std::max(err, std::abs(eval::wasserstein1(V{0, 1}, V{1, 2}) - 1.0));

  Rng rng(5);
  double translation = 0.0;
  for (double c : {-4.0, -0.3, 0.0, 0.7, 12.5}) {
    V a(100), b(100);
    for (std::size_t i = 0; i < a.size(); ++i) {
      a[i] = rng.normal();
      b[i] = a[i] + c;
    }
    translation = std::max(translation, std::abs(eval::wasserstein1(a, b) - std::abs(c)));
  }
  return {err <= kMetricTol && translation < kTranslationTol,
          "max table error " + fmt("%.1e", err) + ", max translation error " + fmt("%.1e", translation)};
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "diffusion solves match dense inversion", 10.0, diffusion_oracle},
      {2, "alpha -> 0 returns the support matrix", 1.0, alpha_limit},
      {3, "loss gradient matches finite differences", 30.0, gradient_check},
      {4, "loss values at special configurations", 1.0, loss_semantics},
      {5, "source-domain parity of gol_knn and probe", 120.0, source_sanity},
      {6, "cross-domain trend gol_mdr >= gol_knn, gol_mdr - knn >= 0.03", 300.0, cross_domain_trend},
      {7, "few-shot protocol and shots sweep", 300.0, few_shot_protocol},
      {8, "r2 and wasserstein1 example tables", 1.0, metric_tables},
      {9, "bench determinism", 600.0, bench_determinism},
  };

  int failed = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = secs <= c.budget_seconds;
    const bool pass = o.pass && in_time;
    failed += !pass;
    std::printf("[%s] criterion %d: %s -- %s; %.2f s (budget %.0f s)%s\n", pass ? "PASS" : "FAIL", c.id, c.name,
                o.detail.c_str(), secs, c.budget_seconds, in_time ? "" : " OVER BUDGET");
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
