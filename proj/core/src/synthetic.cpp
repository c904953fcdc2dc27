#include "mdreg/synthetic.hpp"

#include "mdreg/rng.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace mdreg::eval {

namespace {

Vector curve_point(double u, const SyntheticSpec& spec) {
  Vector x = Vector::Zero(spec.dim);
  const double phi = spec.arc_degrees * std::numbers::pi / 180.0 * u;
  x(0) = std::cos(phi);
  x(1) = std::sin(phi);
  x(2) = spec.winding * std::sin(2.0 * std::numbers::pi * u);
  return x;
}

EmbeddingSet draw_domain(std::size_t n, const SyntheticSpec& spec, Rng& rng, const std::string& tag, bool shifted) {
  EmbeddingSet set;
  set.domain_tag = tag;
  set.vectors.resize(static_cast<Eigen::Index>(n), spec.dim);
  set.labels.resize(n);
  set.ids.resize(n);

  const double theta = spec.rotation_degrees * std::numbers::pi / 180.0;
  const double c = std::cos(theta), s = std::sin(theta);
  for (std::size_t i = 0; i < n; ++i) {
    const double u = rng.uniform();
    Vector x = curve_point(u, spec);
    for (int j = 3; j < spec.dim; ++j) x(j) += rng.normal(0.0, spec.nuisance);
    for (int j = 0; j < spec.dim; ++j) x(j) += rng.normal(0.0, spec.noise);
    x /= x.norm();
    double y = latent_to_label(u);
    if (shifted) {
      const double x1 = x(1), x3 = x(3);
      x(1) = c * x1 - s * x3;
      x(3) = s * x1 + c * x3;
      y = spec.label_scale * y + spec.label_shift;
    }
    set.vectors.row(static_cast<Eigen::Index>(i)) = x.transpose();
    set.labels[i] = y;
    set.ids[i] = tag.substr(0, 1) + std::to_string(i);
  }
  return set;
}

}  // namespace

double latent_to_label(double u) { return 25.0 * u + 5.0 * u * u; }

SyntheticBenchmark make_synthetic_benchmark(const SyntheticSpec& spec) {
  if (spec.dim < 4) throw ParameterError("synthetic benchmark needs dim >= 4");
  if (spec.n_source == 0 || spec.n_target == 0) throw ParameterError("synthetic set sizes must be positive");
  if (!(spec.arc_degrees > 0.0 && spec.arc_degrees < 360.0))
    throw ParameterError("curve arc must lie in (0, 360) degrees");
  if (!(spec.noise >= 0.0) || !(spec.nuisance >= 0.0)) throw ParameterError("noise levels must be >= 0");

  SyntheticBenchmark b;
  b.spec = spec;
  Rng source_rng(mix_seed(spec.seed, 0));
  Rng target_rng(mix_seed(spec.seed, 1));
  b.source = draw_domain(spec.n_source, spec, source_rng, "source", false);
  b.target = draw_domain(spec.n_target, spec, target_rng, "target", true);
  return b;
}

SyntheticSpec canonical_benchmark_spec() {
  SyntheticSpec spec;
  spec.rotation_degrees = 30.0;
  spec.label_scale = 1.2;
  spec.label_shift = 3.0;
  spec.noise = 0.05;
  spec.seed = 42;
  return spec;
}

}  // namespace mdreg::eval
