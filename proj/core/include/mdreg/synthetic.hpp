#pragma once

#include "mdreg/types.hpp"

#include <cstdint>

namespace mdreg::eval {

/// Controls for the cross-domain benchmark generator.
///
/// A latent u ~ U(0, 1) sets the label through a fixed monotone map and the
/// position along a slowly winding near-great-circle curve in the first three
/// coordinates. The remaining coordinates carry label-independent nuisance
/// variation. The target domain rotates the embeddings in the plane of
/// coordinates 1 and 3 (mixing the curve with a nuisance axis) and maps
/// labels through a * y + b.
struct SyntheticSpec {
  std::size_t n_source = 1000;
  std::size_t n_target = 500;
  int dim = 16;
  double rotation_degrees = 0.0;
  double label_scale = 1.0;  // a
  double label_shift = 0.0;  // b
  double noise = 0.0;        // isotropic feature noise before normalization
  double nuisance = 0.3;     // std of each nuisance coordinate
  double arc_degrees = 135.0;  // angle swept by the curve as u runs over [0, 1]
  double winding = 0.25;       // amplitude of the out-of-plane oscillation
  std::uint64_t seed = 0;
};

struct SyntheticBenchmark {
  EmbeddingSet source;
  EmbeddingSet target;
  SyntheticSpec spec;
};

/// Label as a function of the latent position; strictly increasing on [0, 1].
double latent_to_label(double u);

/// Deterministic in spec.seed. Throws ParameterError when dim < 4, a size is 0,
/// or the arc is outside (0, 360) degrees.
SyntheticBenchmark make_synthetic_benchmark(const SyntheticSpec& spec);

/// Rotation 30 degrees, labels 1.2 y + 3, noise 0.05, seed 42.
SyntheticSpec canonical_benchmark_spec();

}  // namespace mdreg::eval
