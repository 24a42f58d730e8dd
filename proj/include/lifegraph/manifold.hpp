// Constant-curvature manifold geometry. The latent prior lives on the
// quadric {z : <z,z> = 1/kappa} in R^{d+1}: a sphere for kappa > 0, the
// upper hyperboloid sheet for kappa < 0. The inner product carries the
// Minkowski signature (last coordinate negated) in the hyperbolic case and
// is the plain dot product in the spherical case.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lifegraph/rng.hpp"

namespace lifegraph {

struct CcmSpec {
  double kappa = 1.0;  // curvature, nonzero
  int d = 5;           // manifold dimension; ambient vectors have d+1 entries
  double zeta = 1.0;   // membership width
  // Evaluate the membership function in its printed linear-exponent form
  // instead of the squared-deviation form. Kept for fidelity experiments;
  // the linear form peaks at <z,z> = -1/kappa and is unbounded on one side.
  bool printed_membership = false;

  int ambient_dim() const { return d + 1; }
  void validate() const;
};

struct LatentPoint {
  std::vector<double> z;
  std::string user_id;
  int64_t date = 0;  // epoch day
};

// <x,y> under the signature implied by sign(kappa).
double signature_inner(const std::vector<double>& x, const std::vector<double>& y, double kappa);

// mu(z) in (0,1] for the squared-deviation form; equals 1 exactly on the
// manifold and decreases monotonically with |<z,z> - 1/kappa|.
double membership(const std::vector<double>& z, const CcmSpec& spec);

// Draw points exactly on the manifold. Spherical: normalized gaussians.
// Hyperbolic: exponential map of a gaussian tangent at the base point
// (0,...,0,1/sqrt(|kappa|)).
std::vector<std::vector<double>> sample_prior(const CcmSpec& spec, int count, Rng& rng);

struct DeviationSummary {
  double mean = 0.0;
  double max = 0.0;
};

// Aggregate |<z,z> - 1/kappa| over a set of points.
DeviationSummary manifold_deviation(const std::vector<std::vector<double>>& points,
                                    const CcmSpec& spec);

double point_deviation(const std::vector<double>& z, const CcmSpec& spec);

// Post-hoc projection onto the manifold (analysis option only, never used in
// training). Spherical: radial rescale. Hyperbolic: lift the spatial part.
std::vector<double> project_to_manifold(const std::vector<double>& z, const CcmSpec& spec);

}  // namespace lifegraph
