#include "lifegraph/manifold.hpp"

#include <cmath>

#include "lifegraph/common.hpp"

namespace lifegraph {

void CcmSpec::validate() const {
  if (kappa == 0.0) throw UsageError("CcmSpec: kappa must be nonzero");
  if (d < 1) throw UsageError("CcmSpec: d must be positive");
  if (zeta <= 0.0) throw UsageError("CcmSpec: zeta must be positive");
}

double signature_inner(const std::vector<double>& x, const std::vector<double>& y, double kappa) {
  if (x.size() != y.size() || x.size() < 2) {
    throw DimensionError("signature_inner: lengths " + std::to_string(x.size()) + " vs " +
                         std::to_string(y.size()));
  }
  size_t n = x.size();
  double acc = 0.0;
  for (size_t i = 0; i + 1 < n; ++i) acc += x[i] * y[i];
  // Minkowski signature only on the hyperbolic side; the sphere uses the
  // euclidean product.
  if (kappa < 0.0) {
    acc -= x[n - 1] * y[n - 1];
  } else {
    acc += x[n - 1] * y[n - 1];
  }
  return acc;
}

double membership(const std::vector<double>& z, const CcmSpec& spec) {
  double ip = signature_inner(z, z, spec.kappa);
  double inv_k = 1.0 / spec.kappa;
  if (spec.printed_membership) {
    return std::exp((-ip - inv_k) / (2.0 * spec.zeta * spec.zeta));
  }
  double dev = ip - inv_k;
  return std::exp(-(dev * dev) / (2.0 * spec.zeta * spec.zeta));
}

std::vector<std::vector<double>> sample_prior(const CcmSpec& spec, int count, Rng& rng) {
  spec.validate();
  if (count < 1) throw UsageError("sample_prior: count must be >= 1");
  int n = spec.ambient_dim();
  std::vector<std::vector<double>> out;
  out.reserve(count);
  if (spec.kappa > 0.0) {
    double radius = 1.0 / std::sqrt(spec.kappa);
    for (int c = 0; c < count; ++c) {
      std::vector<double> g(n);
      double norm2;
      do {
        norm2 = 0.0;
        for (int i = 0; i < n; ++i) {
          g[i] = rng.gaussian();
          norm2 += g[i] * g[i];
        }
      } while (norm2 == 0.0);
      double scale = radius / std::sqrt(norm2);
      for (int i = 0; i < n; ++i) g[i] *= scale;
      out.push_back(std::move(g));
    }
  } else {
    // Base point (0,...,0,r) with r = 1/sqrt(|kappa|); tangent vectors are
    // purely spatial there. exp_base(u) = (r sinh(|u|/r) u/|u|, r cosh(|u|/r)).
    double r = 1.0 / std::sqrt(-spec.kappa);
    for (int c = 0; c < count; ++c) {
      std::vector<double> u(spec.d);
      double norm2 = 0.0;
      for (int i = 0; i < spec.d; ++i) {
        u[i] = rng.gaussian();
        norm2 += u[i] * u[i];
      }
      double norm = std::sqrt(norm2);
      std::vector<double> z(n, 0.0);
      if (norm == 0.0) {
        z[n - 1] = r;
      } else {
        double t = norm / r;
        double s = r * std::sinh(t) / norm;
        for (int i = 0; i < spec.d; ++i) z[i] = s * u[i];
        z[n - 1] = r * std::cosh(t);
      }
      out.push_back(std::move(z));
    }
  }
  return out;
}

double point_deviation(const std::vector<double>& z, const CcmSpec& spec) {
  return std::fabs(signature_inner(z, z, spec.kappa) - 1.0 / spec.kappa);
}

DeviationSummary manifold_deviation(const std::vector<std::vector<double>>& points,
                                    const CcmSpec& spec) {
  if (points.empty()) throw UsageError("manifold_deviation: empty point list");
  DeviationSummary s;
  for (const auto& z : points) {
    double dev = point_deviation(z, spec);
    s.mean += dev;
    if (dev > s.max) s.max = dev;
  }
  s.mean /= static_cast<double>(points.size());
  return s;
}

std::vector<double> project_to_manifold(const std::vector<double>& z, const CcmSpec& spec) {
  std::vector<double> out = z;
  size_t n = z.size();
  if (spec.kappa > 0.0) {
    double norm2 = 0.0;
    for (double v : z) norm2 += v * v;
    double r = 1.0 / std::sqrt(spec.kappa);
    if (norm2 == 0.0) {
      out.assign(n, 0.0);
      out[n - 1] = r;
      return out;
    }
    double scale = r / std::sqrt(norm2);
    for (double& v : out) v *= scale;
  } else {
    double r2 = -1.0 / spec.kappa;
    double spatial2 = 0.0;
    for (size_t i = 0; i + 1 < n; ++i) spatial2 += z[i] * z[i];
    out[n - 1] = std::sqrt(spatial2 + r2);
  }
  return out;
}

}  // namespace lifegraph
