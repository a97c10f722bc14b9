#include "lure/world/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "lure/core/errors.hpp"
#include "lure/kernels/pairwise.hpp"

namespace lure {

std::vector<double> oracle_posterior(const ConceptWorld& world, Point2 x) {
  const auto& cs = world.concepts();
  std::vector<double> logp(cs.size());
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < cs.size(); ++i) {
    const double dx = x[0] - cs[i].mean[0];
    const double dy = x[1] - cs[i].mean[1];
    const double var = cs[i].stdev * cs[i].stdev;
    // Isotropic 2-D Gaussian: density ∝ exp(-r^2 / 2 var) / var.
    logp[i] = -(dx * dx + dy * dy) / (2.0 * var) - std::log(var);
    mx = std::max(mx, logp[i]);
  }
  double total = 0.0;
  for (double& v : logp) {
    v = std::exp(v - mx);
    total += v;
  }
  for (double& v : logp) v /= total;
  return logp;
}

int argmax_lowest(std::span<const double> p) {
  int best = 0;
  for (std::size_t i = 1; i < p.size(); ++i)
    if (p[i] > p[static_cast<std::size_t>(best)]) best = static_cast<int>(i);
  return best;
}

double oracle_accuracy(const ConceptWorld& world, std::span<const Point2> samples, int target_id) {
  if (samples.empty()) throw InvalidArgument("oracle_accuracy: empty sample list");
  std::size_t hits = 0;
  for (const auto& s : samples)
    if (argmax_lowest(oracle_posterior(world, s)) == target_id) ++hits;
  return static_cast<double>(hits) / static_cast<double>(samples.size());
}

double mmd2(std::span<const Point2> a, std::span<const Point2> b, double bandwidth) {
  return mmd2_with(a, b, bandwidth, Exec::parallel);
}

double median_bandwidth(std::span<const Point2> reference) {
  if (reference.size() < 2) return 1.0;
  std::vector<double> d;
  d.reserve(reference.size() * (reference.size() - 1) / 2);
  for (std::size_t i = 0; i < reference.size(); ++i)
    for (std::size_t j = i + 1; j < reference.size(); ++j)
      d.push_back(std::hypot(reference[i][0] - reference[j][0], reference[i][1] - reference[j][1]));
  auto mid = d.begin() + static_cast<long>(d.size() / 2);
  std::nth_element(d.begin(), mid, d.end());
  return *mid > 0.0 ? *mid : 1.0;
}

}  // namespace lure
