#pragma once

#include <span>
#include <vector>

#include "lure/world/concept_world.hpp"

namespace lure {

// Exact Bayes posterior over concepts under equal priors.
std::vector<double> oracle_posterior(const ConceptWorld& world, Point2 x);

// argmax with ties resolved to the lowest index.
int argmax_lowest(std::span<const double> p);

// Fraction of samples whose oracle argmax equals target_id.
double oracle_accuracy(const ConceptWorld& world, std::span<const Point2> samples, int target_id);

// Biased (V-statistic) squared MMD with a Gaussian kernel.
double mmd2(std::span<const Point2> a, std::span<const Point2> b, double bandwidth);

// Median pairwise distance of `reference`; the default kernel bandwidth.
double median_bandwidth(std::span<const Point2> reference);

}  // namespace lure
