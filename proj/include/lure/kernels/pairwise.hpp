#pragma once

#include <span>

#include "lure/kernels/exec.hpp"
#include "lure/world/concept_world.hpp"

namespace lure {

// sum_i sum_j exp(-|a_i - b_j|^2 / (2 bw^2)), reduced row by row in index
// order so both policies agree bit for bit.
double gaussian_kernel_sum(std::span<const Point2> a, std::span<const Point2> b,
                           double bandwidth, Exec exec);

double mmd2_with(std::span<const Point2> a, std::span<const Point2> b, double bandwidth,
                 Exec exec);

}  // namespace lure
