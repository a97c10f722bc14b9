#pragma once

#include <string>
#include <vector>

#include "lure/core/param_vector.hpp"

namespace lure {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Adaptive-moment optimizer. Segments listed as frozen are never updated.
class Adam {
 public:
  Adam(const ParamVector& params, AdamConfig config, std::vector<std::string> frozen = {});

  void step(ParamVector& params, const ParamVector& gradient);
  long steps_taken() const { return t_; }

 private:
  AdamConfig config_;
  std::vector<double> m_;
  std::vector<double> v_;
  std::vector<bool> frozen_mask_;
  long t_ = 0;
};

}  // namespace lure
