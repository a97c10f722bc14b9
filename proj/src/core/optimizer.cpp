#include "lure/core/optimizer.hpp"

#include <algorithm>
#include <cmath>

#include "lure/core/errors.hpp"

namespace lure {

Adam::Adam(const ParamVector& params, AdamConfig config, std::vector<std::string> frozen)
    : config_(config),
      m_(params.size(), 0.0),
      v_(params.size(), 0.0),
      frozen_mask_(params.size(), false) {
  if (!(config_.lr > 0.0)) throw InvalidArgument("learning rate must be positive");
  for (const auto& name : frozen) {
    if (!params.has_segment(name)) continue;
    const auto& seg = params.layout()[params.segment_index(name)];
    std::fill_n(frozen_mask_.begin() + static_cast<long>(seg.offset), seg.size(), true);
  }
}

void Adam::step(ParamVector& params, const ParamVector& gradient) {
  if (gradient.size() != params.size() || params.size() != m_.size())
    throw InvalidArgument("Adam::step: size mismatch");
  ++t_;
  const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (frozen_mask_[i]) continue;
    const double g = gradient[i];
    m_[i] = config_.beta1 * m_[i] + (1.0 - config_.beta1) * g;
    v_[i] = config_.beta2 * v_[i] + (1.0 - config_.beta2) * g * g;
    params[i] -= config_.lr * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + config_.eps);
  }
}

}  // namespace lure
