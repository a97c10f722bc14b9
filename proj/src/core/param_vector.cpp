#include "lure/core/param_vector.hpp"

#include <cmath>

#include "lure/core/errors.hpp"

namespace lure {

std::size_t ParamVector::add_segment(std::string name, Shape shape) {
  if (has_segment(name)) throw InvalidArgument("duplicate segment " + name);
  const std::size_t n = shape_size(shape);
  if (n == 0) throw InvalidArgument("segment " + name + " has zero size");
  layout_.push_back({std::move(name), std::move(shape), values_.size()});
  values_.resize(values_.size() + n, 0.0);
  return layout_.size() - 1;
}

std::size_t ParamVector::segment_index(const std::string& name) const {
  for (std::size_t i = 0; i < layout_.size(); ++i)
    if (layout_[i].name == name) return i;
  throw InvalidArgument("unknown parameter segment " + name);
}

bool ParamVector::has_segment(const std::string& name) const {
  for (const auto& s : layout_)
    if (s.name == name) return true;
  return false;
}

std::span<double> ParamVector::segment(std::size_t index) {
  const auto& s = layout_.at(index);
  return {values_.data() + s.offset, s.size()};
}

std::span<const double> ParamVector::segment(std::size_t index) const {
  const auto& s = layout_.at(index);
  return {values_.data() + s.offset, s.size()};
}

RealArray ParamVector::segment_array(std::size_t index) const {
  const auto seg = segment(index);
  return RealArray(layout_[index].shape, std::vector<double>(seg.begin(), seg.end()));
}

ParamVector ParamVector::zeros_like() const {
  ParamVector out = *this;
  std::fill(out.values_.begin(), out.values_.end(), 0.0);
  return out;
}

bool ParamVector::same_layout(const ParamVector& other) const {
  if (layout_.size() != other.layout_.size()) return false;
  for (std::size_t i = 0; i < layout_.size(); ++i) {
    if (layout_[i].name != other.layout_[i].name || layout_[i].shape != other.layout_[i].shape)
      return false;
  }
  return true;
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw InvalidArgument("dot: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double l2_norm(std::span<const double> v) { return std::sqrt(dot(v, v)); }

double l2_distance(const ParamVector& a, const ParamVector& b) {
  if (a.size() != b.size()) throw InvalidArgument("l2_distance: size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

}  // namespace lure
