#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "lure/core/real_array.hpp"

namespace lure {

struct Segment {
  std::string name;
  Shape shape;
  std::size_t offset = 0;
  std::size_t size() const { return shape_size(shape); }
};

// Flat parameter vector with a named layout. Segments tile `values` in order.
class ParamVector {
 public:
  ParamVector() = default;

  // Appends a zero-filled segment and returns its index.
  std::size_t add_segment(std::string name, Shape shape);

  const std::vector<Segment>& layout() const { return layout_; }
  std::size_t segment_index(const std::string& name) const;
  bool has_segment(const std::string& name) const;

  std::span<double> segment(std::size_t index);
  std::span<const double> segment(std::size_t index) const;
  std::span<double> segment(const std::string& name) { return segment(segment_index(name)); }
  std::span<const double> segment(const std::string& name) const {
    return segment(segment_index(name));
  }
  RealArray segment_array(std::size_t index) const;

  std::size_t size() const { return values_.size(); }
  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  // Same layout, all zeros.
  ParamVector zeros_like() const;
  bool same_layout(const ParamVector& other) const;

  friend bool operator==(const ParamVector& a, const ParamVector& b) {
    return a.same_layout(b) && a.values_ == b.values_;
  }

 private:
  std::vector<Segment> layout_;
  std::vector<double> values_;
};

double l2_norm(std::span<const double> v);
double l2_distance(const ParamVector& a, const ParamVector& b);
double dot(std::span<const double> a, std::span<const double> b);

}  // namespace lure
