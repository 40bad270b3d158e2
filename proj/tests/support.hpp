#ifndef HOMDEF_TESTS_SUPPORT_HPP
#define HOMDEF_TESTS_SUPPORT_HPP

#include "homdef/study.hpp"

#include <cmath>
#include <memory>

namespace homdef::test {

inline std::shared_ptr<const DomainMesh> square_mesh(int m, double lo = 0.0, double hi = 1.0) {
  return std::make_shared<const DomainMesh>(build_domain_mesh(2, make_box({lo, lo}, {hi, hi}), m));
}

inline std::shared_ptr<const DomainMesh> interval_mesh(int m, double lo = 0.0, double hi = 1.0) {
  return std::make_shared<const DomainMesh>(build_domain_mesh(1, make_box({lo}, {hi}), m));
}

inline Point point(double x) {
  Point p(1);
  p << x;
  return p;
}

inline Point point(double x, double y) {
  Point p(2);
  p << x, y;
  return p;
}

inline TensorBlock scalar_block(double v, int size = 1) {
  return TensorBlock::Identity(size, size) * v;
}

/// Nodal interpolant of f, zero on the boundary.
template <typename F>
DiscreteField interpolate(std::shared_ptr<const DomainMesh> mesh, F&& f) {
  DiscreteField u(mesh, 1);
  for (int n = 0; n < mesh->num_nodes(); ++n) {
    u(n, 0) = mesh->on_boundary[n] ? 0.0 : f(Point(mesh->nodes.col(n)));
  }
  return u;
}

}  // namespace homdef::test

#endif
