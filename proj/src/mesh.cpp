#include "homdef/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace homdef {

namespace {

int lattice_index(int i, int j, int m) { return i + (m + 1) * j; }

void fill_structured(Simplices& s, int dim, const Box& box, int m) {
  s.dim = dim;
  if (dim == 1) {
    s.nodes.resize(1, m + 1);
    for (int i = 0; i <= m; ++i) {
      s.nodes(0, i) = box.lower(0) + box.extent(0) * static_cast<double>(i) / m;
    }
    s.elements.resize(2, m);
    for (int i = 0; i < m; ++i) {
      s.elements(0, i) = i;
      s.elements(1, i) = i + 1;
    }
    return;
  }
  s.nodes.resize(2, (m + 1) * (m + 1));
  for (int j = 0; j <= m; ++j) {
    for (int i = 0; i <= m; ++i) {
      const int n = lattice_index(i, j, m);
      s.nodes(0, n) = box.lower(0) + box.extent(0) * static_cast<double>(i) / m;
      s.nodes(1, n) = box.lower(1) + box.extent(1) * static_cast<double>(j) / m;
    }
  }
  s.elements.resize(3, 2 * m * m);
  for (int j = 0; j < m; ++j) {
    for (int i = 0; i < m; ++i) {
      const int c = i + m * j;
      const int p00 = lattice_index(i, j, m);
      const int p10 = lattice_index(i + 1, j, m);
      const int p11 = lattice_index(i + 1, j + 1, m);
      const int p01 = lattice_index(i, j + 1, m);
      s.elements.col(2 * c) << p00, p10, p11;
      s.elements.col(2 * c + 1) << p00, p11, p01;
    }
  }
}

// Structured point location for local coordinates s in [0, m]^d.
Location locate_structured(int dim, int m, double s0, double s1) {
  Location loc;
  const int i = std::clamp(static_cast<int>(std::floor(s0)), 0, m - 1);
  const double a = s0 - i;
  if (dim == 1) {
    loc.element = i;
    loc.weights.resize(2);
    loc.weights << 1.0 - a, a;
    return loc;
  }
  const int j = std::clamp(static_cast<int>(std::floor(s1)), 0, m - 1);
  const double b = s1 - j;
  const int c = i + m * j;
  loc.weights.resize(3);
  if (a >= b) {
    loc.element = 2 * c;
    loc.weights << 1.0 - a, a - b, b;
  } else {
    loc.element = 2 * c + 1;
    loc.weights << 1.0 - b, a, b - a;
  }
  return loc;
}

void check_dim(int dim) {
  if (dim != 1 && dim != 2) {
    throw ConfigError("dimension must be 1 or 2, got " + std::to_string(dim));
  }
}

}  // namespace

ElementGeometry Simplices::geometry(int element) const {
  ElementGeometry g;
  const auto v = elements.col(element);
  g.barycenter = Point::Zero(dim);
  for (int a = 0; a <= dim; ++a) g.barycenter += nodes.col(v(a));
  g.barycenter /= static_cast<double>(dim + 1);
  g.gradients.resize(dim, dim + 1);
  if (dim == 1) {
    const double h = nodes(0, v(1)) - nodes(0, v(0));
    g.volume = h;
    g.gradients << -1.0 / h, 1.0 / h;
    return g;
  }
  Eigen::Matrix2d jac;
  jac.col(0) = nodes.col(v(1)) - nodes.col(v(0));
  jac.col(1) = nodes.col(v(2)) - nodes.col(v(0));
  const double det = jac.determinant();
  g.volume = 0.5 * det;
  const Eigen::Matrix2d inv = jac.inverse();
  // Rows of J^{-1} are the gradients of lambda_1 and lambda_2.
  g.gradients.col(1) = inv.row(0).transpose();
  g.gradients.col(2) = inv.row(1).transpose();
  g.gradients.col(0) = -(g.gradients.col(1) + g.gradients.col(2));
  return g;
}

double Simplices::total_volume() const {
  double sum = 0.0;
  for (int e = 0; e < num_elements(); ++e) sum += geometry(e).volume;
  return sum;
}

UnitCellGrid build_unit_cell_grid(int dim, int subdivisions) {
  check_dim(dim);
  if (subdivisions < 2) {
    throw ConfigError("cell grid needs at least 2 subdivisions, got " +
                      std::to_string(subdivisions));
  }
  const int m = subdivisions;
  UnitCellGrid grid;
  grid.subdivisions = m;
  fill_structured(grid, dim, unit_box(dim), m);

  const int n = grid.num_nodes();
  grid.partner.assign(n, -1);
  grid.master.assign(n, -1);
  grid.master_count_ = dim == 1 ? m : m * m;
  grid.master_nodes_.assign(grid.master_count_, -1);

  auto reflect = [m](int i) { return (i == 0 || i == m) ? m - i : i; };
  auto on_face = [m](int i) { return i == 0 || i == m; };

  if (dim == 1) {
    for (int i = 0; i <= m; ++i) {
      if (on_face(i)) grid.partner[i] = reflect(i);
      grid.master[i] = i % m;
      if (i < m) grid.master_nodes_[i] = i;
    }
    return grid;
  }
  for (int j = 0; j <= m; ++j) {
    for (int i = 0; i <= m; ++i) {
      const int node = lattice_index(i, j, m);
      if (on_face(i) || on_face(j)) {
        grid.partner[node] = lattice_index(reflect(i), reflect(j), m);
      }
      const int dof = (i % m) + m * (j % m);
      grid.master[node] = dof;
      if (i < m && j < m) grid.master_nodes_[dof] = node;
    }
  }
  return grid;
}

Location UnitCellGrid::locate(const Point& y) const {
  const int m = subdivisions;
  auto wrap = [m](double v) {
    double f = v - std::floor(v);
    if (f >= 1.0) f = 0.0;
    return f * m;
  };
  return locate_structured(dim, m, wrap(y(0)), dim == 2 ? wrap(y(1)) : 0.0);
}

Box unit_box(int dim) {
  check_dim(dim);
  return Box{Point::Zero(dim), Point::Ones(dim)};
}

Box make_box(const std::vector<double>& lower, const std::vector<double>& upper) {
  if (lower.size() != upper.size()) {
    throw ConfigError("box lower/upper corners differ in dimension");
  }
  check_dim(static_cast<int>(lower.size()));
  Box box{Point(lower.size()), Point(lower.size())};
  for (std::size_t k = 0; k < lower.size(); ++k) {
    box.lower(k) = lower[k];
    box.upper(k) = upper[k];
  }
  return box;
}

DomainMesh build_domain_mesh(int dim, const Box& box, int subdivisions) {
  check_dim(dim);
  if (box.lower.size() != dim || box.upper.size() != dim) {
    throw ConfigError("box dimension does not match mesh dimension");
  }
  for (int k = 0; k < dim; ++k) {
    if (!(box.extent(k) > 0.0) || !std::isfinite(box.extent(k))) {
      throw ConfigError("degenerate domain extent along axis " + std::to_string(k));
    }
  }
  if (subdivisions < 2) {
    throw ConfigError("domain mesh needs at least 2 subdivisions, got " +
                      std::to_string(subdivisions));
  }
  DomainMesh mesh;
  mesh.box = box;
  mesh.subdivisions = subdivisions;
  fill_structured(mesh, dim, box, subdivisions);

  const int m = subdivisions;
  mesh.on_boundary.assign(mesh.num_nodes(), false);
  if (dim == 1) {
    mesh.on_boundary[0] = mesh.on_boundary[m] = true;
  } else {
    for (int j = 0; j <= m; ++j) {
      for (int i = 0; i <= m; ++i) {
        if (i == 0 || j == 0 || i == m || j == m) mesh.on_boundary[lattice_index(i, j, m)] = true;
      }
    }
  }

  mesh.diameters.resize(mesh.num_elements());
  for (int e = 0; e < mesh.num_elements(); ++e) {
    double diam = 0.0;
    const auto v = mesh.elements.col(e);
    for (int a = 0; a <= dim; ++a) {
      for (int b = a + 1; b <= dim; ++b) {
        diam = std::max(diam, (mesh.nodes.col(v(a)) - mesh.nodes.col(v(b))).norm());
      }
    }
    mesh.diameters(e) = diam;
  }
  mesh.max_diameter = mesh.diameters.maxCoeff();
  return mesh;
}

int DomainMesh::num_boundary_nodes() const {
  return static_cast<int>(std::count(on_boundary.begin(), on_boundary.end(), true));
}

double DomainMesh::distance_to_boundary(const Point& x) const {
  double dist = std::numeric_limits<double>::infinity();
  for (int k = 0; k < dim; ++k) {
    dist = std::min({dist, x(k) - box.lower(k), box.upper(k) - x(k)});
  }
  return std::max(dist, 0.0);
}

std::optional<Location> DomainMesh::locate(const Point& x) const {
  for (int k = 0; k < dim; ++k) {
    if (x(k) < box.lower(k) || x(k) > box.upper(k)) return std::nullopt;
  }
  const int m = subdivisions;
  const double s0 = (x(0) - box.lower(0)) / spacing(0);
  const double s1 = dim == 2 ? (x(1) - box.lower(1)) / spacing(1) : 0.0;
  return locate_structured(dim, m, s0, s1);
}

std::vector<bool> boundary_strip_indicator(const DomainMesh& mesh, double eps) {
  std::vector<bool> inside(mesh.num_nodes());
  for (int n = 0; n < mesh.num_nodes(); ++n) inside[n] = mesh.distance_to_boundary(n) < eps;
  return inside;
}

double boundary_strip_measure(const DomainMesh& mesh, double eps) {
  const auto strip = boundary_strip_indicator(mesh, eps);
  double measure = 0.0;
  for (int e = 0; e < mesh.num_elements(); ++e) {
    bool all = true;
    for (int a = 0; a < mesh.vertices_per_element(); ++a) all = all && strip[mesh.elements(a, e)];
    if (all) measure += mesh.geometry(e).volume;
  }
  return measure;
}

}  // namespace homdef
