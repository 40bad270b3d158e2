#ifndef HOMDEF_MESH_HPP
#define HOMDEF_MESH_HPP

#include "homdef/types.hpp"

#include <memory>
#include <optional>
#include <vector>

namespace homdef {

/// Barycentric gradients of a simplex, one column per vertex.
using SimplexGradients =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, 2, 3>;

struct ElementGeometry {
  double volume = 0.0;
  SimplexGradients gradients;
  Point barycenter;
};

/// Element containing a point plus the P1 weights of its vertices.
struct Location {
  int element = -1;
  SmallVector weights;
};

/// Nodes and simplex connectivity shared by the cell grid and domain meshes.
///
/// Structured layout: node (i, j) has index i + (m_x + 1) * j; square cell (i, j)
/// is split into a lower triangle (p00, p10, p11) with index 2c and an upper
/// triangle (p00, p11, p01) with index 2c + 1, where c = i + m_x * j.
struct Simplices {
  int dim = 0;
  Matrix nodes;               // dim x num_nodes
  Eigen::MatrixXi elements;   // (dim + 1) x num_elements

  int num_nodes() const { return static_cast<int>(nodes.cols()); }
  int num_elements() const { return static_cast<int>(elements.cols()); }
  int vertices_per_element() const { return dim + 1; }

  ElementGeometry geometry(int element) const;
  double total_volume() const;
};

class UnitCellGrid : public Simplices {
 public:
  int subdivisions = 0;
  /// Periodic partner of each node (-1 for nodes in the open cell).
  std::vector<int> partner;
  /// Master degree of freedom of each node after periodic identification.
  std::vector<int> master;

  int num_masters() const { return master_count_; }
  double spacing() const { return 1.0 / subdivisions; }

  /// Node index of the master dof (the node with all lattice indices < m).
  int master_node(int master_dof) const { return master_nodes_[master_dof]; }

  /// Locates y after reduction to [0,1)^d.
  Location locate(const Point& y) const;

  friend UnitCellGrid build_unit_cell_grid(int dim, int subdivisions);

 private:
  int master_count_ = 0;
  std::vector<int> master_nodes_;
};

/// Axis-aligned box (a_1,b_1) x ... x (a_d,b_d).
struct Box {
  Point lower;
  Point upper;

  double extent(int axis) const { return upper(axis) - lower(axis); }
};

class DomainMesh : public Simplices {
 public:
  Box box;
  int subdivisions = 0;
  std::vector<bool> on_boundary;
  Vector diameters;  // per element
  double max_diameter = 0.0;

  double spacing(int axis) const { return box.extent(axis) / subdivisions; }
  int num_boundary_nodes() const;

  /// Exact Euclidean distance from x to the boundary of the box.
  double distance_to_boundary(const Point& x) const;
  double distance_to_boundary(int node) const { return distance_to_boundary(nodes.col(node)); }

  /// Element containing x, or nullopt for points outside the closed box.
  std::optional<Location> locate(const Point& x) const;
};

UnitCellGrid build_unit_cell_grid(int dim, int subdivisions);
DomainMesh build_domain_mesh(int dim, const Box& box, int subdivisions);

/// Convenience box constructors.
Box unit_box(int dim);
Box make_box(const std::vector<double>& lower, const std::vector<double>& upper);

/// Membership of each node in the boundary strip {x : dist(x, boundary) < eps}.
std::vector<bool> boundary_strip_indicator(const DomainMesh& mesh, double eps);

/// Total volume of elements whose vertices all lie in the boundary strip.
double boundary_strip_measure(const DomainMesh& mesh, double eps);

}  // namespace homdef

#endif  // HOMDEF_MESH_HPP
