#include "homdef/corrector.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

namespace homdef {

void gauss_legendre(int count, std::vector<double>& nodes, std::vector<double>& weights) {
  if (count < 1) throw ConfigError("Gauss-Legendre rule needs at least one point");
  nodes.assign(count, 0.0);
  weights.assign(count, 0.0);
  for (int i = 0; i < (count + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (count + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0;
      double p1 = x;
      for (int k = 2; k <= count; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = count * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    nodes[i] = -x;
    nodes[count - 1 - i] = x;
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    weights[i] = w;
    weights[count - 1 - i] = w;
  }
}

double Mollifier::profile(double r) {
  if (r >= 1.0) return 0.0;
  return std::exp(-1.0 / (1.0 - r * r));
}

Mollifier::Mollifier(int dim, BallRule rule) : dim_(dim) {
  if (dim != 1 && dim != 2) throw ConfigError("mollifier dimension must be 1 or 2");
  if (rule.radial == 0) rule.radial = dim == 1 ? 32 : 8;
  if (rule.angular == 0) rule.angular = 16;
  if (rule.radial % 2 != 0 || (dim == 2 && rule.angular % 2 != 0)) {
    throw ConfigError("ball rule point counts must be even");
  }

  // Reference normalization: composite 16-point Gauss over 64 panels of [0, 1].
  std::vector<double> gx, gw;
  gauss_legendre(16, gx, gw);
  const int panels = 64;
  double radial_integral = 0.0;
  for (int p = 0; p < panels; ++p) {
    for (std::size_t q = 0; q < gx.size(); ++q) {
      const double r = (p + 0.5 * (gx[q] + 1.0)) / panels;
      const double w = 0.5 * gw[q] / panels;
      radial_integral += w * profile(r) * (dim == 1 ? 1.0 : r);
    }
  }
  normalization_ = dim == 1 ? 2.0 * radial_integral : 2.0 * std::numbers::pi * radial_integral;

  std::vector<double> rx, rw;
  gauss_legendre(rule.radial, rx, rw);
  if (dim == 1) {
    for (std::size_t q = 0; q < rx.size(); ++q) {
      Point p(1);
      p << rx[q];
      nodes_.push_back(p);
      weights_.push_back(rw[q] * profile(std::abs(rx[q])) / normalization_);
    }
  } else {
    const double dtheta = 2.0 * std::numbers::pi / rule.angular;
    for (std::size_t q = 0; q < rx.size(); ++q) {
      const double r = 0.5 * (rx[q] + 1.0);
      const double wr = 0.5 * rw[q] * r * profile(r) / normalization_;
      for (int t = 0; t < rule.angular; ++t) {
        const double theta = (t + 0.5) * dtheta;
        Point p(2);
        p << r * std::cos(theta), r * std::sin(theta);
        nodes_.push_back(p);
        weights_.push_back(wr * dtheta);
      }
    }
  }
  rule_mass_ = 0.0;
  for (double w : weights_) rule_mass_ += w;
  for (double& w : weights_) w /= rule_mass_;
}

double Mollifier::operator()(const Point& x) const { return profile(x.norm()) / normalization_; }

SteklovSmoother::SteklovSmoother(std::shared_ptr<const DomainMesh> mesh, double delta,
                                 const Mollifier& mollifier)
    : mesh_(std::move(mesh)), delta_(delta), mollifier_(&mollifier) {
  if (!(delta > 0.0)) throw ConfigError("smoothing radius must be positive");
  if (mollifier.dim() != mesh_->dim) throw ConfigError("mollifier and mesh dimensions differ");
}

SmallVector SteklovSmoother::smooth_nodal(const Vector& values, int components,
                                          const Point& x) const {
  SmallVector out = SmallVector::Zero(components);
  const auto& nodes = mollifier_->nodes();
  const auto& weights = mollifier_->weights();
  for (std::size_t q = 0; q < nodes.size(); ++q) {
    const auto loc = mesh_->locate(x - delta_ * nodes[q]);
    if (!loc) continue;
    for (int p = 0; p < loc->weights.size(); ++p) {
      const int node = mesh_->elements(p, loc->element);
      out += weights[q] * loc->weights(p) * values.segment(node * components, components);
    }
  }
  return out;
}

Eigen::RowVectorXd SteklovSmoother::smooth_elemental(const Matrix& values, const Point& x) const {
  Eigen::RowVectorXd out = Eigen::RowVectorXd::Zero(values.cols());
  const auto& nodes = mollifier_->nodes();
  const auto& weights = mollifier_->weights();
  for (std::size_t q = 0; q < nodes.size(); ++q) {
    const auto loc = mesh_->locate(x - delta_ * nodes[q]);
    if (loc) out += weights[q] * values.row(loc->element);
  }
  return out;
}

double lr_norm(const DomainMesh& mesh, const Vector& u, double r) {
  double sum = 0.0;
  const int nv = mesh.vertices_per_element();
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const double vol = mesh.geometry(e).volume;
    double local = 0.0;
    if (nv == 2) {
      // Simpson on the interval.
      const double a = u(mesh.elements(0, e));
      const double b = u(mesh.elements(1, e));
      local = (std::pow(std::abs(a), r) + 4.0 * std::pow(std::abs(0.5 * (a + b)), r) +
               std::pow(std::abs(b), r)) / 6.0;
    } else {
      for (int p = 0; p < 3; ++p) {
        const double mid = 0.5 * (u(mesh.elements(p, e)) + u(mesh.elements((p + 1) % 3, e)));
        local += std::pow(std::abs(mid), r) / 3.0;
      }
    }
    sum += vol * local;
  }
  return std::pow(sum, 1.0 / r);
}

double steklov_bound_ratio(std::shared_ptr<const DomainMesh> mesh, const Vector& u, double delta,
                           double r, const Mollifier& mollifier, const std::vector<Point>& points) {
  const double norm = lr_norm(*mesh, u, r);
  if (!(norm > 0.0)) throw NumericalError("steklov_bound_ratio: field has zero L^r norm");
  const SteklovSmoother smoother(mesh, delta, mollifier);
  double sup = 0.0;
  if (points.empty()) {
    for (int n = 0; n < mesh->num_nodes(); ++n) {
      sup = std::max(sup, std::abs(smoother.smooth_nodal(u, 1, mesh->nodes.col(n))(0)));
    }
  } else {
    for (const Point& x : points) sup = std::max(sup, std::abs(smoother.smooth_nodal(u, 1, x)(0)));
  }
  return std::pow(delta, mesh->dim / r) * sup / norm;
}

double steklov_bound_constant(const Mollifier& mollifier, double r) {
  if (!(r > 1.0)) throw ConfigError("bound exponent r must exceed 1");
  const double rp = r / (r - 1.0);
  double sum = 0.0;
  for (std::size_t q = 0; q < mollifier.nodes().size(); ++q) {
    sum += mollifier.weights()[q] * std::pow(mollifier(mollifier.nodes()[q]), rp - 1.0);
  }
  return std::pow(sum, 1.0 / rp);
}

Vector steklov_extremal_field(const DomainMesh& mesh, const Mollifier& mollifier, const Point& x,
                              double delta, double r) {
  if (!(r > 1.0)) throw ConfigError("bound exponent r must exceed 1");
  if (!(delta > 0.0)) throw ConfigError("smoothing radius must be positive");
  const double rp = r / (r - 1.0);
  Vector u(mesh.num_nodes());
  for (int n = 0; n < mesh.num_nodes(); ++n) {
    const Point z = (mesh.nodes.col(n) - x) / delta;
    u(n) = std::pow(mollifier(z), rp - 1.0);
  }
  return u;
}

CutoffFamily build_cutoff(const DomainMesh& mesh, double eps) {
  if (!(eps > 0.0)) throw ConfigError("cutoff scale must be positive");
  const int nn = mesh.num_nodes();
  Vector dist(nn);
  for (int n = 0; n < nn; ++n) dist(n) = mesh.distance_to_boundary(n);
  if (!(dist.maxCoeff() >= 2.0 * eps)) {
    throw ConfigError("eps = " + std::to_string(eps) +
                      " is too large: the strip of width 2 eps covers the whole domain");
  }
  Vector raw(nn);
  for (int n = 0; n < nn; ++n) raw(n) = std::clamp((dist(n) - eps) / eps, 0.0, 1.0);

  std::vector<std::vector<int>> neighbours(nn);
  for (int e = 0; e < mesh.num_elements(); ++e) {
    for (int p = 0; p < mesh.vertices_per_element(); ++p)
      for (int q = 0; q < mesh.vertices_per_element(); ++q)
        neighbours[mesh.elements(p, e)].push_back(mesh.elements(q, e));
  }
  for (auto& list : neighbours) {
    std::sort(list.begin(), list.end());
    list.erase(std::unique(list.begin(), list.end()), list.end());
  }
  CutoffFamily out;
  out.eps = eps;
  out.values.resize(nn);
  for (int n = 0; n < nn; ++n) {
    double s = 0.0;
    for (int k : neighbours[n]) s += raw(k);
    double v = s / static_cast<double>(neighbours[n].size());
    if (dist(n) < eps) v = 0.0;
    if (dist(n) >= 2.0 * eps) v = 1.0;
    out.values(n) = v;
  }
  double grad = 0.0;
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const auto g = mesh.geometry(e);
    Point ge = Point::Zero(mesh.dim);
    for (int p = 0; p < mesh.vertices_per_element(); ++p) {
      ge += out.values(mesh.elements(p, e)) * g.gradients.col(p);
    }
    grad = std::max(grad, ge.norm());
  }
  out.gradient_constant = eps * grad;
  return out;
}

Matrix recover_gradient(const DiscreteField& u) {
  const DomainMesh& mesh = u.mesh();
  const int n = u.components();
  const int d = mesh.dim;
  Matrix grad = Matrix::Zero(mesh.num_nodes(), n * d);
  Vector weight = Vector::Zero(mesh.num_nodes());
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const double vol = mesh.geometry(e).volume;
    const TensorBlock ge = u.element_gradient(e);
    Eigen::RowVectorXd flat(n * d);
    for (int a = 0; a < n; ++a)
      for (int k = 0; k < d; ++k) flat(a * d + k) = ge(a, k);
    for (int p = 0; p < mesh.vertices_per_element(); ++p) {
      const int node = mesh.elements(p, e);
      grad.row(node) += vol * flat;
      weight(node) += vol;
    }
  }
  for (int node = 0; node < mesh.num_nodes(); ++node) grad.row(node) /= weight(node);
  return grad;
}

std::string variant_name(Variant v) {
  switch (v) {
    case Variant::smoothed_2d: return "smoothed-2d";
    case Variant::plain_2d: return "plain-2d";
    case Variant::plain_scalar: return "plain-scalar";
  }
  return "unknown";
}

Variant parse_variant(const std::string& name) {
  if (name == "smoothed-2d") return Variant::smoothed_2d;
  if (name == "plain-2d") return Variant::plain_2d;
  if (name == "plain-scalar") return Variant::plain_scalar;
  throw ConfigError("unknown variant '" + name + "' (expected smoothed-2d, plain-2d, plain-scalar)");
}

double smoothing_radius(double eps) {
  if (eps >= std::exp(-1.0)) return 0.3;
  return 1.0 / std::abs(std::log(eps));
}

ApproximateSolution build_approximate_solution(Variant variant, const DiscreteField& u0,
                                               const CorrectorSet& correctors, double eps,
                                               const CutoffFamily& cutoff,
                                               const ApproximationOptions& options) {
  const auto& mesh_ptr = u0.mesh_ptr();
  const DomainMesh& mesh = *mesh_ptr;
  const int n = u0.components();
  const int d = mesh.dim;
  if (!(eps > 0.0)) throw ConfigError("eps must be positive");
  if (correctors.components() != n || correctors.dim() != d) {
    throw ConfigError("correctors do not match the field layout");
  }
  if (variant == Variant::plain_scalar && n != 1) {
    throw ConfigError("plain-scalar variant needs a scalar problem");
  }
  if (cutoff.values.size() != mesh.num_nodes() || std::abs(cutoff.eps - eps) > 1e-15 * eps) {
    throw ConfigError("cutoff was built for a different mesh or eps");
  }
  // Zero correctors leave nothing oscillating to resolve.
  if (!options.allow_underresolved && correctors.max_abs() > 0.0 &&
      mesh.max_diameter > eps / options.resolution_floor * (1 + 1e-12)) {
    throw ConfigError("mesh too coarse for eps = " + std::to_string(eps) + ": h = " +
                      std::to_string(mesh.max_diameter) + " exceeds eps/" +
                      std::to_string(options.resolution_floor));
  }

  ApproximateSolution out{u0, variant, eps, 0.0, 0.0};
  Matrix nodal_grad;
  Matrix element_grad;
  std::optional<Mollifier> mollifier;
  std::optional<SteklovSmoother> smoother;
  if (variant == Variant::smoothed_2d) {
    out.delta = smoothing_radius(eps);
    element_grad.resize(mesh.num_elements(), n * d);
    for (int e = 0; e < mesh.num_elements(); ++e) {
      const TensorBlock ge = u0.element_gradient(e);
      for (int a = 0; a < n; ++a)
        for (int k = 0; k < d; ++k) element_grad(e, a * d + k) = ge(a, k);
    }
    mollifier.emplace(d, options.rule);
    smoother.emplace(mesh_ptr, out.delta, *mollifier);
  } else {
    nodal_grad = recover_gradient(u0);
  }

  Eigen::RowVectorXd grad(n * d);
  for (int node = 0; node < mesh.num_nodes(); ++node) {
    const double eta = cutoff.values(node);
    if (eta == 0.0) continue;
    const Point x = mesh.nodes.col(node);
    grad = smoother ? smoother->smooth_elemental(element_grad, x) : Eigen::RowVectorXd(nodal_grad.row(node));
    const TensorBlock v = correctors.value(x / eps);  // (a, g*d + k) -> v_k^{ag}
    for (int a = 0; a < n; ++a) {
      double s = 0.0;
      for (int c = 0; c < n * d; ++c) s += grad(c) * v(a, c);
      out.field(node, a) += eps * eta * s;
    }
  }
  out.sup_difference = (out.field.values() - u0.values()).cwiseAbs().maxCoeff();
  return out;
}

}  // namespace homdef
