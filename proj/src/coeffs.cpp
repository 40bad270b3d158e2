#include "homdef/coeffs.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

namespace homdef {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

TensorBlock scalar_block(int dim, double value) {
  return TensorBlock::Identity(dim, dim) * value;
}

Point reduce_to_cell(const Point& y) {
  Point r(y.size());
  for (int k = 0; k < y.size(); ++k) {
    double f = y(k) - std::floor(y(k));
    r(k) = f >= 1.0 ? 0.0 : f;
  }
  return r;
}

void require_scalar_dim(int dim) {
  if (dim != 1 && dim != 2) throw ConfigError("coefficient dimension must be 1 or 2");
}

}  // namespace

PeriodicCoefficient::PeriodicCoefficient(int components, int dim, Evaluator eval,
                                         CoefficientKind kind, std::string name)
    : components_(components), dim_(dim), eval_(std::move(eval)), kind_(kind),
      name_(std::move(name)) {
  if (components < 1 || components * dim > kMaxBlock) {
    throw ConfigError("unsupported system size for coefficient '" + name_ + "'");
  }
}

TensorBlock PeriodicCoefficient::operator()(const Point& y) const {
  return eval_(reduce_to_cell(y));
}

PeriodicCoefficient constant_coefficient(const TensorBlock& value, int components, int dim) {
  require_scalar_dim(dim);
  if (value.rows() != components * dim || value.cols() != components * dim) {
    throw ConfigError("constant tensor has wrong shape");
  }
  return PeriodicCoefficient(
      components, dim, [value](const Point&) { return value; }, CoefficientKind::constant,
      "constant");
}

PeriodicCoefficient identity_coefficient(int components, int dim) {
  return constant_coefficient(TensorBlock::Identity(components * dim, components * dim),
                              components, dim);
}

PeriodicCoefficient laminate_coefficient(int dim, double mean, double amplitude,
                                         std::optional<double> transverse) {
  require_scalar_dim(dim);
  return PeriodicCoefficient(
      1, dim,
      [dim, mean, amplitude, transverse](const Point& y) {
        const double alpha = mean + amplitude * std::sin(kTwoPi * y(0));
        TensorBlock t = scalar_block(dim, alpha);
        if (dim == 2 && transverse) t(1, 1) = *transverse;
        return t;
      },
      CoefficientKind::laminate, "laminate");
}

PeriodicCoefficient checkerboard_coefficient(int dim, double phase0, double phase1) {
  require_scalar_dim(dim);
  return PeriodicCoefficient(
      1, dim,
      [dim, phase0, phase1](const Point& y) {
        int parity = y(0) < 0.5 ? 0 : 1;
        if (dim == 2) parity += y(1) < 0.5 ? 0 : 1;
        return scalar_block(dim, parity % 2 == 0 ? phase0 : phase1);
      },
      CoefficientKind::checkerboard, "checkerboard");
}

PeriodicCoefficient trig_coefficient(int dim, double mean, double amplitude) {
  require_scalar_dim(dim);
  return PeriodicCoefficient(
      1, dim,
      [dim, mean, amplitude](const Point& y) {
        const double second = dim == 2 ? std::cos(kTwoPi * y(1)) : 1.0;
        return scalar_block(dim, mean + amplitude * std::sin(kTwoPi * y(0)) * second);
      },
      CoefficientKind::trig, "trig");
}

PeriodicCoefficient coupled_laminate_coefficient(int dim, double mean, double amplitude,
                                                 double coupling) {
  require_scalar_dim(dim);
  return PeriodicCoefficient(
      2, dim,
      [dim, mean, amplitude, coupling](const Point& y) {
        const double alpha = mean + amplitude * std::sin(kTwoPi * y(0));
        TensorBlock t = TensorBlock::Zero(2 * dim, 2 * dim);
        for (int a = 0; a < 2; ++a) {
          for (int b = 0; b < 2; ++b) {
            for (int i = 0; i < dim; ++i) t(a * dim + i, b * dim + i) = a == b ? alpha : coupling;
          }
        }
        return t;
      },
      CoefficientKind::coupled_laminate, "coupled_laminate");
}

PeriodicCoefficient table_coefficient(int dim, const Matrix& samples) {
  require_scalar_dim(dim);
  if (samples.size() == 0 || (dim == 1 && samples.rows() != 1)) {
    throw ConfigError("coefficient table has wrong shape");
  }
  if (samples.minCoeff() <= 0.0) throw ConfigError("coefficient table must be positive");
  return PeriodicCoefficient(
      1, dim,
      [dim, samples](const Point& y) {
        const auto cols = static_cast<int>(samples.cols());
        const auto rows = static_cast<int>(samples.rows());
        const double s = y(0) * cols;
        const int i0 = std::min(static_cast<int>(s), cols - 1);
        const double a = s - i0;
        const int i1 = (i0 + 1) % cols;
        if (dim == 1) {
          return scalar_block(1, (1 - a) * samples(0, i0) + a * samples(0, i1));
        }
        const double t = y(1) * rows;
        const int j0 = std::min(static_cast<int>(t), rows - 1);
        const double b = t - j0;
        const int j1 = (j0 + 1) % rows;
        const double v = (1 - a) * (1 - b) * samples(j0, i0) + a * (1 - b) * samples(j0, i1) +
                         (1 - a) * b * samples(j1, i0) + a * b * samples(j1, i1);
        return scalar_block(2, v);
      },
      CoefficientKind::table, "table");
}

Matrix load_coefficient_table(const std::string& csv_path) {
  std::ifstream in(csv_path);
  if (!in) throw ConfigError("cannot open coefficient table '" + csv_path + "'");
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw ConfigError("non-numeric entry '" + cell + "' in " + csv_path);
      }
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw ConfigError("ragged coefficient table " + csv_path);
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ConfigError("empty coefficient table " + csv_path);
  Matrix m(rows.size(), rows.front().size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows[r].size(); ++c) m(r, c) = rows[r][c];
  }
  return m;
}

DefectCoefficient::DefectCoefficient(int components, int dim, Evaluator eval, std::string name,
                                     double truncation_radius, bool compact,
                                     std::optional<double> declared_l1)
    : components_(components), dim_(dim), eval_(std::move(eval)), name_(std::move(name)),
      truncation_radius_(truncation_radius), compact_(compact), declared_l1_(declared_l1) {}

TensorBlock DefectCoefficient::operator()(const Point& y) const {
  if (y.norm() >= truncation_radius_) {
    return TensorBlock::Zero(components_ * dim_, components_ * dim_);
  }
  return eval_(y);
}

DefectCoefficient ball_defect(const TensorBlock& value, int components, int dim, double radius) {
  if (!(radius > 0.0)) throw ConfigError("defect radius must be positive");
  return DefectCoefficient(
      components, dim, [value](const Point&) { return value; }, "ball", radius, true,
      std::nullopt);
}

DefectCoefficient scaled_ball_defect(const PeriodicCoefficient& a, double factor, double radius) {
  if (!(radius > 0.0)) throw ConfigError("defect radius must be positive");
  return DefectCoefficient(
      a.components(), a.dim(), [a, factor](const Point& y) { return TensorBlock(factor * a(y)); },
      "scaled_ball", radius, true, std::nullopt);
}

DefectCoefficient gaussian_defect(int components, int dim, double amplitude, double width) {
  if (!(width > 0.0)) throw ConfigError("defect width must be positive");
  const int size = components * dim;
  // exp(-r^2/w^2) < 1e-17 beyond r = w sqrt(17 ln 10)
  const double cut = width * std::sqrt(17.0 * std::log(10.0));
  const double l1 = std::abs(amplitude) * std::pow(std::sqrt(std::numbers::pi) * width, dim);
  return DefectCoefficient(
      components, dim,
      [size, amplitude, width](const Point& y) {
        return TensorBlock(TensorBlock::Identity(size, size) * amplitude *
                           std::exp(-y.squaredNorm() / (width * width)));
      },
      "gaussian", cut, false, l1);
}

Nonlinearity::Nonlinearity(int components, int dim, Evaluator eval, std::string name, bool linear,
                           bool has_flux)
    : components_(components), dim_(dim), eval_(std::move(eval)), name_(std::move(name)),
      linear_(linear), has_flux_(has_flux) {}

NonlinearTerms Nonlinearity::operator()(const Point& x, const SmallVector& u) const {
  NonlinearTerms t;
  t.flux = TensorBlock::Zero(components_, dim_);
  t.source = SmallVector::Zero(components_);
  t.flux_du = TensorBlock::Zero(components_ * dim_, components_);
  t.source_du = TensorBlock::Zero(components_, components_);
  eval_(x, u, t);
  return t;
}

Nonlinearity zero_nonlinearity(int components, int dim) {
  return Nonlinearity(
      components, dim, [](const Point&, const SmallVector&, NonlinearTerms&) {}, "zero", true,
      false);
}

Nonlinearity linear_nonlinearity(int components, int dim, double forcing) {
  return cubic_nonlinearity(components, dim, forcing, 0.0, 1.0);
}

Nonlinearity cubic_nonlinearity(int components, int dim, double forcing, double cubic,
                                double linear) {
  return Nonlinearity(
      components, dim,
      [components, forcing, cubic, linear](const Point&, const SmallVector& u, NonlinearTerms& t) {
        for (int a = 0; a < components; ++a) {
          t.source(a) = cubic * u(a) * u(a) * u(a) + linear * u(a) - forcing;
          t.source_du(a, a) = 3.0 * cubic * u(a) * u(a) + linear;
        }
      },
      cubic == 0.0 ? "linear" : "cubic", cubic == 0.0, false);
}

Nonlinearity convective_nonlinearity(int components, int dim, const std::vector<double>& velocity,
                                     double forcing) {
  if (static_cast<int>(velocity.size()) != dim) {
    throw ConfigError("convective velocity must have one entry per dimension");
  }
  return Nonlinearity(
      components, dim,
      [components, dim, velocity, forcing](const Point&, const SmallVector& u, NonlinearTerms& t) {
        for (int a = 0; a < components; ++a) {
          for (int i = 0; i < dim; ++i) {
            t.flux(a, i) = 0.5 * velocity[i] * u(a) * u(a);
            t.flux_du(a * dim + i, a) = velocity[i] * u(a);
          }
          t.source(a) = u(a) - forcing;
          t.source_du(a, a) = 1.0;
        }
      },
      "convective", false, true);
}

double derivative_mismatch(const Nonlinearity& nl, const std::vector<Point>& xs,
                           const std::vector<SmallVector>& us) {
  const int n = nl.components();
  const int d = nl.dim();
  double worst = 0.0;
  for (const auto& x : xs) {
    for (const auto& u : us) {
      const NonlinearTerms t = nl(x, u);
      for (int g = 0; g < n; ++g) {
        const double step = 1e-6 * std::max(1.0, std::abs(u(g)));
        SmallVector up = u;
        SmallVector um = u;
        up(g) += step;
        um(g) -= step;
        const NonlinearTerms tp = nl(x, up);
        const NonlinearTerms tm = nl(x, um);
        auto compare = [&worst](double exact, double fd) {
          const double scale = std::max(1.0, std::abs(exact));
          worst = std::max(worst, std::abs(exact - fd) / scale);
        };
        for (int a = 0; a < n; ++a) {
          compare(t.source_du(a, g), (tp.source(a) - tm.source(a)) / (2 * step));
          for (int i = 0; i < d; ++i) {
            compare(t.flux_du(a * d + i, g), (tp.flux(a, i) - tm.flux(a, i)) / (2 * step));
          }
        }
      }
    }
  }
  return worst;
}

double legendre_minimum(const TensorBlock& t) {
  const Matrix sym = 0.5 * (Matrix(t) + Matrix(t).transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

namespace {

template <typename Eval>
double lattice_minimum(int dim, double lo, double hi, int per_unit, Eval&& eval) {
  const int count = static_cast<int>(std::lround((hi - lo) * per_unit));
  double best = std::numeric_limits<double>::infinity();
  Point y(dim);
  for (int j = 0; j < (dim == 2 ? count : 1); ++j) {
    for (int i = 0; i < count; ++i) {
      y(0) = lo + (i + 0.5) / per_unit;
      if (dim == 2) y(1) = lo + (j + 0.5) / per_unit;
      best = std::min(best, eval(y));
    }
  }
  return best;
}

}  // namespace

double coercivity_constant(const PeriodicCoefficient& a, int sample_density) {
  if (sample_density < 8) throw ConfigError("coercivity sample density must be >= 8");
  const double c0 = lattice_minimum(a.dim(), 0.0, 1.0, sample_density,
                                    [&a](const Point& y) { return legendre_minimum(a(y)); });
  if (!(c0 > 0.0)) {
    throw NonCoerciveError("coefficient '" + a.name() +
                           "' is not coercive (sampled minimum " + std::to_string(c0) + ")");
  }
  return c0;
}

double combined_coercivity(const PeriodicCoefficient& a, const DefectCoefficient& b,
                           int sample_density) {
  if (sample_density < 8) throw ConfigError("coercivity sample density must be >= 8");
  if (a.components() != b.components() || a.dim() != b.dim()) {
    throw ConfigError("defect and periodic coefficient have different shapes");
  }
  // Integer half-width keeps the lattice aligned with the unit-cell lattice.
  const double half = std::ceil(b.truncation_radius()) + 1.0;
  const double c = lattice_minimum(a.dim(), -half, half, sample_density, [&](const Point& y) {
    return legendre_minimum(TensorBlock(a(y) + b(y)));
  });
  if (!(c > 0.0)) {
    throw NonCoerciveError("a + b is not coercive (sampled minimum " + std::to_string(c) + ")");
  }
  return c;
}

}  // namespace homdef
