#include "minlor/initial_data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "minlor/errors.hpp"
#include "minlor/fourier.hpp"

namespace minlor {

Matrix fd4_periodic_derivative(const Matrix& samples, double period) {
  const int n = static_cast<int>(samples.rows());
  if (n < 5) throw ContractViolation("need at least 5 samples for 4th-order differences");
  if (!(period > 0.0)) throw ContractViolation("period must be positive");
  const double h = period / n;
  Matrix out(n, samples.cols());
  for (int j = 0; j < n; ++j) {
    const int jm2 = (j + n - 2) % n, jm1 = (j + n - 1) % n;
    const int jp1 = (j + 1) % n, jp2 = (j + 2) % n;
    out.row(j) = (-samples.row(jp2) + 8.0 * samples.row(jp1) -
                  8.0 * samples.row(jm1) + samples.row(jm2)) /
                 (12.0 * h);
  }
  return out;
}

namespace {

void check_well_formed(const MetricSpec& m, const InitialCurve& c) {
  if (c.k0.rows() != c.k1.rows() || c.k0.cols() != c.k1.cols())
    throw ContractViolation("k0 and k1 shapes differ");
  if (c.dimension() != m.dimension())
    throw ContractViolation("curve dimension does not match metric");
  if (!is_power_of_two(c.n_nodes()) || c.n_nodes() < 8)
    throw ContractViolation("node count must be a power of two >= 8");
  if (!(c.period > 0.0)) throw ContractViolation("period must be positive");
  if (!c.k0.allFinite() || !c.k1.allFinite())
    throw ContractViolation("non-finite curve data");
}

struct Worst {
  int node = -1;
  double magnitude = 0.0;
  // keep the first, most extreme offender
  void update(int j, double mag) {
    if (node < 0 || mag > magnitude) {
      node = j;
      magnitude = mag;
    }
  }
  bool hit() const { return node >= 0; }
};

std::string node_msg(const char* what, const Worst& w) {
  std::ostringstream os;
  os << what << " at node " << w.node << " (magnitude " << w.magnitude << ")";
  return os.str();
}

}  // namespace

std::vector<Violation> validate(const MetricSpec& m, const InitialCurve& c,
                                const ValidateOptions& opt) {
  check_well_formed(m, c);
  const int n = c.n_nodes();
  const Matrix k0p = fd4_periodic_derivative(c.k0, c.period);

  Worst not_spacelike, not_timelike, degen_plus, degen_minus, not_orth,
      norm_mismatch;
  for (int j = 0; j < n; ++j) {
    const Vector at = c.k0.row(j);
    const Vector kp = k0p.row(j);
    const Vector k1 = c.k1.row(j);
    const double s = lorentz_inner(m, at, kp, kp);
    const double tau = lorentz_inner(m, at, k1, k1);
    const double cross = lorentz_inner(m, at, kp, k1);
    const double scale = flip_norm_sq(m, at, kp) + flip_norm_sq(m, at, k1);

    if (!(s > 0.0)) not_spacelike.update(j, -s);
    if (!(tau < 0.0)) not_timelike.update(j, tau);
    const double fp = flip_norm_sq(m, at, Vector(k1 + kp));
    const double fm = flip_norm_sq(m, at, Vector(k1 - kp));
    if (fp <= 1e-12 * scale) degen_plus.update(j, fp / scale);
    if (fm <= 1e-12 * scale) degen_minus.update(j, fm / scale);
    if (opt.require_conformal) {
      const double rel_orth = std::abs(cross) / scale;
      if (rel_orth > opt.tol_orthogonal) not_orth.update(j, rel_orth);
      const double rel_norm = std::abs(s + tau) / scale;
      if (rel_norm > opt.tol_norm) norm_mismatch.update(j, rel_norm);
    }
  }

  std::vector<Violation> out;
  if (not_spacelike.hit())
    out.push_back({ViolationKind::NotSpacelike, not_spacelike.node,
                   not_spacelike.magnitude,
                   node_msg("k0' not spacelike", not_spacelike)});
  if (not_timelike.hit())
    out.push_back({ViolationKind::NotTimelike, not_timelike.node,
                   not_timelike.magnitude,
                   node_msg("k1 not timelike", not_timelike)});
  if (degen_plus.hit())
    out.push_back({ViolationKind::DegeneratePlus, degen_plus.node,
                   degen_plus.magnitude,
                   node_msg("k1 + k0' degenerate", degen_plus)});
  if (degen_minus.hit())
    out.push_back({ViolationKind::DegenerateMinus, degen_minus.node,
                   degen_minus.magnitude,
                   node_msg("k1 - k0' degenerate", degen_minus)});
  if (not_orth.hit())
    out.push_back({ViolationKind::NotOrthogonal, not_orth.node,
                   not_orth.magnitude,
                   node_msg("k1 not orthogonal to k0'", not_orth)});
  if (norm_mismatch.hit())
    out.push_back({ViolationKind::NormMismatch, norm_mismatch.node,
                   norm_mismatch.magnitude,
                   node_msg("norm condition <k0',k0'> != -<k1,k1>",
                            norm_mismatch)});
  return out;
}

namespace {

// phi'(x) = sqrt(-<k1,k1> / <k0',k0'>) evaluated at phi via the interpolants.
struct SpeedField {
  const MetricSpec& m;
  const PeriodicInterpolant& k0;
  const PeriodicInterpolant& k0p;
  const PeriodicInterpolant& k1;

  double operator()(double phi) const {
    const Vector at = k0(phi);
    const Vector kp = k0p(phi);
    const Vector kv = k1(phi);
    const double s = lorentz_inner(m, at, kp, kp);
    const double tau = lorentz_inner(m, at, kv, kv);
    if (!(s > 0.0) || !(tau < 0.0))
      throw GeometryError("reparametrization speed undefined: curve leaves "
                          "the admissible regime between nodes");
    return std::sqrt(-tau / s);
  }
};

double rk4_step(const SpeedField& f, double phi, double ds) {
  const double a = f(phi);
  const double b = f(phi + 0.5 * ds * a);
  const double c = f(phi + 0.5 * ds * b);
  const double d = f(phi + ds * c);
  return phi + ds / 6.0 * (a + 2.0 * b + 2.0 * c + d);
}

}  // namespace

InitialCurve conformalize(const MetricSpec& m, const InitialCurve& c,
                          const ConformalizeOptions& opt) {
  ValidateOptions pre;
  pre.require_conformal = false;
  if (auto bad = validate(m, c, pre); !bad.empty())
    throw ContractViolation("conformalize precondition: " + bad.front().message);
  // Orthogonality is a hypothesis here, not a repair target.
  {
    ValidateOptions full;
    for (const auto& v : validate(m, c, full))
      if (v.kind == ViolationKind::NotOrthogonal)
        throw ContractViolation("conformalize precondition: " + v.message);
  }

  const int n = c.n_nodes();
  const Matrix k0p_samples = fd4_periodic_derivative(c.k0, c.period);
  const PeriodicInterpolant ik0(c.k0, c.period);
  const PeriodicInterpolant ik0p(k0p_samples, c.period);
  const PeriodicInterpolant ik1(c.k1, c.period);
  if (ik0.nyquist_fraction() > opt.aliasing_threshold ||
      ik1.nyquist_fraction() > opt.aliasing_threshold)
    throw RefinementError(
        "curve not resolved at this node count (Nyquist-bin power above "
        "threshold); increase N");

  const SpeedField speed{m, ik0, ik0p, ik1};

  // Pass 1: march phi with a fixed substep until it crosses one period, then
  // bisect inside the final substep for the new period P~ with phi(P~) = P.
  const double ds0 = c.period / (static_cast<double>(opt.ode_refine) * n);
  double s = 0.0, phi = 0.0;
  long guard = 0;
  const long guard_max = 1000L * opt.ode_refine * n;
  while (phi < c.period) {
    const double next = rk4_step(speed, phi, ds0);
    if (next >= c.period) {
      double lo = 0.0, hi = ds0;
      for (int it = 0; it < 80; ++it) {
        const double mid = 0.5 * (lo + hi);
        (rk4_step(speed, phi, mid) >= c.period ? hi : lo) = mid;
      }
      s += 0.5 * (lo + hi);
      phi = c.period;
      break;
    }
    phi = next;
    s += ds0;
    if (++guard > guard_max)
      throw ConvergenceError(
          "reparametrization failed to traverse the curve "
          "(speed collapse)", 0.0);
  }
  const double new_period = s;

  // Pass 2: re-integrate with uniform substeps of the new period, recording
  // every ode_refine-th value as a node of the reparametrized curve.
  const double ds = new_period / (static_cast<double>(opt.ode_refine) * n);
  InitialCurve out;
  out.period = new_period;
  out.k0.resize(n, c.dimension());
  out.k1.resize(n, c.dimension());
  out.tag = CurveTag::Conformalized;
  phi = 0.0;
  for (int j = 0; j < n; ++j) {
    out.k0.row(j) = ik0(phi);
    out.k1.row(j) = ik1(phi);
    for (int sub = 0; sub < opt.ode_refine; ++sub) phi = rk4_step(speed, phi, ds);
  }
  return out;
}

InitialCurve project_orthogonal(const MetricSpec& m, InitialCurve c) {
  check_well_formed(m, c);
  const Matrix k0p = fd4_periodic_derivative(c.k0, c.period);
  for (int j = 0; j < c.n_nodes(); ++j) {
    const Vector at = c.k0.row(j);
    const Vector kp = k0p.row(j);
    const double s = lorentz_inner(m, at, kp, kp);
    if (!(s > 0.0))
      throw GeometryError("cannot project against non-spacelike k0'");
    const double cross = lorentz_inner(m, at, Vector(c.k1.row(j)), kp);
    c.k1.row(j) -= (cross / s) * kp.transpose();
  }
  c.tag = CurveTag::Raw;
  return c;
}

InitialCurve rescale_period(const InitialCurve& c, double new_period) {
  if (!(new_period > 0.0)) throw ContractViolation("period must be positive");
  InitialCurve out = c;
  out.period = new_period;
  out.k1 *= c.period / new_period;
  return out;
}

NullData null_decompose(const MetricSpec& m, const InitialCurve& c) {
  check_well_formed(m, c);
  const Matrix k0p = fd4_periodic_derivative(c.k0, c.period);
  NullData nd;
  nd.u = k0p + c.k1;
  nd.v = -k0p + c.k1;
  const Matrix du = fd4_periodic_derivative(nd.u, c.period);
  const Matrix dv = fd4_periodic_derivative(nd.v, c.period);
  for (int j = 0; j < c.n_nodes(); ++j) {
    const Vector at = c.k0.row(j);
    nd.u_bar = std::max({nd.u_bar,
                         std::sqrt(flip_norm_sq(m, at, Vector(nd.u.row(j)))),
                         std::sqrt(flip_norm_sq(m, at, Vector(du.row(j))))});
    nd.v_bar = std::max({nd.v_bar,
                         std::sqrt(flip_norm_sq(m, at, Vector(nd.v.row(j)))),
                         std::sqrt(flip_norm_sq(m, at, Vector(dv.row(j))))});
  }
  return nd;
}

InitialCurve circle_curve(int dimension, int n_nodes, double radius,
                          double k1_time) {
  if (dimension < 3) throw ContractViolation("circle curve needs dimension >= 3");
  if (!(radius > 0.0)) throw ContractViolation("radius must be positive");
  InitialCurve c;
  c.k0 = Matrix::Zero(n_nodes, dimension);
  c.k1 = Matrix::Zero(n_nodes, dimension);
  for (int j = 0; j < n_nodes; ++j) {
    const double x = c.period * j / n_nodes;
    c.k0(j, 1) = radius * std::sin(x);
    c.k0(j, 2) = radius * std::cos(x);
    c.k1(j, 0) = k1_time;
  }
  return c;
}

InitialCurve ellipse_curve(int dimension, int n_nodes, double semi_a,
                           double semi_b, double k1_time) {
  if (dimension < 3) throw ContractViolation("ellipse curve needs dimension >= 3");
  if (!(semi_a > 0.0) || !(semi_b > 0.0))
    throw ContractViolation("semi-axes must be positive");
  InitialCurve c;
  c.k0 = Matrix::Zero(n_nodes, dimension);
  c.k1 = Matrix::Zero(n_nodes, dimension);
  for (int j = 0; j < n_nodes; ++j) {
    const double x = c.period * j / n_nodes;
    c.k0(j, 1) = semi_a * std::sin(x);
    c.k0(j, 2) = semi_b * std::cos(x);
    c.k1(j, 0) = k1_time;
  }
  return c;
}

InitialCurve curve_from_node_stream(std::istream& in) {
  std::vector<std::vector<double>> rows;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::vector<double> vals;
    double x;
    while (ls >> x) vals.push_back(x);
    if (!ls.eof())
      throw ConfigError("node file line " + std::to_string(lineno) +
                        ": malformed number");
    if (vals.empty()) continue;
    if (!rows.empty() && vals.size() != rows.front().size())
      throw ConfigError("node file line " + std::to_string(lineno) +
                        ": inconsistent column count");
    rows.push_back(std::move(vals));
  }
  const int n = static_cast<int>(rows.size());
  if (n == 0) throw ConfigError("node file has no data lines");
  const int cols = static_cast<int>(rows.front().size());
  if (cols < 3 || (cols - 1) % 2 != 0)
    throw ConfigError("node file needs columns: x, k0 (n values), k1 (n values)");
  const int dim = (cols - 1) / 2;
  if (!is_power_of_two(n))
    throw ConfigError("node count must be a power of two, got " +
                      std::to_string(n));
  if (rows.front()[0] != 0.0)
    throw ConfigError("node file must start at x = 0");

  InitialCurve c;
  c.k0.resize(n, dim);
  c.k1.resize(n, dim);
  const double h = n > 1 ? rows[1][0] : 0.0;
  if (!(h > 0.0)) throw ConfigError("node spacing must be positive");
  c.period = h * n;
  for (int j = 0; j < n; ++j) {
    if (std::abs(rows[j][0] - j * h) > 1e-9 * c.period)
      throw ConfigError("node file x values must be a uniform grid (node " +
                        std::to_string(j) + ")");
    for (int d = 0; d < dim; ++d) {
      c.k0(j, d) = rows[j][1 + d];
      c.k1(j, d) = rows[j][1 + dim + d];
    }
  }
  return c;
}

InitialCurve curve_from_node_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open node file: " + path);
  return curve_from_node_stream(in);
}

}  // namespace minlor
