#include "gwlimits/limit_laws.hpp"

#include <cmath>
#include <limits>
#include <ostream>
#include <string>

#include "gwlimits/output.hpp"

namespace gwlimits {

namespace {

using namespace std::complex_literals;

double sign(double x) { return (x > 0.0) - (x < 0.0); }

// Zero out a sum that is pure rounding relative to its terms.
double snap(double sum, double magnitude) {
  return std::abs(sum) <= 64.0 * std::numeric_limits<double>::epsilon() * magnitude ? 0.0 : sum;
}

}  // namespace

std::complex<double> stable_cf(double t) {
  const double r = std::sqrt(std::abs(t));
  return std::exp(-(1.0 - 1i * sign(t)) * r);
}

double levy_cdf(double x) {
  if (!(x > 0.0)) return 0.0;
  if (std::isinf(x)) return 1.0;
  return std::erfc(1.0 / std::sqrt(2.0 * x));
}

double total_progeny_scale(const ProcessSpec& spec, const EigenData& eigen, std::size_t k, const Eigen::VectorXd& c) {
  const double uk = eigen.u[static_cast<Eigen::Index>(k)];
  return c.dot(eigen.v) * uk * uk / variance_form(spec, eigen, eigen.u);
}

std::complex<double> theorem1_cf(const ProcessSpec& spec, const EigenData& eigen, std::size_t k,
                                 const Eigen::VectorXd& c, double t) {
  return stable_cf(t * total_progeny_scale(spec, eigen, k, c));
}

std::complex<double> additive_limit_constant(const ProcessSpec& spec, const EigenData& eigen,
                                             const AdditiveFunction& g, std::size_t k) {
  const double cg = g.mean_under_q(spec, eigen.v);
  if (std::abs(cg) <= 1e-14) throw Error(ErrorCode::ZeroCg, "C_g vanishes for this additive function");
  const double uk = eigen.u[static_cast<Eigen::Index>(k)];
  const double hu = variance_form(spec, eigen, eigen.u);
  return -uk * (1.0 - 1i * sign(cg)) * std::sqrt(std::abs(cg)) / std::sqrt(hu);
}

Eigen::VectorXd eta_vector(const EigenData& eigen, const Eigen::VectorXd& c) { return eigen.Lambda * c; }

QuadraticCoefficients type_frequency_coefficients(const ProcessSpec& spec, const EigenData& eigen,
                                                  const Eigen::VectorXd& c) {
  const Eigen::VectorXd eta = eta_vector(eigen, c);
  const QMeasure q = q_measure(spec, eigen.v);
  double mean_u = 0.0, mean_eta = 0.0;
  for (std::size_t i = 0; i < q.support.size(); ++i) {
    mean_u += q.weights[i] * dot(q.support[i], eigen.u);
    mean_eta += q.weights[i] * dot(q.support[i], eta);
  }
  double cov = 0.0, var = 0.0;
  for (std::size_t i = 0; i < q.support.size(); ++i) {
    const double xu = dot(q.support[i], eigen.u) - mean_u;
    const double xe = dot(q.support[i], eta) - mean_eta;
    cov += q.weights[i] * xu * xe;
    var += q.weights[i] * xe * xe;
  }
  const double cv = c.dot(eigen.v);
  const double a2 = (eigen.v.array() * eigen.u.array() * (eta - c).array()).sum();
  const double b2 = (eigen.v.array() * (c - eta).array().square()).sum();
  QuadraticCoefficients out;
  out.A = snap(cov - a2 - cv, std::abs(cov) + std::abs(a2) + std::abs(cv));
  out.B = snap(-var + b2 - cv * cv, var + b2 + cv * cv);
  return out;
}

QuadraticCoefficients rule_frequency_coefficients(const ProcessSpec& spec, const EigenData& eigen, std::size_t j,
                                                  std::span<const CountVector> rules, const Eigen::VectorXd& c) {
  if (static_cast<std::size_t>(c.size()) != rules.size()) {
    throw Error(ErrorCode::InvalidArgument, "direction has " + std::to_string(c.size()) + " entries for " +
                                                std::to_string(rules.size()) + " rules");
  }
  double a_first = 0.0, cq = 0.0, second = 0.0;
  for (std::size_t mu = 0; mu < rules.size(); ++mu) {
    for (std::size_t nu = 0; nu < mu; ++nu)
      if (rules[nu] == rules[mu]) throw Error(ErrorCode::InvalidArgument, "rules must be distinct");
    const auto idx = spec.find_rule(j, rules[mu]);
    if (!idx) {
      throw Error(ErrorCode::UnknownRule, "rule " + std::to_string(mu) + " is not a rule of type " +
                                              std::to_string(j + 1));
    }
    const double p = spec.rules(j)[*idx].prob;
    const double cm = c[static_cast<Eigen::Index>(mu)];
    a_first += cm * p * dot(rules[mu], eigen.u);
    cq += cm * p;
    second += p * cm * cm;
  }
  QuadraticCoefficients out;
  const double uj = eigen.u[static_cast<Eigen::Index>(j)];
  out.A = snap(a_first - cq * uj, std::abs(a_first) + std::abs(cq * uj));
  out.B = snap(cq * cq - second, cq * cq + second);
  return out;
}

std::complex<double> z_root(double Hu, double A, double B, double K, double vj) {
  const std::complex<double> half_b = 1i * (vj * A / Hu);
  const std::complex<double> c0 = (vj / Hu) * (B + 2.0i * K);
  const std::complex<double> disc = half_b * half_b - c0;
  if (disc.imag() == 0.0 && disc.real() <= 0.0) {
    // Both roots on the same vertical line; take the K -> 0+ branch.
    return -half_b + 1i * std::sqrt(-disc.real());
  }
  const std::complex<double> w = std::sqrt(disc);
  const std::complex<double> r1 = -half_b + w;
  const std::complex<double> r2 = -half_b - w;
  return r2.real() <= r1.real() ? r2 : r1;
}

Eigen::VectorXd s_lambda(const EigenData& eigen, double lambda) {
  if (!(lambda > 0.0 && lambda < 1.0)) throw Error(ErrorCode::InvalidArgument, "lambda must lie in (0,1)");
  const auto n = eigen.M.rows();
  Eigen::FullPivLU<Eigen::MatrixXd> lu(Eigen::MatrixXd::Identity(n, n) - lambda * eigen.M);
  if (!lu.isInvertible()) throw Error(ErrorCode::SingularSystem, "I - lambda M is singular");
  return lu.solve(Eigen::VectorXd::Ones(n));
}

LimitTarget::LimitTarget(LimitKind kind, const ProcessSpec& spec, const EigenData& eigen, std::size_t k)
    : kind_(kind), spec_(std::make_shared<const ProcessSpec>(spec)), eigen_(eigen), k_(k),
      Hu_(variance_form(spec, eigen, eigen.u)) {
  if (k >= spec.num_types()) throw Error(ErrorCode::InvalidArgument, "root type out of range");
}

LimitTarget LimitTarget::total_progeny(const ProcessSpec& spec, const EigenData& eigen, std::size_t k,
                                       Eigen::VectorXd c) {
  LimitTarget t(LimitKind::Thm1Stable, spec, eigen, k);
  if (static_cast<std::size_t>(c.size()) != spec.num_types()) {
    throw Error(ErrorCode::InvalidArgument, "direction must have one entry per type");
  }
  t.scale_ = total_progeny_scale(spec, eigen, k, c);
  return t;
}

LimitTarget LimitTarget::type_frequencies(const ProcessSpec& spec, const EigenData& eigen, std::size_t k) {
  return LimitTarget(LimitKind::Thm2Joint, spec, eigen, k);
}

LimitTarget LimitTarget::rule_frequencies(const ProcessSpec& spec, const EigenData& eigen, std::size_t k,
                                          std::size_t j, std::vector<CountVector> rules) {
  LimitTarget t(LimitKind::Thm3Joint, spec, eigen, k);
  if (j >= spec.num_types()) throw Error(ErrorCode::InvalidArgument, "rule type out of range");
  if (rules.empty()) throw Error(ErrorCode::InvalidArgument, "at least one rule is required");
  t.j_ = j;
  t.rules_ = std::move(rules);
  // Validates the rule list.
  rule_frequency_coefficients(spec, eigen, j, t.rules_, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(t.rules_.size())));
  return t;
}

LimitTarget LimitTarget::additive(const ProcessSpec& spec, const EigenData& eigen, std::size_t k,
                                  AdditiveFunction g) {
  LimitTarget t(LimitKind::Thm5Additive, spec, eigen, k);
  const double cg = g.mean_under_q(spec, eigen.v);
  if (std::abs(cg) <= 1e-14) throw Error(ErrorCode::ZeroCg, "C_g vanishes for this additive function");
  const double uk = t.u_k();
  t.scale_ = uk * uk * cg / t.Hu_;
  return t;
}

double LimitTarget::scale() const {
  if (kind_ != LimitKind::Thm1Stable && kind_ != LimitKind::Thm5Additive) {
    throw Error(ErrorCode::InvalidArgument, "scale is defined for scalar targets only");
  }
  return scale_;
}

std::complex<double> LimitTarget::cf(double t) const { return stable_cf(t * scale()); }

double LimitTarget::cdf(double x) const {
  const double s = scale();
  if (s > 0.0) return levy_cdf(x / s);
  if (s < 0.0) return 1.0 - levy_cdf(x / s);
  return x >= 0.0 ? 1.0 : 0.0;
}

std::size_t LimitTarget::direction_size() const {
  switch (kind_) {
    case LimitKind::Thm2Joint: return spec_->num_types();
    case LimitKind::Thm3Joint: return rules_.size();
    default: throw Error(ErrorCode::InvalidArgument, "direction is defined for joint targets only");
  }
}

QuadraticCoefficients LimitTarget::coefficients(const Eigen::VectorXd& c) const {
  if (static_cast<std::size_t>(c.size()) != direction_size()) {
    throw Error(ErrorCode::InvalidArgument, "direction has the wrong length");
  }
  if (kind_ == LimitKind::Thm2Joint) return type_frequency_coefficients(*spec_, eigen_, c);
  return rule_frequency_coefficients(*spec_, eigen_, j_, rules_, c);
}

std::complex<double> LimitTarget::z(const Eigen::VectorXd& c, double K) const {
  const auto ab = coefficients(c);
  const double vj = kind_ == LimitKind::Thm3Joint ? eigen_.v[static_cast<Eigen::Index>(j_)] : 1.0;
  return z_root(Hu_, ab.A, ab.B, K, vj);
}

std::complex<double> joint_cf(const LimitTarget& target, const Eigen::VectorXd& c, double K) {
  const std::complex<double> z = target.z(c, K);
  if (target.kind() == LimitKind::Thm2Joint) {
    const double eta_k = eta_vector(target.eigen(), c)[static_cast<Eigen::Index>(target.root_type())];
    return std::exp(z * target.u_k() + 1i * eta_k);
  }
  return std::exp(z * target.u_k());
}

void write_cf_grid_csv(std::ostream& out, const LimitTarget& target, std::span<const double> t_grid) {
  out << "t,Re_theory,Im_theory\n";
  for (double t : t_grid) {
    const auto phi = target.cf(t);
    out << format_double(t) << ',' << format_double(phi.real()) << ',' << format_double(phi.imag()) << '\n';
  }
}

void write_joint_grid_csv(std::ostream& out, const LimitTarget& target, std::span<const DirectionPoint> grid) {
  out << "c_id,K,Re_theory,Im_theory\n";
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto phi = joint_cf(target, grid[i].c, grid[i].K);
    out << i << ',' << format_double(grid[i].K) << ',' << format_double(phi.real()) << ',' << format_double(phi.imag()) << '\n';
  }
}

}  // namespace gwlimits
