#include "gwlimits/process_model.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

namespace gwlimits {

std::uint64_t OffspringRule::total() const noexcept {
  std::uint64_t sum = 0;
  for (auto c : counts) sum += c;
  return sum;
}

ProcessSpec::ProcessSpec(std::size_t num_types, std::vector<std::vector<OffspringRule>> rules_by_type)
    : rules_(std::move(rules_by_type)) {
  if (num_types == 0) throw Error(ErrorCode::MalformedSpec, "number of types must be positive");
  if (rules_.size() != num_types) {
    throw Error(ErrorCode::MalformedSpec, "expected rules for " + std::to_string(num_types) +
                                              " types, got " + std::to_string(rules_.size()));
  }
  for (std::size_t k = 0; k < rules_.size(); ++k) {
    for (std::size_t i = 0; i < rules_[k].size(); ++i) {
      const auto& rule = rules_[k][i];
      if (rule.counts.size() != num_types) {
        throw Error(ErrorCode::MalformedSpec,
                    "type " + std::to_string(k + 1) + " rule " + std::to_string(i) + ": offspring vector has " +
                        std::to_string(rule.counts.size()) + " entries, expected " + std::to_string(num_types));
      }
      if (!std::isfinite(rule.prob)) {
        throw Error(ErrorCode::MalformedSpec,
                    "type " + std::to_string(k + 1) + " rule " + std::to_string(i) + ": probability is not finite");
      }
      for (std::size_t j = 0; j < i; ++j) {
        if (rules_[k][j].counts == rule.counts) {
          throw Error(ErrorCode::MalformedSpec, "type " + std::to_string(k + 1) + ": rules " + std::to_string(j) +
                                                    " and " + std::to_string(i) + " share an offspring vector");
        }
      }
    }
  }
}

std::optional<std::size_t> ProcessSpec::find_rule(std::size_t type, const CountVector& counts) const {
  const auto& rs = rules_.at(type);
  for (std::size_t i = 0; i < rs.size(); ++i) {
    if (rs[i].counts == counts) return i;
  }
  return std::nullopt;
}

double dot(const CountVector& n, const Eigen::VectorXd& x) {
  double s = 0.0;
  for (std::size_t i = 0; i < n.size(); ++i) s += static_cast<double>(n[i]) * x[static_cast<Eigen::Index>(i)];
  return s;
}

namespace {

std::complex<double> dot(const CountVector& n, const Eigen::VectorXcd& z) {
  std::complex<double> s = 0.0;
  for (std::size_t i = 0; i < n.size(); ++i) s += static_cast<double>(n[i]) * z[static_cast<Eigen::Index>(i)];
  return s;
}

using BoolMatrix = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;

BoolMatrix bool_product(const BoolMatrix& a, const BoolMatrix& b) {
  const auto n = a.rows();
  BoolMatrix out = BoolMatrix::Constant(n, n, false);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index k = 0; k < n; ++k)
      if (a(i, k))
        for (Eigen::Index j = 0; j < n; ++j) out(i, j) = out(i, j) || b(k, j);
  return out;
}

std::string describe_imprimitivity(const Eigen::MatrixXd& M) {
  const auto n = M.rows();
  BoolMatrix reach = (M.array() > 0.0).matrix();
  // Transitive closure (Floyd-Warshall on booleans).
  for (Eigen::Index k = 0; k < n; ++k)
    for (Eigen::Index i = 0; i < n; ++i)
      if (reach(i, k))
        for (Eigen::Index j = 0; j < n; ++j) reach(i, j) = reach(i, j) || reach(k, j);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      if (!reach(i, j)) {
        std::ostringstream os;
        os << "type " << i + 1 << " never produces descendants of type " << j + 1 << " (mean matrix is reducible)";
        return os.str();
      }
  return "mean matrix is irreducible but periodic (no power is positive)";
}

}  // namespace

Eigen::MatrixXd mean_matrix(const ProcessSpec& spec) {
  const auto V = static_cast<Eigen::Index>(spec.num_types());
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(V, V);
  for (Eigen::Index k = 0; k < V; ++k)
    for (const auto& rule : spec.rules(static_cast<std::size_t>(k)))
      for (Eigen::Index l = 0; l < V; ++l) M(k, l) += rule.prob * rule.counts[static_cast<std::size_t>(l)];
  return M;
}

bool is_primitive(const Eigen::MatrixXd& M) {
  const auto n = M.rows();
  const BoolMatrix base = (M.array() > 0.0).matrix();
  BoolMatrix power = base;
  const Eigen::Index bound = (n - 1) * (n - 1) + 1;
  for (Eigen::Index p = 1; p <= bound; ++p) {
    if (power.all()) return true;
    power = bool_product(power, base);
  }
  return false;
}

EigenData frobenius_eigenpair(const Eigen::MatrixXd& M, double tol, long max_iter) {
  const auto n = M.rows();
  auto iterate = [&](auto&& apply) -> std::pair<Eigen::VectorXd, long> {
    Eigen::VectorXd x = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
    for (long it = 1; it <= max_iter; ++it) {
      Eigen::VectorXd y = apply(x);
      const double s = y.sum();
      if (!(s > 0.0)) throw Error(ErrorCode::NoConvergence, "power iteration collapsed to zero");
      y /= s;
      const double change = (y - x).cwiseAbs().maxCoeff();
      x = std::move(y);
      if (change <= tol) return {x, it};
    }
    throw Error(ErrorCode::NoConvergence, "power iteration did not converge in " + std::to_string(max_iter) +
                                              " iterations");
  };

  auto [v, it_left] = iterate([&](const Eigen::VectorXd& x) -> Eigen::VectorXd { return M.transpose() * x; });
  auto [u, it_right] = iterate([&](const Eigen::VectorXd& x) -> Eigen::VectorXd { return M * x; });

  EigenData out;
  out.M = M;
  out.rho = (M.transpose() * v).sum() / v.sum();
  out.v = v / v.sum();
  out.u = u / out.v.dot(u);
  out.iterations = std::max(it_left, it_right);
  out.R1 = M - out.rho * out.u * out.v.transpose();

  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
  const Eigen::MatrixXd rhs = I - Eigen::VectorXd::Ones(n) * out.v.transpose();
  Eigen::FullPivLU<Eigen::MatrixXd> lu(I - out.R1);
  if (!lu.isInvertible()) {
    throw Error(ErrorCode::SingularResolvent, "I - R1 is singular; the spectral gap assumption fails");
  }
  out.Lambda = lu.solve(rhs);
  return out;
}

ValidationReport validate_spec(const ProcessSpec& spec, const ValidationTolerances& tol) {
  ValidationReport report;
  const std::size_t V = spec.num_types();

  report.probabilities_ok = true;
  for (std::size_t k = 0; k < V; ++k) {
    double sum = 0.0;
    const auto rules = spec.rules(k);
    for (std::size_t i = 0; i < rules.size(); ++i) {
      if (rules[i].prob < 0.0 || rules[i].prob > 1.0) {
        report.probabilities_ok = false;
        std::ostringstream os;
        os << "type " << k + 1 << " rule " << i << ": probability " << rules[i].prob << " outside [0,1]";
        report.issues.push_back({ErrorCode::NotAProbability, os.str()});
      }
      sum += rules[i].prob;
    }
    if (std::abs(sum - 1.0) > tol.prob_tol) {
      report.probabilities_ok = false;
      std::ostringstream os;
      os.precision(17);
      os << "type " << k + 1 << ": probabilities sum to " << sum;
      report.issues.push_back({ErrorCode::NotAProbability, os.str()});
    }
  }

  bool branching = false;
  for (std::size_t k = 0; k < V && !branching; ++k)
    for (const auto& rule : spec.rules(k))
      if (rule.prob > 0.0 && rule.total() >= 2) branching = true;
  report.nondegenerate = branching;

  if (!report.probabilities_ok) return report;

  const Eigen::MatrixXd M = mean_matrix(spec);
  report.primitive = is_primitive(M);
  if (!report.primitive) {
    report.issues.push_back({ErrorCode::NotPrimitive, describe_imprimitivity(M)});
    return report;
  }

  try {
    report.eigen = frobenius_eigenpair(M, tol.eigen_tol, tol.max_iter);
  } catch (const Error& e) {
    report.issues.push_back({e.code(), e.detail()});
    return report;
  }
  report.rho = report.eigen->rho;
  report.critical = std::abs(report.rho - 1.0) <= tol.crit_tol;
  if (!report.critical) {
    std::ostringstream os;
    os.precision(12);
    os << "spectral radius of the mean matrix is " << report.rho << ", expected 1 within " << tol.crit_tol;
    report.issues.push_back({ErrorCode::NotCritical, os.str()});
  }
  if (!report.nondegenerate) {
    report.issues.push_back({ErrorCode::DegenerateH,
                             "every particle has at most one offspring, so H vanishes identically"});
  }
  return report;
}

void ValidationReport::throw_if_invalid() const {
  if (!issues.empty()) throw Error(issues.front().code, issues.front().message);
}

EigenData require_critical(const ProcessSpec& spec, const ValidationTolerances& tol) {
  auto report = validate_spec(spec, tol);
  report.throw_if_invalid();
  return *report.eigen;
}

QMeasure q_measure(const ProcessSpec& spec, const Eigen::VectorXd& v) {
  std::map<CountVector, double> weights;
  for (std::size_t s = 0; s < spec.num_types(); ++s)
    for (const auto& rule : spec.rules(s)) weights[rule.counts] += v[static_cast<Eigen::Index>(s)] * rule.prob;
  QMeasure q;
  q.support.reserve(weights.size());
  q.weights.reserve(weights.size());
  for (auto& [n, w] : weights) {
    q.support.push_back(n);
    q.weights.push_back(w);
  }
  return q;
}

Eigen::VectorXd q_mean(const QMeasure& q) {
  const auto V = q.support.empty() ? 0 : static_cast<Eigen::Index>(q.support.front().size());
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(V);
  for (std::size_t i = 0; i < q.support.size(); ++i)
    for (Eigen::Index s = 0; s < V; ++s) mean[s] += q.weights[i] * q.support[i][static_cast<std::size_t>(s)];
  return mean;
}

std::complex<double> type_variance_form(const ProcessSpec& spec, std::size_t k, const Eigen::VectorXcd& z) {
  std::complex<double> second = 0.0;
  Eigen::VectorXd means = Eigen::VectorXd::Zero(z.size());
  for (const auto& rule : spec.rules(k)) {
    const auto nz = dot(rule.counts, z);
    second += rule.prob * nz * nz;
    for (Eigen::Index s = 0; s < z.size(); ++s) means[s] += rule.prob * rule.counts[static_cast<std::size_t>(s)];
  }
  std::complex<double> diag = 0.0;
  for (Eigen::Index s = 0; s < z.size(); ++s) diag += means[s] * z[s] * z[s];
  return second - diag;
}

std::complex<double> variance_form(const ProcessSpec& spec, const EigenData& eigen, const Eigen::VectorXcd& z) {
  const QMeasure q = q_measure(spec, eigen.v);
  std::complex<double> second = 0.0;
  for (std::size_t i = 0; i < q.support.size(); ++i) {
    const auto nz = dot(q.support[i], z);
    second += q.weights[i] * nz * nz;
  }
  std::complex<double> diag = 0.0;
  for (Eigen::Index s = 0; s < z.size(); ++s) diag += eigen.v[s] * z[s] * z[s];
  return second - diag;
}

double variance_form(const ProcessSpec& spec, const EigenData& eigen, const Eigen::VectorXd& z) {
  return variance_form(spec, eigen, Eigen::VectorXcd(z.cast<std::complex<double>>())).real();
}

Eigen::MatrixXd variance_form_coefficients(const ProcessSpec& spec, const EigenData& eigen) {
  const auto V = static_cast<Eigen::Index>(spec.num_types());
  const QMeasure q = q_measure(spec, eigen.v);
  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(V, V);
  for (std::size_t i = 0; i < q.support.size(); ++i)
    for (Eigen::Index s = 0; s < V; ++s)
      for (Eigen::Index r = 0; r < V; ++r)
        C(s, r) += q.weights[i] * q.support[i][static_cast<std::size_t>(s)] * q.support[i][static_cast<std::size_t>(r)];
  for (Eigen::Index s = 0; s < V; ++s) C(s, s) -= eigen.v[s];
  return C;
}

}  // namespace gwlimits
