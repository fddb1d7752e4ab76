#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gwlimits/errors.hpp"

namespace gwlimits {

/// Offspring count vector n = (n_1, ..., n_V). Types are 0-based in the API.
using CountVector = std::vector<std::uint32_t>;

struct OffspringRule {
  CountVector counts;
  double prob = 0.0;

  std::uint64_t total() const noexcept;
};

/// Finite-support multi-type offspring law. The constructor enforces shape
/// only (dimensions, distinct count vectors, finite probabilities);
/// normalization and criticality are checked by validate_spec().
class ProcessSpec {
 public:
  ProcessSpec(std::size_t num_types, std::vector<std::vector<OffspringRule>> rules_by_type);

  std::size_t num_types() const noexcept { return rules_.size(); }
  std::span<const OffspringRule> rules(std::size_t type) const { return rules_.at(type); }
  std::size_t num_rules(std::size_t type) const { return rules_.at(type).size(); }

  std::optional<std::size_t> find_rule(std::size_t type, const CountVector& counts) const;

 private:
  std::vector<std::vector<OffspringRule>> rules_;
};

struct EigenData {
  Eigen::MatrixXd M;
  double rho = 0.0;
  Eigen::VectorXd v;  // left eigenvector, entries sum to 1
  Eigen::VectorXd u;  // right eigenvector, v.u = 1
  Eigen::MatrixXd R1;  // M - rho u^t v
  Eigen::MatrixXd Lambda;  // (I - R1)^{-1} (I - 1^t v)
  long iterations = 0;
};

/// Q(n) = sum_s v_s p_s(n), support sorted lexicographically.
struct QMeasure {
  std::vector<CountVector> support;
  std::vector<double> weights;
};

struct ValidationTolerances {
  double prob_tol = 1e-12;
  double crit_tol = 1e-9;
  double eigen_tol = 1e-12;
  long max_iter = 1'000'000;
};

struct ValidationIssue {
  ErrorCode code;
  std::string message;
};

struct ValidationReport {
  bool probabilities_ok = false;
  bool primitive = false;
  bool critical = false;
  bool nondegenerate = false;
  double rho = 0.0;
  std::optional<EigenData> eigen;
  std::vector<ValidationIssue> issues;

  bool ok() const noexcept { return issues.empty(); }
  /// Throws the first issue as an Error.
  void throw_if_invalid() const;
};

ValidationReport validate_spec(const ProcessSpec& spec, const ValidationTolerances& tol = {});

/// Validates and returns the eigen data, throwing the first failure.
EigenData require_critical(const ProcessSpec& spec, const ValidationTolerances& tol = {});

Eigen::MatrixXd mean_matrix(const ProcessSpec& spec);

/// Boolean reachability powers up to the Wielandt bound (V-1)^2 + 1.
bool is_primitive(const Eigen::MatrixXd& M);

/// Power iteration on M and M^t from the uniform vector; requires M primitive.
EigenData frobenius_eigenpair(const Eigen::MatrixXd& M, double tol = 1e-12,
                              long max_iter = 1'000'000);

QMeasure q_measure(const ProcessSpec& spec, const Eigen::VectorXd& v);

/// E_Q(X), which equals v for a critical process.
Eigen::VectorXd q_mean(const QMeasure& q);

/// h_k(z) = sum_n p_k(n) (n.z)^2 - sum_s M_ks z_s^2.
std::complex<double> type_variance_form(const ProcessSpec& spec, std::size_t k,
                                        const Eigen::VectorXcd& z);

/// H(z) = E_Q (X.z)^2 - sum_s v_s z_s^2.
std::complex<double> variance_form(const ProcessSpec& spec, const EigenData& eigen,
                                   const Eigen::VectorXcd& z);
double variance_form(const ProcessSpec& spec, const EigenData& eigen, const Eigen::VectorXd& z);

/// Symmetric coefficient matrix C with H(z) = z^t C z. All entries are
/// nonnegative for a valid process.
Eigen::MatrixXd variance_form_coefficients(const ProcessSpec& spec, const EigenData& eigen);

double dot(const CountVector& n, const Eigen::VectorXd& x);

}  // namespace gwlimits
