#pragma once

#include <complex>
#include <cstddef>
#include <iosfwd>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "gwlimits/process_model.hpp"
#include "gwlimits/tree_sampler.hpp"

namespace gwlimits {

/// CF of the positive stable law of exponent 1/2:
/// exp{-(1 - i sign t) sqrt|t|}, with sign(0) = 0.
std::complex<double> stable_cf(double t);

/// CDF of the same law, which is the Levy distribution with unit scale:
/// erfc(1/sqrt(2x)) for x > 0.
double levy_cdf(double x);

/// Scale (c.v) u_k^2 / H(u) of c . (limit of N^{-2} sum f).
double total_progeny_scale(const ProcessSpec& spec, const EigenData& eigen, std::size_t k, const Eigen::VectorXd& c);

/// Limit CF at t of c . (N^{-2} sum f) for trees rooted at type k.
std::complex<double> theorem1_cf(const ProcessSpec& spec, const EigenData& eigen, std::size_t k,
                                 const Eigen::VectorXd& c, double t);

/// L_k = -u_k (1 - i sign C_g) sqrt|C_g| / sqrt H(u): the small-t slope
/// of (phi_k(t) - 1)/sqrt(t) for an additive function. Throws ZeroCg.
std::complex<double> additive_limit_constant(const ProcessSpec& spec, const EigenData& eigen,
                                             const AdditiveFunction& g, std::size_t k);

/// eta^t = Lambda c^t.
Eigen::VectorXd eta_vector(const EigenData& eigen, const Eigen::VectorXd& c);

struct QuadraticCoefficients {
  double A = 0.0;
  double B = 0.0;
};

/// Coefficients for the joint law of (N^{-1} sum (f - v|tree|), N^{-2} sum |tree|):
/// A = Cov_Q(X.u, X.eta) - sum_s v_s u_s (eta_s - c_s) - c.v,
/// B = -Var_Q(X.eta) + sum_s v_s (c_s - eta_s)^2 - (c.v)^2.
QuadraticCoefficients type_frequency_coefficients(const ProcessSpec& spec, const EigenData& eigen,
                                                  const Eigen::VectorXd& c);

/// Coefficients for the joint law of rule frequencies of type j:
/// A = sum_mu c_mu p_j(n_mu)(n_mu.u) - (c.q) u_j,
/// B = (c.q)^2 - sum_mu p_j(n_mu) c_mu^2.
/// B is minus the variance of c over the selected rules.
QuadraticCoefficients rule_frequency_coefficients(const ProcessSpec& spec, const EigenData& eigen, std::size_t j,
                                                  std::span<const CountVector> rules, const Eigen::VectorXd& c);

/// Root with nonpositive real part of
///   z^2 + (2 vj A i / Hu) z + (vj / Hu)(B + 2 K i) = 0.
/// When both roots share the same real part (K = 0 with a nonpositive real
/// discriminant) the K -> 0+ limit of the selected root is returned.
std::complex<double> z_root(double Hu, double A, double B, double K, double vj);

/// Resolvent row sums S_lambda with (I - lambda M) S^t = 1^t.
Eigen::VectorXd s_lambda(const EigenData& eigen, double lambda);

enum class LimitKind { Thm1Stable, Thm2Joint, Thm3Joint, Thm5Additive };

/// Closed-form limit law for one process, root type and statistic.
class LimitTarget {
 public:
  static LimitTarget total_progeny(const ProcessSpec& spec, const EigenData& eigen, std::size_t k,
                                   Eigen::VectorXd c);
  static LimitTarget type_frequencies(const ProcessSpec& spec, const EigenData& eigen, std::size_t k);
  static LimitTarget rule_frequencies(const ProcessSpec& spec, const EigenData& eigen, std::size_t k, std::size_t j,
                                      std::vector<CountVector> rules);
  static LimitTarget additive(const ProcessSpec& spec, const EigenData& eigen, std::size_t k, AdditiveFunction g);

  LimitKind kind() const noexcept { return kind_; }
  std::size_t root_type() const noexcept { return k_; }
  double Hu() const noexcept { return Hu_; }
  double u_k() const noexcept { return eigen_.u[static_cast<Eigen::Index>(k_)]; }
  const EigenData& eigen() const noexcept { return eigen_; }
  const ProcessSpec& process() const noexcept { return *spec_; }

  /// Scalar targets (Thm1Stable, Thm5Additive): the statistic converges to scale * xi.
  double scale() const;
  std::complex<double> cf(double t) const;
  double cdf(double x) const;

  /// Joint targets (Thm2Joint, Thm3Joint).
  std::size_t direction_size() const;
  QuadraticCoefficients coefficients(const Eigen::VectorXd& c) const;
  std::complex<double> z(const Eigen::VectorXd& c, double K) const;
  std::size_t rule_type() const noexcept { return j_; }
  const std::vector<CountVector>& rules() const noexcept { return rules_; }

 private:
  LimitTarget(LimitKind kind, const ProcessSpec& spec, const EigenData& eigen, std::size_t k);

  LimitKind kind_;
  std::shared_ptr<const ProcessSpec> spec_;
  EigenData eigen_;
  std::size_t k_;
  double Hu_;
  double scale_ = 0.0;
  std::size_t j_ = 0;
  std::vector<CountVector> rules_;
};

/// Thm2Joint: exp(z u_k + i eta_k). Thm3Joint: exp(z u_k).
std::complex<double> joint_cf(const LimitTarget& target, const Eigen::VectorXd& c, double K);

/// CSV "t,Re_theory,Im_theory".
void write_cf_grid_csv(std::ostream& out, const LimitTarget& target, std::span<const double> t_grid);

struct DirectionPoint {
  Eigen::VectorXd c;
  double K = 0.0;
};

/// CSV "c_id,K,Re_theory,Im_theory".
void write_joint_grid_csv(std::ostream& out, const LimitTarget& target, std::span<const DirectionPoint> grid);

}  // namespace gwlimits
