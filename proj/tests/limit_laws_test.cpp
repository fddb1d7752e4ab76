#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <sstream>

#include "gwlimits/limit_laws.hpp"
#include "gwlimits/verification.hpp"
#include "support/processes.hpp"

using namespace gwlimits;
using namespace std::complex_literals;
using gwtest::e1;
using gwtest::e2;
using gwtest::e3;
using gwtest::e4;

namespace {

// Gil-Pelaez inversion of stable_cf with t = s^2, Simpson rule on [0, 60].
double inverted_cdf(double x) {
  auto integrand = [x](double s) {
    if (s == 0.0) return 2.0;
    const double t = s * s;
    return 2.0 * std::imag(std::exp(-1i * t * x) * stable_cf(t)) / s;
  };
  const int n = 600000;
  const double h = 60.0 / n;
  double sum = integrand(0.0) + integrand(60.0);
  for (int i = 1; i < n; ++i) sum += (i % 2 ? 4.0 : 2.0) * integrand(i * h);
  return 0.5 - sum * h / 3.0 / std::numbers::pi;
}

// (A, B) for type frequencies by direct summation over the support of Q.
QuadraticCoefficients brute_force_ab(const ProcessSpec& spec, const EigenData& e, const Eigen::VectorXd& c) {
  const Eigen::VectorXd eta = e.Lambda * c;
  const auto q = q_measure(spec, e.v);
  double mu = 0, me = 0, mue = 0, mee = 0;
  for (std::size_t i = 0; i < q.support.size(); ++i) {
    double xu = 0, xe = 0;
    for (std::size_t s = 0; s < spec.num_types(); ++s) {
      xu += q.support[i][s] * e.u[static_cast<Eigen::Index>(s)];
      xe += q.support[i][s] * eta[static_cast<Eigen::Index>(s)];
    }
    mu += q.weights[i] * xu;
    me += q.weights[i] * xe;
    mue += q.weights[i] * xu * xe;
    mee += q.weights[i] * xe * xe;
  }
  double a2 = 0, b2 = 0;
  for (Eigen::Index s = 0; s < c.size(); ++s) {
    a2 += e.v[s] * e.u[s] * (eta[s] - c[s]);
    b2 += e.v[s] * (c[s] - eta[s]) * (c[s] - eta[s]);
  }
  const double cv = c.dot(e.v);
  return {mue - mu * me - a2 - cv, -(mee - me * me) + b2 - cv * cv};
}

}  // namespace

TEST_SUITE("limit_laws") {

TEST_CASE("stable characteristic function") {
  CHECK(stable_cf(0.0) == std::complex<double>(1.0, 0.0));
  const auto z = stable_cf(1.0);
  CHECK(z.real() == doctest::Approx(0.19876611034641298).epsilon(1e-14));
  CHECK(z.imag() == doctest::Approx(0.3095598756531122).epsilon(1e-14));
  CHECK(stable_cf(-1.0) == std::conj(z));
  for (double t : {-7.0, -0.3, 0.01, 2.0, 50.0}) CHECK(std::abs(stable_cf(t)) <= 1.0);
}

TEST_CASE("Levy CDF agrees with numerical inversion of the stable CF") {
  for (double x : {0.05, 0.3, 1.0, 2.0, 5.0, 30.0}) {
    CAPTURE(x);
    CHECK(std::abs(inverted_cdf(x) - levy_cdf(x)) < 1e-6);
  }
  CHECK(levy_cdf(2.0) == doctest::Approx(std::erfc(0.5)));
  CHECK(levy_cdf(2.0) == doctest::Approx(0.4795).epsilon(1e-4));
  CHECK(levy_cdf(0.0) == 0.0);
  CHECK(levy_cdf(-3.0) == 0.0);
  CHECK(levy_cdf(1e12) == doctest::Approx(1.0).epsilon(1e-5));
}

TEST_CASE("total progeny CF") {
  const auto e = require_critical(e1());
  const Eigen::VectorXd one = Eigen::VectorXd::Ones(1);
  CHECK(std::abs(theorem1_cf(e1(), e, 0, one, 1.0) - stable_cf(1.0)) < 1e-14);

  const auto e4d = require_critical(e4());
  const Eigen::VectorXd c = Eigen::VectorXd::Ones(2);
  CHECK(std::abs(theorem1_cf(e4(), e4d, 0, c, 1.0) - stable_cf(0.6)) < 1e-12);

  const auto e2d = require_critical(e2());
  Eigen::VectorXd perp(2);
  perp << 1.0, -1.0;
  for (double t : {-5.0, 0.5, 3.0}) CHECK(std::abs(theorem1_cf(e2(), e2d, 0, perp, t) - 1.0) < 1e-14);
}

TEST_CASE("additive limit constant") {
  const auto e = require_critical(e1());
  const auto g = AdditiveFunction::tree_size(e1());
  CHECK(std::abs(additive_limit_constant(e1(), e, g, 0) - (-(1.0 - 1i))) < 1e-14);
  AdditiveFunction neg = g;
  for (auto& row : neg.values)
    for (auto& x : row) x = -x;
  CHECK(std::abs(additive_limit_constant(e1(), e, neg, 0) - (-(1.0 + 1i))) < 1e-14);

  const auto e4d = require_critical(e4());
  const auto L = additive_limit_constant(e4(), e4d, AdditiveFunction::tree_size(e4()), 1);
  CHECK(std::abs(L - (-1.5 * (1.0 - 1i) / std::sqrt(15.0 / 16.0))) < 1e-12);

  AdditiveFunction zero;
  zero.values = {{1.0, -1.0}};
  CHECK_THROWS_AS(additive_limit_constant(e1(), e, zero, 0), Error);

  // Constant per-type tables reduce to the total progeny law.
  for (const auto& spec : {e2(), e3(), e4()}) {
    const auto ed = require_critical(spec);
    const std::vector<double> cs{0.7, -0.2};
    const Eigen::VectorXd c = Eigen::Map<const Eigen::VectorXd>(cs.data(), 2);
    const auto Lc = additive_limit_constant(spec, ed, AdditiveFunction::per_type_constant(spec, cs), 0);
    CHECK(std::abs(std::exp(Lc) - theorem1_cf(spec, ed, 0, c, 1.0)) < 1e-12);
  }
}

TEST_CASE("eta") {
  const auto e = require_critical(e2());
  Eigen::VectorXd c(2);
  c << 1.0, 0.0;
  const auto eta = eta_vector(e, c);
  CHECK(std::abs(eta[0] - 0.5) < 1e-12);
  CHECK(std::abs(eta[1] + 0.5) < 1e-12);
  CHECK(eta_vector(e, Eigen::VectorXd::Constant(2, 3.0)).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(eta_vector(require_critical(e1()), Eigen::VectorXd::Ones(1)).norm() < 1e-14);
}

TEST_CASE("type frequency coefficients") {
  const auto e1d = require_critical(e1());
  for (double c : {-2.0, 0.5, 3.0}) {
    const auto ab = type_frequency_coefficients(e1(), e1d, Eigen::VectorXd::Constant(1, c));
    CHECK(std::abs(ab.A) < 1e-14);
    CHECK(std::abs(ab.B) < 1e-14);
  }
  for (const auto& spec : {e2(), e3(), e4()}) {
    const auto e = require_critical(spec);
    const auto zero = type_frequency_coefficients(spec, e, Eigen::VectorXd::Zero(2));
    CHECK(zero.A == 0.0);
    CHECK(zero.B == 0.0);
    for (const auto& c : gwtest::random_unit_vectors(2, 20, 5)) {
      const auto ab = type_frequency_coefficients(spec, e, c);
      const auto bf = brute_force_ab(spec, e, c);
      CHECK(std::abs(ab.A - bf.A) < 1e-12);
      CHECK(std::abs(ab.B - bf.B) < 1e-12);
    }
  }
  // Frozen regression value from the brute-force oracle.
  const auto e2d = require_critical(e2());
  Eigen::VectorXd c(2);
  c << 1.0, -1.0;
  const auto bf = brute_force_ab(e2(), e2d, c);
  CHECK(std::abs(bf.A) < 1e-14);
  CHECK(std::abs(bf.B) < 1e-14);
  const auto ab = type_frequency_coefficients(e2(), e2d, c);
  CHECK(std::abs(ab.A) < 1e-14);
  CHECK(std::abs(ab.B) < 1e-14);
}

TEST_CASE("A^2 <= -H(u) B on random directions") {
  for (const auto& spec : {e1(), e2(), e3(), e4()}) {
    const auto e = require_critical(spec);
    const double Hu = variance_form(spec, e, e.u);
    for (const auto& c : gwtest::random_unit_vectors(spec.num_types(), 1000, 77)) {
      if (std::abs(c.dot(e.v)) < 1e-6) continue;
      const auto ab = type_frequency_coefficients(spec, e, c);
      CHECK(ab.A * ab.A <= -Hu * ab.B + 1e-9);
    }
  }
}

TEST_CASE("rule frequency coefficients") {
  const auto e = require_critical(e1());
  const std::vector<CountVector> rules{{0}, {2}};
  Eigen::VectorXd c(2);
  c << 1.0, 1.0;
  auto ab = rule_frequency_coefficients(e1(), e, 0, rules, c);
  CHECK(std::abs(ab.A) < 1e-14);
  CHECK(std::abs(ab.B) < 1e-14);
  ab = rule_frequency_coefficients(e1(), e, 0, rules, Eigen::VectorXd::Zero(2));
  CHECK(ab.A == 0.0);
  CHECK(ab.B == 0.0);

  // For E1, f(1 -> 0) = (|tree| + 1) / 2 exactly, so the first coordinate of
  // N^{-1} sum (F - q f) is identically 1/2 and the limit CF at (c, K) =
  // ((1, 0), 0) must be e^{i/2}. This pins B = (c.q)^2 - sum p c^2 = -1/4.
  c << 1.0, 0.0;
  ab = rule_frequency_coefficients(e1(), e, 0, rules, c);
  CHECK(ab.A == doctest::Approx(-0.5));
  CHECK(ab.B == doctest::Approx(-0.25));
  const auto target = LimitTarget::rule_frequencies(e1(), e, 0, 0, rules);
  CHECK(std::abs(joint_cf(target, c, 0.0) - std::exp(0.5i)) < 1e-12);
  for (double s : {0.3, -1.7, 4.0}) CHECK(std::abs(joint_cf(target, s * c, 0.0) - std::exp(0.5i * s)) < 1e-12);

  CHECK_THROWS_AS(rule_frequency_coefficients(e1(), e, 0, std::vector<CountVector>{{1}}, Eigen::VectorXd::Ones(1)),
                  Error);
  CHECK_THROWS_AS(rule_frequency_coefficients(e1(), e, 0, rules, Eigen::VectorXd::Ones(3)), Error);
}

TEST_CASE("quadratic root selection") {
  CHECK(std::abs(z_root(1.0, 0.0, 0.0, 0.0, 1.0)) == 0.0);
  const auto z = z_root(1.0, 0.0, 0.0, 0.5, 1.0);
  CHECK(std::abs(z - (-(1.0 - 1i) / std::sqrt(2.0))) < 1e-14);
  CHECK(std::abs(std::exp(z) - stable_cf(0.5)) < 1e-14);

  for (const auto& spec : {e2(), e3(), e4()}) {
    const auto e = require_critical(spec);
    const double Hu = variance_form(spec, e, e.u);
    for (const auto& c : gwtest::random_unit_vectors(2, 200, 9)) {
      const auto ab = type_frequency_coefficients(spec, e, c);
      for (double K : {-1.0, -0.3, 0.0, 0.3, 1.0}) {
        const auto r = z_root(Hu, ab.A, ab.B, K, 1.0);
        const auto residual = r * r + (2.0 * ab.A * 1i / Hu) * r + (ab.B + 2.0 * K * 1i) / Hu;
        CHECK(std::abs(residual) < 1e-10);
        CHECK(r.real() <= 1e-15);
        if (K != 0.0) CHECK(r.real() < 0.0);
      }
      // K = 0: both roots sit on the same vertical line, the chosen one is the K -> 0+ limit.
      const auto at0 = z_root(Hu, ab.A, ab.B, 0.0, 1.0);
      const auto near0 = z_root(Hu, ab.A, ab.B, 1e-10, 1.0);
      CHECK(std::abs(at0 - near0) < 1e-4);
    }
  }
}

TEST_CASE("joint CF properties") {
  for (const auto& spec : {e1(), e2(), e3(), e4()}) {
    const auto e = require_critical(spec);
    const auto V = spec.num_types();
    const auto t2 = LimitTarget::type_frequencies(spec, e, 0);
    CHECK(std::abs(joint_cf(t2, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(V)), 0.0) - 1.0) < 1e-14);
    for (const auto& c : gwtest::random_unit_vectors(V, 30, 3)) {
      for (double K : {-2.0, -0.3, 0.0, 0.7}) {
        const auto phi = joint_cf(t2, c, K);
        CHECK(std::abs(phi) <= 1.0 + 1e-12);
        CHECK(std::abs(joint_cf(t2, -c, -K) - std::conj(phi)) < 1e-10);
      }
    }
  }
  // E1: Z vanishes, and the K-marginal is the total progeny law.
  const auto e = require_critical(e1());
  const auto t = LimitTarget::type_frequencies(e1(), e, 0);
  CHECK(std::abs(joint_cf(t, Eigen::VectorXd::Ones(1), 0.0) - 1.0) < 1e-14);
  for (double K : {-1.0, 0.3, 2.0})
    CHECK(std::abs(joint_cf(t, Eigen::VectorXd::Zero(1), K) - theorem1_cf(e1(), e, 0, Eigen::VectorXd::Ones(1), K)) <
          1e-12);
}

TEST_CASE("resolvent") {
  const auto e2d = require_critical(e2());
  const auto S = s_lambda(e2d, 0.9);
  CHECK(std::abs(S[0] - 10.0) < 1e-10);
  CHECK(std::abs(S[1] - 10.0) < 1e-10);
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto spec = gwtest::random_critical_spec(seed);
    const auto e = require_critical(spec);
    for (double lambda : {0.5, 0.9, 0.99}) {
      const auto s = s_lambda(e, lambda);
      const auto V = static_cast<Eigen::Index>(spec.num_types());
      const Eigen::VectorXd res =
          (Eigen::MatrixXd::Identity(V, V) - lambda * e.M) * s - Eigen::VectorXd::Ones(V);
      CHECK(res.cwiseAbs().maxCoeff() < 1e-10);
      CHECK(std::abs(e.v.dot(s) - 1.0 / (1.0 - lambda)) < 1e-10 / (1.0 - lambda));
    }
  }
  const auto e4d = require_critical(e4());
  double prev = 1e300;
  for (double lambda : {0.9, 0.99, 0.999}) {
    const double err = ((1.0 - lambda) * s_lambda(e4d, lambda) - e4d.u).cwiseAbs().maxCoeff();
    CHECK(err < prev);
    prev = err;
  }
  CHECK_THROWS_AS(s_lambda(e4d, 1.0), Error);
}

TEST_CASE("grid export") {
  const auto e = require_critical(e1());
  const auto target = LimitTarget::total_progeny(e1(), e, 0, Eigen::VectorXd::Ones(1));
  std::ostringstream out;
  const std::vector<double> grid{-1.0, 1.0};
  write_cf_grid_csv(out, target, grid);
  CHECK(out.str().rfind("t,Re_theory,Im_theory\n", 0) == 0);
  CHECK(out.str().find("1,0.19876611034641298,0.3095598756531122") != std::string::npos);

  std::ostringstream joint;
  const auto t2 = LimitTarget::type_frequencies(e4(), require_critical(e4()), 0);
  const auto points = default_direction_grid(2, 3);
  write_joint_grid_csv(joint, t2, points);
  CHECK(joint.str().rfind("c_id,K,Re_theory,Im_theory\n", 0) == 0);
}

}  // TEST_SUITE
