#include "gwlimits/output.hpp"

#include <charconv>
#include <cstdio>
#include <ostream>

#include <json.hpp>

namespace gwlimits {

using nlohmann::ordered_json;

std::string format_double(double x) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, ptr);
}

std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string header_comment(std::string_view config_hash, std::uint64_t master_seed) {
  return "# config_hash=" + std::string(config_hash) + " master_seed=" + std::to_string(master_seed) + "\n";
}

namespace {

ordered_json to_json(const Eigen::VectorXd& x) {
  auto a = ordered_json::array();
  for (double d : x) a.push_back(d);
  return a;
}

ordered_json to_json(std::complex<double> z) { return ordered_json::array({z.real(), z.imag()}); }

}  // namespace

std::string report_to_json(const VerificationReport& r, std::string_view config_hash) {
  ordered_json j;
  j["config_hash"] = config_hash;
  j["master_seed"] = r.master_seed;
  j["experiment_id"] = r.experiment_id;
  j["theorem"] = r.theorem;
  j["grid"] = r.grid_description;
  j["N"] = r.N;
  j["replicates"] = r.replicates;
  j["trees"] = r.trees;
  j["censored"] = r.censored;
  j["censored_fraction"] = r.censored_fraction;
  if (r.theorem == "thm4") {
    j["final_median_error"] = r.sup_cf_distance;
    j["tolerance"] = r.cf_tolerance;
    j["exact_identity"] = r.exact_identity;
    auto rows = ordered_json::array();
    for (const auto& c : r.convergence) {
      ordered_json row;
      row["N"] = c.N;
      row["lambda"] = c.lambda;
      row["median_abs_error"] = c.median_abs_error;
      row["expected_estimate"] = c.expected_estimate;
      row["identity_error"] = c.identity_error;
      row["chain_estimates"] = c.chain_estimates;
      rows.push_back(std::move(row));
    }
    j["convergence"] = std::move(rows);
  } else {
    j["sup_cf_distance"] = r.sup_cf_distance;
    j["avg_cf_distance"] = r.avg_cf_distance;
    j["cf_tolerance"] = r.cf_tolerance;
    if (r.ks_statistic) j["ks_statistic"] = *r.ks_statistic;
    if (r.ks_tolerance) j["ks_tolerance"] = *r.ks_tolerance;
    auto pts = ordered_json::array();
    for (const auto& p : r.points) {
      ordered_json row;
      if (p.direction_id) {
        row["c_id"] = *p.direction_id;
        row["K"] = p.t_or_K;
      } else {
        row["t"] = p.t_or_K;
      }
      row["theory"] = to_json(p.theory);
      row["empirical"] = to_json(p.empirical);
      row["abs_diff"] = p.distance;
      pts.push_back(std::move(row));
    }
    j["points"] = std::move(pts);
  }
  j["warnings"] = r.warnings;
  j["passed"] = r.passed;
  return j.dump(2) + "\n";
}

void write_report_csv(std::ostream& out, const VerificationReport& r) {
  if (r.theorem == "thm4") {
    out << "N,lambda,median_abs_error,expected_estimate,identity_error\n";
    for (const auto& c : r.convergence) {
      out << c.N << ',' << format_double(c.lambda) << ',' << format_double(c.median_abs_error) << ','
          << format_double(c.expected_estimate) << ',' << format_double(c.identity_error) << '\n';
    }
    return;
  }
  const bool joint = !r.points.empty() && r.points.front().direction_id.has_value();
  out << (joint ? "c_id,K" : "t") << ",Re_theory,Im_theory,Re_empirical,Im_empirical,abs_diff\n";
  for (const auto& p : r.points) {
    if (joint) out << *p.direction_id << ',';
    out << format_double(p.t_or_K) << ',' << format_double(p.theory.real()) << ',' << format_double(p.theory.imag())
        << ',' << format_double(p.empirical.real()) << ',' << format_double(p.empirical.imag()) << ','
        << format_double(p.distance) << '\n';
  }
}

std::string estimate_to_json(const EstimateReport& report, const ProcessSpec* spec, const EigenData* eigen,
                             std::string_view config_hash, std::uint64_t master_seed) {
  ordered_json j;
  j["config_hash"] = config_hash;
  j["master_seed"] = master_seed;
  j["N"] = report.N;
  j["censored"] = report.censored_count;
  j["total_size"] = report.total_size;
  j["type_totals"] = report.type_totals;
  j["v_hat"] = to_json(report.v_hat);
  if (report.u_hat) {
    ordered_json u;
    u["type"] = report.u_type + 1;
    u["estimate"] = report.u_hat->u_hat;
    u["lambda"] = report.u_hat->lambda;
    u["used"] = report.u_hat->used;
    u["censored"] = report.u_hat->censored;
    j["u_hat"] = std::move(u);
  }
  auto rows = ordered_json::array();
  for (const auto& row : report.rows(spec, eigen)) {
    ordered_json r;
    r["name"] = row.name;
    r["estimate"] = row.estimate;
    if (row.truth) {
      r["truth"] = *row.truth;
      r["abs_error"] = std::abs(row.estimate - *row.truth);
    }
    rows.push_back(std::move(r));
  }
  j["rows"] = std::move(rows);
  return j.dump(2) + "\n";
}

void write_estimate_csv(std::ostream& out, const EstimateReport& report, const ProcessSpec* spec,
                        const EigenData* eigen) {
  out << "name,estimate,truth,abs_error\n";
  for (const auto& row : report.rows(spec, eigen)) {
    out << row.name << ',' << format_double(row.estimate) << ',';
    if (row.truth) out << format_double(*row.truth) << ',' << format_double(std::abs(row.estimate - *row.truth));
    else out << ',';
    out << '\n';
  }
}

void print_eigen_summary(std::ostream& out, const ProcessSpec& spec, const EigenData& eigen) {
  auto vec = [&](const Eigen::VectorXd& x) {
    out << '(';
    for (Eigen::Index i = 0; i < x.size(); ++i) out << (i ? ", " : "") << format_double(x[i]);
    out << ')';
  };
  out << "V = " << spec.num_types() << '\n';
  out << "rho = " << format_double(eigen.rho) << '\n';
  out << "v = ";
  vec(eigen.v);
  out << "\nu = ";
  vec(eigen.u);
  out << "\nH(u) = " << format_double(variance_form(spec, eigen, eigen.u)) << '\n';
  out << "Lambda =\n";
  for (Eigen::Index r = 0; r < eigen.Lambda.rows(); ++r) {
    out << "  ";
    vec(eigen.Lambda.row(r).transpose());
    out << '\n';
  }
}

}  // namespace gwlimits
