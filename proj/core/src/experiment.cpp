#include "gwlimits/experiment.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "gwlimits/estimators.hpp"
#include "gwlimits/output.hpp"
#include "gwlimits/spec_io.hpp"

namespace gwlimits {

using nlohmann::json;
namespace fs = std::filesystem;

int exit_code_for(ErrorCode code) noexcept {
  if (is_validation_error(code) || code == ErrorCode::UnknownRule) return kExitValidation;
  if (code == ErrorCode::ParseError || code == ErrorCode::IoError) return kExitIo;
  return kExitRuntime;
}

std::string ExperimentConfig::hash() const { return fnv1a_hex(canonical_json); }

namespace {

[[noreturn]] void bad(const std::string& where, const std::string& what) {
  throw Error(ErrorCode::ParseError, "config " + where + ": " + what);
}

const json* find(const json& obj, const char* key) {
  auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

std::uint64_t get_count(const json& obj, const char* key, std::uint64_t fallback, const std::string& where) {
  const json* v = find(obj, key);
  if (!v) return fallback;
  if (v->is_number_unsigned()) return v->get<std::uint64_t>();
  if (v->is_number_float()) {
    const double d = v->get<double>();
    if (d >= 0 && d < 1.8e19 && d == static_cast<double>(static_cast<std::uint64_t>(d)))
      return static_cast<std::uint64_t>(d);
  }
  bad(where + "." + key, "expected a nonnegative integer");
}

double get_real(const json& obj, const char* key, double fallback, const std::string& where) {
  const json* v = find(obj, key);
  if (!v) return fallback;
  if (!v->is_number()) bad(where + "." + key, "expected a number");
  return v->get<double>();
}

std::vector<double> get_reals(const json& v, const std::string& where) {
  if (!v.is_array()) bad(where, "expected an array of numbers");
  std::vector<double> out;
  for (const auto& x : v) {
    if (!x.is_number()) bad(where, "expected an array of numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

Eigen::VectorXd get_vector(const json& v, std::size_t dim, const std::string& where) {
  const auto xs = get_reals(v, where);
  if (xs.size() != dim) bad(where, "expected " + std::to_string(dim) + " entries");
  return Eigen::Map<const Eigen::VectorXd>(xs.data(), static_cast<Eigen::Index>(xs.size()));
}

CountVector get_counts(const json& v, std::size_t dim, const std::string& where) {
  if (!v.is_array() || v.size() != dim) bad(where, "expected " + std::to_string(dim) + " offspring counts");
  CountVector n;
  for (const auto& x : v) {
    if (!x.is_number_unsigned() || x.get<std::uint64_t>() > 0xffffffffULL) bad(where, "bad offspring count");
    n.push_back(static_cast<std::uint32_t>(x.get<std::uint64_t>()));
  }
  return n;
}

std::size_t get_type(const json& obj, const char* key, std::size_t V, const std::string& where) {
  const json* v = find(obj, key);
  if (!v) bad(where + "." + key, "missing");
  if (!v->is_number_unsigned() || v->get<std::uint64_t>() < 1 || v->get<std::uint64_t>() > V)
    bad(where + "." + key, "expected a type in 1.." + std::to_string(V));
  return static_cast<std::size_t>(v->get<std::uint64_t>() - 1);
}

void require_rule(const ProcessSpec& spec, std::size_t j, const CountVector& n, const std::string& where) {
  const auto idx = spec.find_rule(j, n);
  if (!idx || spec.rules(j)[*idx].prob <= 0.0) {
    std::string label;
    for (auto c : n) label += (label.empty() ? "" : " ") + std::to_string(c);
    throw Error(ErrorCode::UnknownRule,
                where + ": rule " + std::to_string(j + 1) + " -> (" + label + ") is not in the support");
  }
}

DirectionGridSpec get_grid(const json& obj, std::size_t dim, const std::string& where) {
  DirectionGridSpec g;
  const json* v = find(obj, "grid");
  if (!v) return g;
  if (v->is_array()) {
    for (std::size_t i = 0; i < v->size(); ++i) {
      const auto& p = (*v)[i];
      const std::string w = where + ".grid[" + std::to_string(i) + "]";
      if (!p.is_object() || !find(p, "c") || !find(p, "K")) bad(w, "expected {\"c\": [...], \"K\": number}");
      g.points.push_back({get_vector(p["c"], dim, w + ".c"), get_real(p, "K", 0.0, w)});
    }
    if (g.points.empty()) bad(where + ".grid", "empty grid");
  } else if (v->is_object()) {
    g.count = get_count(*v, "count", g.count, where + ".grid");
    g.seed = get_count(*v, "seed", g.seed, where + ".grid");
    if (g.count == 0) bad(where + ".grid.count", "must be positive");
  } else {
    bad(where + ".grid", "expected an array of points or {count, seed}");
  }
  return g;
}

void check_keys(const json& obj, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!obj.is_object()) bad(where, "expected an object");
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || it.key() == a;
    if (!ok) bad(where, "unknown key \"" + it.key() + "\"");
  }
}

void require_positive(std::uint64_t x, const std::string& where) {
  if (x == 0) bad(where, "must be positive");
}

}  // namespace

ExperimentConfig parse_experiment_config(std::string_view text, const fs::path& base_dir) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ParseError, std::string("config is not valid JSON: ") + e.what());
  }
  check_keys(root,
             {"experiment_id", "process", "root_type", "master_seed", "node_cap", "workers", "output_dir", "sample",
              "estimate", "verify_thm1", "verify_thm2", "verify_thm3", "verify_thm4"},
             "root");

  ExperimentConfig cfg;
  const json* proc = find(root, "process");
  if (!proc) bad("process", "missing");
  if (proc->is_string()) {
    fs::path p = proc->get<std::string>();
    if (p.is_relative()) p = base_dir / p;
    cfg.process = std::make_shared<const ProcessSpec>(load_process_file(p));
  } else if (proc->is_object()) {
    cfg.process = std::make_shared<const ProcessSpec>(parse_process_json(proc->dump()));
  } else {
    bad("process", "expected a file path or an inline process object");
  }
  const ProcessSpec& spec = *cfg.process;
  const std::size_t V = spec.num_types();

  if (!find(root, "master_seed")) bad("master_seed", "missing; every run needs an explicit seed");
  cfg.master_seed = get_count(root, "master_seed", 0, "root");
  cfg.root_type = find(root, "root_type") ? get_type(root, "root_type", V, "root") : 0;
  cfg.node_cap = get_count(root, "node_cap", cfg.node_cap, "root");
  require_positive(cfg.node_cap, "node_cap");
  cfg.workers = static_cast<unsigned>(get_count(root, "workers", 1, "root"));
  if (cfg.workers == 0 || cfg.workers > 1024) bad("workers", "expected 1..1024");
  if (const json* v = find(root, "output_dir")) {
    if (!v->is_string()) bad("output_dir", "expected a string");
    cfg.output_dir = v->get<std::string>();
  }
  if (const json* v = find(root, "experiment_id")) {
    if (!v->is_string()) bad("experiment_id", "expected a string");
    cfg.experiment_id = v->get<std::string>();
  }

  if (const json* b = find(root, "sample")) {
    check_keys(*b, {"N", "lambdas"}, "sample");
    SampleBlock s;
    s.N = get_count(*b, "N", s.N, "sample");
    require_positive(s.N, "sample.N");
    if (const json* l = find(*b, "lambdas")) s.lambdas = get_reals(*l, "sample.lambdas");
    for (double l : s.lambdas)
      if (!(l > 0.0 && l < 1.0)) bad("sample.lambdas", "each lambda must lie strictly inside (0, 1)");
    cfg.sample = s;
  }

  if (const json* b = find(root, "estimate")) {
    check_keys(*b, {"N", "beta", "rules"}, "estimate");
    EstimateBlock e;
    e.N = get_count(*b, "N", e.N, "estimate");
    require_positive(e.N, "estimate.N");
    if (find(*b, "beta")) {
      e.beta = get_real(*b, "beta", 0.25, "estimate");
      if (!(*e.beta > 0.0 && *e.beta < 0.5)) bad("estimate.beta", "must lie in (0, 1/2)");
    }
    if (const json* r = find(*b, "rules")) {
      if (!r->is_array()) bad("estimate.rules", "expected an array");
      for (std::size_t i = 0; i < r->size(); ++i) {
        const std::string w = "estimate.rules[" + std::to_string(i) + "]";
        const auto& x = (*r)[i];
        check_keys(x, {"type", "offspring"}, w);
        if (!find(x, "offspring")) bad(w + ".offspring", "missing");
        TrackedRule t{get_type(x, "type", V, w), get_counts(x["offspring"], V, w + ".offspring")};
        require_rule(spec, t.type, t.counts, w);
        e.rules.push_back(std::move(t));
      }
    }
    cfg.estimate = e;
  }

  if (const json* b = find(root, "verify_thm1")) {
    check_keys(*b, {"N", "replicates", "c", "t_grid", "cf_tolerance", "ks_tolerance"}, "verify_thm1");
    Thm1Block t;
    t.N = get_count(*b, "N", t.N, "verify_thm1");
    t.replicates = get_count(*b, "replicates", t.replicates, "verify_thm1");
    require_positive(t.N, "verify_thm1.N");
    require_positive(t.replicates, "verify_thm1.replicates");
    if (const json* c = find(*b, "c")) t.c = get_vector(*c, V, "verify_thm1.c");
    if (const json* g = find(*b, "t_grid")) t.t_grid = get_reals(*g, "verify_thm1.t_grid");
    t.cf_tolerance = get_real(*b, "cf_tolerance", t.cf_tolerance, "verify_thm1");
    if (const json* k = find(*b, "ks_tolerance")) {
      if (k->is_null()) t.ks_tolerance.reset();
      else t.ks_tolerance = get_real(*b, "ks_tolerance", 0.0, "verify_thm1");
    }
    cfg.verify_thm1 = t;
  }

  if (const json* b = find(root, "verify_thm2")) {
    check_keys(*b, {"N", "replicates", "grid", "cf_tolerance"}, "verify_thm2");
    Thm2Block t;
    t.N = get_count(*b, "N", t.N, "verify_thm2");
    t.replicates = get_count(*b, "replicates", t.replicates, "verify_thm2");
    require_positive(t.N, "verify_thm2.N");
    require_positive(t.replicates, "verify_thm2.replicates");
    t.grid = get_grid(*b, V, "verify_thm2");
    t.cf_tolerance = get_real(*b, "cf_tolerance", t.cf_tolerance, "verify_thm2");
    cfg.verify_thm2 = t;
  }

  if (const json* b = find(root, "verify_thm3")) {
    check_keys(*b, {"j", "rules", "N", "replicates", "grid", "cf_tolerance"}, "verify_thm3");
    Thm3Block t;
    t.j = get_type(*b, "j", V, "verify_thm3");
    if (const json* r = find(*b, "rules")) {
      if (!r->is_array() || r->empty()) bad("verify_thm3.rules", "expected a nonempty array of offspring vectors");
      for (std::size_t i = 0; i < r->size(); ++i) {
        const std::string w = "verify_thm3.rules[" + std::to_string(i) + "]";
        t.rules.push_back(get_counts((*r)[i], V, w));
        require_rule(spec, t.j, t.rules.back(), w);
      }
    } else {
      for (const auto& rule : spec.rules(t.j))
        if (rule.prob > 0.0) t.rules.push_back(rule.counts);
    }
    t.N = get_count(*b, "N", t.N, "verify_thm3");
    t.replicates = get_count(*b, "replicates", t.replicates, "verify_thm3");
    require_positive(t.N, "verify_thm3.N");
    require_positive(t.replicates, "verify_thm3.replicates");
    t.grid = get_grid(*b, t.rules.size(), "verify_thm3");
    t.cf_tolerance = get_real(*b, "cf_tolerance", t.cf_tolerance, "verify_thm3");
    cfg.verify_thm3 = t;
  }

  if (const json* b = find(root, "verify_thm4")) {
    check_keys(*b, {"N_grid", "beta", "chains", "tolerance"}, "verify_thm4");
    Thm4Block t;
    if (const json* g = find(*b, "N_grid")) {
      if (!g->is_array() || g->empty()) bad("verify_thm4.N_grid", "expected a nonempty array");
      t.N_grid.clear();
      for (const auto& x : *g) {
        if (!x.is_number_unsigned() || x.get<std::uint64_t>() == 0) bad("verify_thm4.N_grid", "expected positive integers");
        if (!t.N_grid.empty() && x.get<std::uint64_t>() <= t.N_grid.back())
          bad("verify_thm4.N_grid", "must be strictly increasing");
        t.N_grid.push_back(x.get<std::uint64_t>());
      }
    }
    t.beta = get_real(*b, "beta", t.beta, "verify_thm4");
    if (!(t.beta > 0.0 && t.beta < 0.5)) bad("verify_thm4.beta", "must lie in (0, 1/2)");
    t.chains = get_count(*b, "chains", t.chains, "verify_thm4");
    require_positive(t.chains, "verify_thm4.chains");
    t.tolerance = get_real(*b, "tolerance", t.tolerance, "verify_thm4");
    cfg.verify_thm4 = t;
  }

  json canon = root;
  canon.erase("master_seed");
  canon.erase("workers");
  canon.erase("output_dir");
  canon["process"] = json::parse(process_to_json(spec));
  cfg.canonical_json = canon.dump();
  return cfg;
}

ExperimentConfig load_experiment_config(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot read config " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_experiment_config(buf.str(), path.parent_path());
}

namespace {

template <class Fn>
int guarded(std::ostream& err, Fn&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

void write_file(const fs::path& path, const std::function<void(std::ostream&)>& body) {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  body(out);
  out.flush();
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

EigenData validated(const ProcessSpec& spec) { return require_critical(spec); }

VerifyOptions verify_options(const ExperimentConfig& cfg) {
  VerifyOptions o;
  o.master_seed = cfg.master_seed;
  o.node_cap = cfg.node_cap;
  o.workers = cfg.workers;
  o.experiment_id = cfg.experiment_id;
  return o;
}

std::vector<DirectionPoint> resolve_grid(const DirectionGridSpec& g, std::size_t dim, const Eigen::VectorXd* avoid) {
  if (!g.points.empty()) return g.points;
  return default_direction_grid(dim, g.count, g.seed, avoid);
}

int finish_report(const ExperimentConfig& cfg, const VerificationReport& report, std::ostream& out,
                  std::ostream& err) {
  const std::string hash = cfg.hash();
  const fs::path base = cfg.output_dir / report.theorem;
  write_file(base.string() + ".json", [&](std::ostream& o) { o << report_to_json(report, hash); });
  write_file(base.string() + ".csv", [&](std::ostream& o) {
    o << header_comment(hash, cfg.master_seed);
    write_report_csv(o, report);
  });
  for (const auto& w : report.warnings) err << "warning: " << w << '\n';
  out << report.theorem << ": ";
  if (report.theorem == "thm4") {
    out << "final median |u_hat - u_k| = " << format_double(report.sup_cf_distance) << " (tolerance "
        << format_double(report.cf_tolerance) << ")";
    if (report.exact_identity) out << ", exact identity holds at machine precision";
  } else {
    out << "sup CF distance = " << format_double(report.sup_cf_distance) << " (tolerance "
        << format_double(report.cf_tolerance) << ")";
    if (report.ks_statistic) out << ", KS = " << format_double(*report.ks_statistic);
  }
  out << (report.passed ? " PASS" : " FAIL") << '\n';
  return report.passed ? kExitPass : kExitTolerance;
}

}  // namespace

int cmd_validate(const fs::path& process_file, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto spec = load_process_file(process_file);
    const auto report = validate_spec(spec);
    if (!report.ok()) {
      for (const auto& issue : report.issues) err << "error: " << to_string(issue.code) << ": " << issue.message << '\n';
      return exit_code_for(report.issues.front().code);
    }
    print_eigen_summary(out, spec, *report.eigen);
    return static_cast<int>(kExitPass);
  });
}

int cmd_sample(const ExperimentConfig& cfg, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (!cfg.sample) throw Error(ErrorCode::ParseError, "config has no \"sample\" block");
    validated(*cfg.process);
    SamplerConfig sc;
    sc.root_type = cfg.root_type;
    sc.node_cap = cfg.node_cap;
    sc.lambdas = cfg.sample->lambdas;
    sc.master_seed = cfg.master_seed;
    const auto batch = sample_batch(*cfg.process, sc, cfg.sample->N, {RecordLevel::Full, cfg.workers, 0});
    write_file(cfg.output_dir / "trees.csv", [&](std::ostream& o) {
      o << header_comment(cfg.hash(), cfg.master_seed);
      write_tree_csv(o, batch, cfg.sample->lambdas);
    });
    out << "sampled " << batch.num_trees() << " trees, " << batch.totals().size << " particles, "
        << batch.censored_count() << " censored\n";
    return static_cast<int>(kExitPass);
  });
}

int cmd_estimate(const ExperimentConfig& cfg, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (!cfg.estimate) throw Error(ErrorCode::ParseError, "config has no \"estimate\" block");
    const auto& spec = *cfg.process;
    const auto eigen = validated(spec);
    const auto& block = *cfg.estimate;
    SamplerConfig sc;
    sc.root_type = cfg.root_type;
    sc.node_cap = cfg.node_cap;
    sc.master_seed = cfg.master_seed;
    sc.tracked_rules = block.rules.empty() ? all_rules(spec) : block.rules;
    sc.keep_depth_histogram = block.beta.has_value();
    const auto level = block.beta ? RecordLevel::Full : RecordLevel::None;
    const auto batch = sample_batch(spec, sc, block.N, {level, cfg.workers, 0});
    std::optional<RightEigenEstimate> u;
    if (block.beta) u = estimate_u_from_batch(batch, block.N, *block.beta);
    const auto report = build_estimate_report(batch, sc.tracked_rules, u, cfg.root_type);
    const std::string hash = cfg.hash();
    write_file(cfg.output_dir / "estimate.json",
               [&](std::ostream& o) { o << estimate_to_json(report, &spec, &eigen, hash, cfg.master_seed); });
    write_file(cfg.output_dir / "estimate.csv", [&](std::ostream& o) {
      o << header_comment(hash, cfg.master_seed);
      write_estimate_csv(o, report, &spec, &eigen);
    });
    write_estimate_csv(out, report, &spec, &eigen);
    return static_cast<int>(kExitPass);
  });
}

int cmd_verify(const ExperimentConfig& cfg, int theorem, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto& spec = *cfg.process;
    const auto eigen = validated(spec);
    auto opts = verify_options(cfg);
    const std::size_t k = cfg.root_type;
    switch (theorem) {
      case 1: {
        if (!cfg.verify_thm1) throw Error(ErrorCode::ParseError, "config has no \"verify_thm1\" block");
        const auto& b = *cfg.verify_thm1;
        opts.cf_tolerance = b.cf_tolerance;
        opts.ks_tolerance = b.ks_tolerance;
        const Eigen::VectorXd c = b.c.value_or(Eigen::VectorXd::Ones(eigen.v.size()));
        const auto grid = b.t_grid.empty() ? default_t_grid() : b.t_grid;
        return finish_report(cfg, verify_theorem1(spec, eigen, k, b.N, b.replicates, grid, c, opts), out, err);
      }
      case 2: {
        if (!cfg.verify_thm2) throw Error(ErrorCode::ParseError, "config has no \"verify_thm2\" block");
        const auto& b = *cfg.verify_thm2;
        opts.cf_tolerance = b.cf_tolerance;
        const auto grid = resolve_grid(b.grid, spec.num_types(), &eigen.v);
        return finish_report(cfg, verify_theorem2(spec, eigen, k, b.N, b.replicates, grid, opts), out, err);
      }
      case 3: {
        if (!cfg.verify_thm3) throw Error(ErrorCode::ParseError, "config has no \"verify_thm3\" block");
        const auto& b = *cfg.verify_thm3;
        opts.cf_tolerance = b.cf_tolerance;
        const auto grid = resolve_grid(b.grid, b.rules.size(), nullptr);
        return finish_report(cfg, verify_theorem3(spec, eigen, k, b.j, b.rules, b.N, b.replicates, grid, opts), out,
                             err);
      }
      case 4: {
        if (!cfg.verify_thm4) throw Error(ErrorCode::ParseError, "config has no \"verify_thm4\" block");
        const auto& b = *cfg.verify_thm4;
        Theorem4Options t4;
        t4.chains = b.chains;
        t4.tolerance = b.tolerance;
        return finish_report(cfg, verify_theorem4(spec, eigen, k, b.N_grid, b.beta, t4, opts), out, err);
      }
      default:
        throw Error(ErrorCode::InvalidArgument, "theorem must be 1, 2, 3 or 4");
    }
  });
}

int cmd_all_checks(const ExperimentConfig& cfg, std::ostream& out, std::ostream& err) {
  int worst = guarded(err, [&] {
    const auto eigen = validated(*cfg.process);
    print_eigen_summary(out, *cfg.process, eigen);
    return static_cast<int>(kExitPass);
  });
  if (worst != kExitPass) return worst;
  auto note = [&](int code) { worst = std::max(worst, code); };
  if (cfg.sample) note(cmd_sample(cfg, out, err));
  if (cfg.estimate) note(cmd_estimate(cfg, out, err));
  if (cfg.verify_thm1) note(cmd_verify(cfg, 1, out, err));
  if (cfg.verify_thm2) note(cmd_verify(cfg, 2, out, err));
  if (cfg.verify_thm3) note(cmd_verify(cfg, 3, out, err));
  if (cfg.verify_thm4) note(cmd_verify(cfg, 4, out, err));
  return worst;
}

}  // namespace gwlimits
