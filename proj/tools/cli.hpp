#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "divbound/divbound.hpp"

namespace divbound::cli {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Output table

struct Empty {};
using Cell = std::variant<Empty, double, std::int64_t, std::string, bool>;

inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
  json meta = json::object();

  std::size_t col(std::string_view name) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
      if (columns[i] == name) return i;
    throw std::out_of_range(std::string(name));
  }
};

inline std::string csv_cell(const Cell& c) {
  struct V {
    std::string operator()(Empty) const { return ""; }
    std::string operator()(double v) const { return format_double(v); }
    std::string operator()(std::int64_t v) const { return std::to_string(v); }
    std::string operator()(const std::string& s) const {
      if (s.find_first_of(",\"\n") == std::string::npos) return s;
      std::string q = "\"";
      for (char ch : s) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
      return q + "\"";
    }
    std::string operator()(bool b) const { return b ? "true" : "false"; }
  };
  return std::visit(V{}, c);
}

inline json json_cell(const Cell& c) {
  struct V {
    json operator()(Empty) const { return nullptr; }
    json operator()(double v) const { return std::isfinite(v) ? json(v) : json(format_double(v)); }
    json operator()(std::int64_t v) const { return v; }
    json operator()(const std::string& s) const { return s; }
    json operator()(bool b) const { return b; }
  };
  return std::visit(V{}, c);
}

inline void write_csv(const Table& t, std::ostream& out) {
  for (std::size_t i = 0; i < t.columns.size(); ++i) out << (i ? "," : "") << t.columns[i];
  out << '\n';
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << csv_cell(row[i]);
    out << '\n';
  }
}

inline void write_json(const Table& t, std::ostream& out) {
  json rows = json::array();
  for (const auto& row : t.rows) {
    json r = json::object();
    for (std::size_t i = 0; i < row.size(); ++i) r[t.columns[i]] = json_cell(row[i]);
    rows.push_back(std::move(r));
  }
  json doc = {{"columns", t.columns}, {"rows", rows}};
  if (!t.meta.empty()) doc["meta"] = t.meta;
  out << doc.dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// Parameters

struct Params {
  std::optional<double> nu;
  std::string d_file;
  std::vector<double> d_values;
  std::vector<double> d_range;
  std::uint64_t d_seed = 0;
  std::size_t d_dim = 0;
  std::string n_spec;
  std::string format = "csv";
  std::string out;
  std::string d_out;
  std::string spec;
  json spec_inline;
  double c0 = gamma_tv::kDefaultC0;
  std::uint64_t samples = 1'000'000;
  std::uint64_t seed = 0;
  std::string preset = "student-normal";
  std::string g1 = "student:3";
  std::string g2 = "normal";
  std::string sigma1, sigma2;
  json sigma1_inline, sigma2_inline;
  unsigned threads = 0;
  std::string config;
};

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw UsageError(path + ": " + e.what());
  }
}

inline std::vector<double> json_vector(const json& j, const std::string& what) {
  const json& arr = j.is_object() && j.contains("d") ? j["d"] : j;
  if (!arr.is_array()) throw UsageError(what + ": expected a JSON array of numbers");
  std::vector<double> v;
  for (const auto& x : arr) {
    if (!x.is_number()) throw UsageError(what + ": expected a JSON array of numbers");
    v.push_back(x.get<double>());
  }
  return v;
}

inline Eigen::MatrixXd json_matrix(const json& j, const std::string& what) {
  if (!j.is_array() || j.empty() || !j[0].is_array()) throw UsageError(what + ": expected an array of rows");
  const std::size_t n = j.size();
  Eigen::MatrixXd m(n, n);
  for (std::size_t r = 0; r < n; ++r) {
    if (!j[r].is_array() || j[r].size() != n) throw UsageError(what + ": matrix must be square");
    for (std::size_t c = 0; c < n; ++c) {
      if (!j[r][c].is_number()) throw UsageError(what + ": non-numeric entry");
      m(r, c) = j[r][c].get<double>();
    }
  }
  return m;
}

/// Fills fields not given on the command line from a JSON config object.
inline void apply_config(const json& cfg, Params& p, const CLI::App& app) {
  auto given = [&](const char* flag) {
    const auto* opt = app.get_option_no_throw(flag);
    return opt != nullptr && opt->count() > 0;
  };
  auto take = [&](const char* key, const char* flag, auto& field) {
    if (cfg.contains(key) && !given(flag)) field = cfg[key].get<std::decay_t<decltype(field)>>();
  };
  try {
    if (cfg.contains("nu") && !given("--nu")) p.nu = cfg["nu"].get<double>();
    if (cfg.contains("d") && !given("--d-file")) p.d_values = json_vector(cfg["d"], "config d");
    take("d_file", "--d-file", p.d_file);
    take("d_range", "--d-range", p.d_range);
    take("d_seed", "--d-seed", p.d_seed);
    take("d_dim", "--d-dim", p.d_dim);
    if (cfg.contains("n") && !given("--n")) {
      const auto& n = cfg["n"];
      if (n.is_string())
        p.n_spec = n.get<std::string>();
      else if (n.is_number_integer())
        p.n_spec = std::to_string(n.get<std::int64_t>());
      else if (n.is_array() && (n.size() == 2 || n.size() == 3)) {
        p.n_spec = std::to_string(n[0].get<std::int64_t>()) + ".." + std::to_string(n[1].get<std::int64_t>());
        if (n.size() == 3) p.n_spec += ".." + std::to_string(n[2].get<std::int64_t>());
      } else {
        throw UsageError("config n: expected \"a..b..s\", an integer or [a, b, s]");
      }
    }
    take("format", "--format", p.format);
    take("out", "--out", p.out);
    take("d_out", "--d-out", p.d_out);
    if (cfg.contains("spec") && !given("--spec")) {
      if (cfg["spec"].is_string())
        p.spec = cfg["spec"].get<std::string>();
      else
        p.spec_inline = cfg["spec"];
    }
    take("c0", "--c0", p.c0);
    take("samples", "--samples", p.samples);
    take("seed", "--seed", p.seed);
    take("preset", "--preset", p.preset);
    take("g1", "--g1", p.g1);
    take("g2", "--g2", p.g2);
    for (auto [key, flag, path, inl] : {std::tuple{"sigma1", "--sigma1", &p.sigma1, &p.sigma1_inline},
                                        std::tuple{"sigma2", "--sigma2", &p.sigma2, &p.sigma2_inline}}) {
      if (!cfg.contains(key) || given(flag)) continue;
      if (cfg[key].is_string())
        *path = cfg[key].get<std::string>();
      else
        *inl = cfg[key];
    }
    take("threads", "--threads", p.threads);
  } catch (const json::exception& e) {
    throw UsageError(std::string("config: ") + e.what());
  }
}

/// "a", "a..b" or "a..b..s".
inline std::vector<std::size_t> parse_n_range(const std::string& s) {
  std::vector<long long> parts;
  std::size_t pos = 0;
  while (true) {
    const std::size_t next = s.find("..", pos);
    const std::string tok = s.substr(pos, next == std::string::npos ? std::string::npos : next - pos);
    long long v = 0;
    const auto r = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (tok.empty() || r.ec != std::errc() || r.ptr != tok.data() + tok.size())
      throw UsageError("bad n range '" + s + "': expected a, a..b or a..b..s");
    parts.push_back(v);
    if (next == std::string::npos) break;
    pos = next + 2;
  }
  if (parts.size() > 3) throw UsageError("bad n range '" + s + "'");
  const long long a = parts[0];
  const long long b = parts.size() > 1 ? parts[1] : a;
  const long long step = parts.size() > 2 ? parts[2] : 1;
  if (a < 1 || b < a || step < 1) throw UsageError("n range '" + s + "' is empty or not positive");
  if (b > static_cast<long long>(student_normal::kMaxDimension))
    fail(Errc::unsupported_dimension,
         "n range reaches " + std::to_string(b) + ", above " + std::to_string(student_normal::kMaxDimension));
  std::vector<std::size_t> ns;
  for (long long n = a; n <= b; n += step) ns.push_back(static_cast<std::size_t>(n));
  return ns;
}

struct ScaleSource {
  std::vector<double> d;
  bool generated = false;
};

inline ScaleSource load_scales(const Params& p, std::size_t needed) {
  ScaleSource s;
  const int sources = !p.d_file.empty() + !p.d_values.empty() + !p.d_range.empty();
  if (sources > 1) throw UsageError("give only one of --d-file, --d-range or a config d array");
  if (!p.d_file.empty()) {
    s.d = json_vector(read_json_file(p.d_file), p.d_file);
  } else if (!p.d_values.empty()) {
    s.d = p.d_values;
  } else if (!p.d_range.empty()) {
    if (p.d_range.size() != 2 || !(p.d_range[0] > 0.0) || !(p.d_range[1] >= p.d_range[0]))
      throw UsageError("--d-range needs 0 < lo <= hi");
    const std::size_t dim = p.d_dim ? p.d_dim : needed;
    std::mt19937_64 rng(p.d_seed);
    std::uniform_real_distribution<double> u(p.d_range[0], p.d_range[1]);
    s.d.resize(dim);
    for (auto& x : s.d) x = u(rng);
    s.generated = true;
  } else {
    s.d.assign(needed, 1.0);
  }
  if (s.d.size() < needed)
    throw UsageError("scale vector has " + std::to_string(s.d.size()) + " entries, sweep needs " +
                     std::to_string(needed));
  return s;
}

inline DiagonalScales prefix(const std::vector<double>& d, std::size_t n) {
  return DiagonalScales(std::vector<double>(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(n)));
}

inline double require_nu(const Params& p) {
  if (!p.nu) throw UsageError("--nu is required");
  return *p.nu;
}

// ---------------------------------------------------------------------------
// Commands

inline Table run_student_tv(const Params& p, ScaleSource& scales) {
  const double nu = require_nu(p);
  const auto ns = parse_n_range(p.n_spec.empty() ? "2" : p.n_spec);
  scales = load_scales(p, ns.back());
  Table t;
  t.columns = {"n", "lower", "upper", "regime", "n0", "lower_clipped", "upper_clipped", "regime_change", "nu",
               "d_minus", "d_plus", "reason"};
  std::vector<std::vector<Cell>> rows(ns.size());
  std::vector<std::string> regimes(ns.size());
  parallel_for(
      ns.size(),
      [&](std::size_t i) {
        const std::size_t n = ns[i];
        const student_normal::StudentNormalProblem prob(nu, prefix(scales.d, n));
        std::vector<Cell> row(t.columns.size());
        row[0] = static_cast<std::int64_t>(n);
        row[8] = nu;
        row[9] = prob.d().d_minus();
        row[10] = prob.d().d_plus();
        const auto regime = student_normal::classify_regime(prob);
        row[4] = static_cast<std::int64_t>(regime.n0);
        regimes[i] = regime.condition_liminf ? "liminf" : "limsup";
        row[3] = regimes[i];
        if (!regime.applicable) {
          row[11] = std::string("n below n0");
        } else {
          const auto b = student_normal::tv_bounds_student_normal(prob);
          row[1] = b.lower;
          row[2] = b.upper;
          row[5] = b.lower_clipped;
          row[6] = b.upper_clipped;
        }
        rows[i] = std::move(row);
      },
      p.threads);
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i][7] = i > 0 && regimes[i] != regimes[i - 1];
  t.rows = std::move(rows);
  t.meta = {{"command", "student-normal-tv"}, {"nu", nu}};
  return t;
}

inline Table run_student_kl(const Params& p, ScaleSource& scales) {
  const double nu = require_nu(p);
  const auto ns = parse_n_range(p.n_spec.empty() ? "1" : p.n_spec);
  scales = load_scales(p, ns.back());
  Table t;
  t.columns = {"n", "forward", "reverse_lower", "reverse_upper", "reverse_lower_clipped", "nu", "d_minus", "d_plus",
               "reason"};
  std::vector<std::vector<Cell>> rows(ns.size());
  parallel_for(
      ns.size(),
      [&](std::size_t i) {
        const std::size_t n = ns[i];
        const student_normal::StudentNormalProblem prob(nu, prefix(scales.d, n));
        std::vector<Cell> row(t.columns.size());
        row[0] = static_cast<std::int64_t>(n);
        row[1] = student_normal::kl_exact_t_vs_normal(prob);
        const auto b = student_normal::kl_reverse_bounds(prob);
        row[2] = b.lower;
        row[3] = b.upper;
        row[4] = b.lower_clipped;
        row[5] = nu;
        row[6] = prob.d().d_minus();
        row[7] = prob.d().d_plus();
        if (!b.notes.empty()) {
          std::string r;
          for (const auto& note : b.notes) r += (r.empty() ? "" : "; ") + note;
          row[8] = r;
        }
        rows[i] = std::move(row);
      },
      p.threads);
  t.rows = std::move(rows);
  t.meta = {{"command", "student-normal-kl"}, {"nu", nu}};
  return t;
}

inline gamma_tv::GammaProductSpec load_gamma_spec(const Params& p) {
  json j;
  if (!p.spec.empty())
    j = read_json_file(p.spec);
  else if (!p.spec_inline.is_null())
    j = p.spec_inline;
  else
    throw UsageError("--spec is required");
  gamma_tv::GammaProductSpec s;
  try {
    s.alpha = j.at("alpha").get<std::vector<double>>();
    s.beta = j.at("beta").get<std::vector<double>>();
    s.lambda = j.at("lambda").get<std::vector<double>>();
    s.mu = j.at("mu").get<std::vector<double>>();
  } catch (const json::exception& e) {
    throw UsageError(std::string("gamma spec needs alpha, beta, lambda, mu arrays: ") + e.what());
  }
  return s;
}

inline Table run_gamma_tv(const Params& p) {
  const auto spec = load_gamma_spec(p);
  const auto e = gamma_tv::tv_estimate(spec, p.c0, p.threads);
  Table t;
  t.columns = {"n", "point", "lower", "upper", "eps_bound", "c0", "lower_arg", "upper_arg", "reversed", "reason"};
  std::vector<Cell> row(t.columns.size());
  row[0] = static_cast<std::int64_t>(spec.size());
  row[1] = e.point;
  row[2] = e.interval.lower;
  row[3] = e.interval.upper;
  row[4] = e.eps_bound;
  row[5] = e.c0_used;
  row[6] = e.lower_arg;
  row[7] = e.upper_arg;
  row[8] = e.reversed;
  if (!e.interval.notes.empty()) row[9] = e.interval.notes.front();
  t.rows.push_back(std::move(row));
  t.meta = {{"command", "gamma-tv"}};
  return t;
}

inline Table run_elliptical(const Params& p, ScaleSource& scales) {
  const auto ns = parse_n_range(p.n_spec.empty() ? "2" : p.n_spec);
  scales = load_scales(p, ns.back());
  Table t;
  t.columns = {"n", "tv_lower", "tv_upper", "kl_lower", "kl_upper", "g1", "g2", "reason"};
  std::vector<std::vector<Cell>> rows(ns.size());
  parallel_for(
      ns.size(),
      [&](std::size_t i) {
        const std::size_t n = ns[i];
        std::vector<Cell> row(t.columns.size());
        row[0] = static_cast<std::int64_t>(n);
        row[5] = p.g1;
        row[6] = p.g2;
        const auto g1 = elliptical::DensityGenerator::parse(p.g1, n);
        const auto g2 = elliptical::DensityGenerator::parse(p.g2, n);
        const auto d = prefix(scales.d, n);
        std::string reason;
        try {
          const auto tv = elliptical::tv_bounds(g1, g2, d);
          row[1] = tv.lower;
          row[2] = tv.upper;
        } catch (const Error& e) {
          if (!e.is_precondition() && e.code() != Errc::quadrature_failure) throw;
          reason = std::string("tv: ") + e.what();
        }
        try {
          const auto kl = elliptical::kl_bounds(g1, g2, d);
          row[3] = kl.lower;
          row[4] = kl.upper;
        } catch (const Error& e) {
          if (!e.is_precondition() && e.code() != Errc::quadrature_failure) throw;
          reason += (reason.empty() ? "" : "; ") + std::string("kl: ") + e.what();
        }
        if (!reason.empty()) row[7] = reason;
        rows[i] = std::move(row);
      },
      p.threads);
  t.rows = std::move(rows);
  t.meta = {{"command", "elliptical"}, {"g1", p.g1}, {"g2", p.g2}};
  return t;
}

inline Eigen::MatrixXd load_matrix(const std::string& path, const json& inl, const char* what) {
  if (!path.empty()) return json_matrix(read_json_file(path), path);
  if (!inl.is_null()) return json_matrix(inl, what);
  throw UsageError(std::string("--") + what + " is required");
}

inline Table run_reduce(const Params& p) {
  const CovariancePair pair{load_matrix(p.sigma1, p.sigma1_inline, "sigma1"),
                            load_matrix(p.sigma2, p.sigma2_inline, "sigma2")};
  const auto d = reduce_pair(pair);
  Table t;
  t.columns = {"index", "d"};
  for (std::size_t i = 0; i < d.size(); ++i) t.rows.push_back({static_cast<std::int64_t>(i), d[i]});
  t.meta = {{"command", "reduce"}, {"d_minus", d.d_minus()}, {"d_plus", d.d_plus()}};
  return t;
}

inline Table run_oracle(const std::string& which, const Params& p, ScaleSource& scales) {
  oracle::McConfig cfg;
  cfg.samples = p.samples;
  cfg.seed = p.seed;
  cfg.threads = p.threads;
  const bool tv = which == "mc-tv";
  oracle::McResult r;
  std::size_t dim = 0;
  if (p.preset == "student-normal" || p.preset == "normal-student") {
    const double nu = require_nu(p);
    const auto ns = parse_n_range(p.n_spec.empty() ? "2" : p.n_spec);
    if (ns.size() != 1) throw UsageError("oracle takes a single --n");
    dim = ns.front();
    scales = load_scales(p, dim);
    const oracle::StudentLaw t(nu, dim);
    const oracle::DiagNormalLaw g(std::vector<double>(scales.d.begin(), scales.d.begin() + static_cast<std::ptrdiff_t>(dim)));
    if (p.preset == "student-normal")
      r = tv ? oracle::mc_tv(t, g, cfg) : oracle::mc_kl(t, g, cfg);
    else
      r = tv ? oracle::mc_tv(g, t, cfg) : oracle::mc_kl(g, t, cfg);
  } else if (p.preset == "gamma") {
    const auto spec = load_gamma_spec(p);
    spec.validate();
    dim = spec.size();
    const oracle::GammaProductLaw a(spec.alpha, spec.lambda), b(spec.beta, spec.mu);
    r = tv ? oracle::mc_tv(a, b, cfg) : oracle::mc_kl(a, b, cfg);
  } else {
    throw UsageError("unknown preset '" + p.preset + "' (student-normal, normal-student, gamma)");
  }
  Table t;
  t.columns = {"estimate", "std_error", "samples", "seed", "n", "preset", "divergence"};
  t.rows.push_back({r.estimate, r.std_error, static_cast<std::int64_t>(r.samples_used),
                    static_cast<std::int64_t>(p.seed), static_cast<std::int64_t>(dim), p.preset,
                    std::string(tv ? "tv" : "kl")});
  t.meta = {{"command", "oracle " + which}};
  return t;
}

// ---------------------------------------------------------------------------
// Entry point

inline void add_scale_options(CLI::App* sub, Params& p) {
  sub->add_option("--d-file", p.d_file, "JSON array (or {\"d\": [...]}) of scales");
  sub->add_option("--d-range", p.d_range, "draw scales uniformly from [lo, hi]")->expected(2);
  sub->add_option("--d-seed", p.d_seed, "seed for --d-range");
  sub->add_option("--d-dim", p.d_dim, "length of the generated scale vector (default: largest n)");
  sub->add_option("--d-out", p.d_out, "where to write generated scales (default: <out>.d.json)");
}

inline void add_output_options(CLI::App* sub, Params& p) {
  sub->add_option("--format", p.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  sub->add_option("--out", p.out, "output file (default: standard output)");
  sub->add_option("--config", p.config, "JSON file with the same keys as the flags");
  sub->add_option("--threads", p.threads, "worker threads (default: DIVBOUND_THREADS or all cores)");
}

inline void emit_scales(const ScaleSource& s, const Params& p, std::ostream& err) {
  if (!s.generated) return;
  const json doc = {{"d", s.d}, {"d_range", p.d_range}, {"d_seed", p.d_seed}};
  std::string path = p.d_out;
  if (path.empty() && !p.out.empty()) path = p.out + ".d.json";
  if (path.empty()) {
    err << "generated scales: " << doc.dump() << '\n';
    return;
  }
  std::ofstream f(path);
  if (!f) throw UsageError("cannot write " + path);
  f << doc.dump() << '\n';
}

/// Runs the command line; data goes to `out` (or --out), diagnostics to `err`.
inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Divergence bounds between elliptical and product laws"};
  app.require_subcommand(1);
  Params p;

  auto* sn_tv = app.add_subcommand("student-normal-tv", "TVD bounds, Student-t against a diagonal normal");
  auto* sn_kl = app.add_subcommand("student-normal-kl", "forward KL and reverse KL bounds, Student-t against normal");
  for (auto* sub : {sn_tv, sn_kl}) {
    sub->add_option("--nu", p.nu, "degrees of freedom");
    sub->add_option("--n", p.n_spec, "dimension or sweep a..b..s");
    add_scale_options(sub, p);
    add_output_options(sub, p);
  }
  auto* gam = app.add_subcommand("gamma-tv", "TVD estimate between products of Gamma laws");
  gam->add_option("--spec", p.spec, "JSON file with alpha, beta, lambda, mu");
  gam->add_option("--c0", p.c0, "Berry-Esseen constant");
  add_output_options(gam, p);

  auto* ell = app.add_subcommand("elliptical", "TV and KL bounds for two generators");
  ell->add_option("--g1", p.g1, "first generator: normal or student:<nu>");
  ell->add_option("--g2", p.g2, "second generator");
  ell->add_option("--n", p.n_spec, "dimension or sweep a..b..s");
  add_scale_options(ell, p);
  add_output_options(ell, p);

  auto* red = app.add_subcommand("reduce", "diagonal scales of a covariance pair");
  red->add_option("--sigma1", p.sigma1, "JSON matrix file");
  red->add_option("--sigma2", p.sigma2, "JSON matrix file");
  add_output_options(red, p);

  auto* orc = app.add_subcommand("oracle", "Monte Carlo estimates");
  orc->require_subcommand(1);
  std::vector<CLI::App*> orc_subs;
  for (const char* name : {"mc-tv", "mc-kl"}) {
    auto* sub = orc->add_subcommand(name, name == std::string("mc-tv") ? "MC total variation" : "MC KL divergence");
    sub->add_option("--preset", p.preset, "student-normal, normal-student or gamma");
    sub->add_option("--nu", p.nu, "degrees of freedom");
    sub->add_option("--n", p.n_spec, "dimension");
    sub->add_option("--spec", p.spec, "gamma spec file");
    sub->add_option("--samples", p.samples, "sample count");
    sub->add_option("--seed", p.seed, "RNG seed");
    add_scale_options(sub, p);
    add_output_options(sub, p);
    orc_subs.push_back(sub);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << '\n' << app.help();
    return 2;
  }

  CLI::App* active = nullptr;
  for (auto* sub : {sn_tv, sn_kl, gam, ell, red}) active = sub->parsed() ? sub : active;
  for (auto* sub : orc_subs) active = sub->parsed() ? sub : active;

  try {
    if (!p.config.empty()) apply_config(read_json_file(p.config), p, *active);
    if (p.format != "csv" && p.format != "json") throw UsageError("--format must be csv or json");
    ScaleSource scales;
    Table table;
    if (active == sn_tv)
      table = run_student_tv(p, scales);
    else if (active == sn_kl)
      table = run_student_kl(p, scales);
    else if (active == gam)
      table = run_gamma_tv(p);
    else if (active == ell)
      table = run_elliptical(p, scales);
    else if (active == red)
      table = run_reduce(p);
    else
      table = run_oracle(active->get_name(), p, scales);
    if (scales.generated) table.meta["d_seed"] = p.d_seed;

    std::ofstream file;
    if (!p.out.empty()) {
      file.open(p.out, std::ios::binary);
      if (!file) throw UsageError("cannot write " + p.out);
    }
    std::ostream& sink = p.out.empty() ? out : file;
    if (p.format == "json")
      write_json(table, sink);
    else
      write_csv(table, sink);
    emit_scales(scales, p, err);
    return 0;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return e.is_precondition() ? 2 : 1;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace divbound::cli
