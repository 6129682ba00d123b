// Command-line driver. Talks to the library through the C interface only.

#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <numbers>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "bianchi_cf.h"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitArgs = 2;
constexpr int kExitPrecondition = 3;
constexpr int kExitTolerance = 4;

struct Config {
  std::string command;
  int d = 1;
  std::uint64_t N = 0;
  std::uint64_t M = 0;
  double T = 0;
  std::uint64_t L = 0;
  std::uint64_t seed = 1;
  unsigned bits = 0;
  unsigned k = 2;
  std::string out;
  std::string format = "csv";
  bool strict = false;
  unsigned threads = 1;
  // command specific
  std::string z;
  double C = 0;
  std::uint64_t direct_count = 100;
  double direct_T = 200;
  double dt = 0.02;
  double ks_tol = 0.05;
  double spread_tol = 0.10;
  double alpha_tol = 0.1;
  double gap_tol = 2.0;
  double defect_bound = 20.0;
};

class Failure : public std::runtime_error {
 public:
  Failure(int code, const std::string& what) : std::runtime_error(what), code_(code) {}
  int code() const { return code_; }

 private:
  int code_;
};

void check(bcf_status s) {
  if (s == BCF_OK) return;
  const std::string msg = std::string(bcf_status_name(s)) + ": " + bcf_last_error();
  switch (s) {
    case BCF_INVALID_ARGUMENT: throw Failure(kExitArgs, msg);
    case BCF_PRECONDITION: throw Failure(kExitPrecondition, msg);
    default: throw Failure(kExitRuntime, msg);
  }
}

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::array<char, 64> buf{};
  const auto r = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), r.ptr);
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

// RFC 4180 rows with CRLF endings.
class CsvWriter {
 public:
  explicit CsvWriter(std::ostream& os) : os_(os) {}
  void row(const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) os_ << ',';
      os_ << csv_field(fields[i]);
    }
    os_ << "\r\n";
  }

 private:
  std::ostream& os_;
};

std::ofstream open_out(const fs::path& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Failure(kExitRuntime, "cannot open " + path.string() + " for writing");
  return f;
}

void finish(std::ofstream& f, const fs::path& path) {
  f.flush();
  if (!f) throw Failure(kExitRuntime, "write failed: " + path.string());
}

fs::path out_dir(const Config& c) {
  const fs::path dir = c.out.empty() ? fs::path(".") : fs::path(c.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Failure(kExitRuntime, "cannot create " + dir.string() + ": " + ec.message());
  return dir;
}

void write_json(const fs::path& path, const ordered_json& doc) {
  std::ofstream f = open_out(path);
  f << doc.dump(2) << '\n';
  finish(f, path);
}

// Thread count is deliberately absent: outputs do not depend on it.
ordered_json config_echo(const Config& c) {
  ordered_json j;
  j["command"] = c.command;
  j["d"] = c.d;
  j["N"] = c.N;
  j["M"] = c.M;
  j["T"] = c.T;
  j["L"] = c.L;
  j["seed"] = c.seed;
  j["bits"] = c.bits;
  j["k"] = c.k;
  j["tool_version"] = bcf_version();
  return j;
}

// Collects tolerance failures; fatal only under --strict.
class Tolerances {
 public:
  explicit Tolerances(bool strict) : strict_(strict) {}
  void require(bool ok, const std::string& what) {
    if (ok) return;
    std::cerr << (strict_ ? "tolerance failure: " : "warning: ") << what << '\n';
    failed_ = true;
  }
  int code() const { return strict_ && failed_ ? kExitTolerance : kExitOk; }

 private:
  bool strict_;
  bool failed_ = false;
};

// --------------------------------------------------------------------------

template <typename T, void (*Free)(T*)>
struct Deleter {
  void operator()(T* p) const { Free(p); }
};
template <typename T, void (*Free)(T*)>
using Handle = std::unique_ptr<T, Deleter<T, Free>>;

struct CString {
  char* p = nullptr;
  ~CString() { bcf_string_free(p); }
  std::string str() const { return p ? p : ""; }
};

int cmd_expand(const Config& c) {
  bcf_expansion* raw = nullptr;
  check(bcf_expand(c.d, c.z.c_str(), c.N, &raw));
  Handle<bcf_expansion, bcf_expansion_free> e(raw);
  const std::size_t n = bcf_expansion_size(e.get());
  std::ofstream file;
  std::ostream* os = &std::cout;
  if (!c.out.empty()) {
    file = open_out(c.out);
    os = &file;
  }
  bool all_ok = true;
  if (c.format == "json") {
    ordered_json doc;
    doc["config"] = config_echo(c);
    doc["z"] = c.z;
    doc["exact"] = bcf_expansion_is_exact(e.get()) == 1;
    doc["terminated"] = bcf_expansion_terminated(e.get()) == 1;
    doc["rows"] = ordered_json::array();
    for (std::size_t i = 1; i <= n; ++i) {
      bcf_expansion_row row{};
      check(bcf_expansion_row_at(e.get(), i, &row));
      CString a, p, q;
      check(bcf_expansion_strings(e.get(), i, &a.p, &p.p, &q.p));
      all_ok = all_ok && row.determinant_ok;
      doc["rows"].push_back(
          {{"n", i}, {"a_n", a.str()}, {"p_n", p.str()}, {"q_n", q.str()}, {"abs_iterate", row.abs_iterate},
           {"determinant_ok", row.determinant_ok == 1}});
    }
    *os << doc.dump(2) << '\n';
  } else {
    CsvWriter w(*os);
    w.row({"n", "a_n", "p_n", "q_n", "abs_iterate", "determinant_ok"});
    for (std::size_t i = 1; i <= n; ++i) {
      bcf_expansion_row row{};
      check(bcf_expansion_row_at(e.get(), i, &row));
      CString a, p, q;
      check(bcf_expansion_strings(e.get(), i, &a.p, &p.p, &q.p));
      all_ok = all_ok && row.determinant_ok;
      w.row({std::to_string(i), a.str(), p.str(), q.str(), fmt(row.abs_iterate), row.determinant_ok ? "1" : "0"});
    }
  }
  if (file.is_open()) finish(file, c.out);
  std::cerr << "determinant identity: " << (all_ok ? "holds on every row" : "FAILS on some row") << '\n';
  return all_ok ? kExitOk : kExitRuntime;
}

int cmd_frechet(const Config& c) {
  const fs::path dir = out_dir(c);
  bcf_frechet_config fc{c.d, c.N, c.M, c.L, c.seed, c.bits, c.k, c.threads};
  bcf_frechet* raw = nullptr;
  check(bcf_frechet_run(&fc, &raw));
  Handle<bcf_frechet, bcf_frechet_free> f(raw);
  bcf_frechet_summary s{};
  check(bcf_frechet_get_summary(f.get(), &s));

  const fs::path csv = dir / "maxima.csv";
  std::ofstream out = open_out(csv);
  CsvWriter w(out);
  w.row({"sample_id", "max_abs_digit", "k2_abs_digit"});
  for (std::size_t i = 0; i < bcf_frechet_count(f.get()); ++i) {
    double m1 = 0, m2 = 0;
    check(bcf_frechet_sample(f.get(), i, &m1, &m2));
    w.row({std::to_string(i), fmt(m1), fmt(m2)});
  }
  finish(out, csv);

  ordered_json j;
  j["d"] = c.d;
  j["N"] = c.N;
  j["M"] = c.M;
  j["seed"] = c.seed;
  j["H_hat"] = s.H_hat;
  j["C_hat"] = s.C_hat;
  j["ks_distance"] = s.ks_distance;
  j["ks_poisson_k2"] = s.ks_poisson_k2;
  j["H_stderr"] = s.H_stderr;
  j["k"] = c.k;
  j["ks_poisson_k"] = s.ks_poisson_k;
  j["fitted_scale"] = s.fitted_scale;
  j["ks_fitted"] = s.ks_fitted;
  j["ks_inverse_scale"] = s.ks_inverse_scale;
  j["median_max"] = s.median_max;
  j["tail_flat"] = s.tail_flat == 1;
  j["resampled"] = s.resampled;
  j["effective_bits"] = s.bits;
  j["config"] = config_echo(c);
  write_json(dir / "fit.json", j);

  Tolerances tol(c.strict);
  tol.require(s.ks_distance < c.ks_tol, "frechet ks_distance " + fmt(s.ks_distance) + " >= " + fmt(c.ks_tol));
  tol.require(std::abs(s.fitted_scale / s.C_hat - 1) < 0.10, "fitted scale and sqrt(H_hat) differ by 10% or more");
  return tol.code();
}

int cmd_excursions(const Config& c) {
  const fs::path dir = out_dir(c);
  bcf_excursions_config xc{c.d, c.N, c.M, c.seed, c.bits, c.threads};
  bcf_excursions* raw = nullptr;
  check(bcf_excursions_run(&xc, &raw));
  Handle<bcf_excursions, bcf_excursions_free> x(raw);
  bcf_excursions_summary s{};
  check(bcf_excursions_get_summary(x.get(), &s));

  const fs::path csv = dir / "trace.csv";
  std::ofstream out = open_out(csv);
  CsvWriter w(out);
  w.row({"sample_id", "n", "t_n", "t_star_n", "apex_height", "log_norm_q", "lemma51_defect"});
  for (std::size_t i = 0; i < c.M; ++i) {
    for (std::size_t r = 0; r < c.N; ++r) {
      bcf_excursion_row row{};
      check(bcf_excursions_row_at(x.get(), i, r, &row));
      w.row({std::to_string(i), std::to_string(row.n), fmt(row.t_n), fmt(row.t_star_n), fmt(row.apex_height),
             fmt(row.log_norm_q), fmt(row.lemma51_defect)});
    }
  }
  finish(out, csv);

  ordered_json j;
  j["C_star"] = s.c_star;
  j["stderr"] = s.stderr_c_star;
  j["cross_estimator"] = s.cross_estimator;
  j["agreement_flag"] = s.agreement == 1;
  j["stderr_cross"] = s.stderr_cross;
  j["birkhoff_estimator"] = s.birkhoff;
  j["stderr_birkhoff"] = s.stderr_birkhoff;
  j["birkhoff_agreement_flag"] = s.birkhoff_agreement == 1;
  j["lemma51_defect_max"] = s.defect_max;
  j["lemma51_defect_bound"] = c.defect_bound;
  j["resampled"] = s.resampled;
  j["config"] = config_echo(c);
  write_json(dir / "cstar.json", j);

  Tolerances tol(c.strict);
  tol.require(s.agreement == 1, "t*_N / N and 2 log|q_N| / N disagree beyond 3 standard errors");
  tol.require(std::isfinite(s.defect_max) && s.defect_max < c.defect_bound,
              "lemma51 defect " + fmt(s.defect_max) + " exceeds bound " + fmt(c.defect_bound));
  return tol.code();
}

int cmd_theorem2(const Config& c) {
  const fs::path dir = out_dir(c);
  bcf_theorem2_config tc{c.d, c.T, c.M, c.seed, c.C, c.L, c.bits, c.threads, c.direct_count, c.direct_T, c.dt};
  bcf_theorem2_summary s{};
  check(bcf_theorem2_run(&tc, &s));
  ordered_json j;
  j["alpha_hat"] = s.alpha_hat;
  j["ks_distance"] = s.ks_distance;
  j["alpha_fitted"] = s.alpha_fitted;
  j["ks_fitted"] = s.ks_fitted;
  j["ks_T_vs_4T"] = s.ks_T_vs_4T;
  j["C_star"] = s.c_star;
  j["C_d"] = s.C_d;
  j["C_d_given"] = c.C > 0;
  j["direct_count"] = c.direct_count;
  j["direct_T"] = c.direct_T;
  j["direct_dt"] = c.dt;
  j["direct_p95_abs_gap"] = s.direct_p95_gap;
  j["direct_max_abs_gap"] = s.direct_max_gap;
  j["direct_capped"] = s.direct_capped;
  j["resampled"] = s.resampled;
  j["config"] = config_echo(c);
  write_json(dir / "thm2.json", j);

  Tolerances tol(c.strict);
  tol.require(std::abs(s.alpha_hat - s.alpha_fitted) < c.alpha_tol, "alpha_hat and fitted alpha differ by " +
                                                                         fmt(std::abs(s.alpha_hat - s.alpha_fitted)));
  tol.require(s.ks_T_vs_4T < c.ks_tol, "statistic moves under T -> 4T (KS " + fmt(s.ks_T_vs_4T) + ")");
  if (c.direct_count > 0) {
    tol.require(s.direct_p95_gap < c.gap_tol, "direct vs proxy gap p95 " + fmt(s.direct_p95_gap));
  }
  return tol.code();
}

int cmd_galambos(const Config& c) {
  const fs::path dir = out_dir(c);
  bcf_galambos_config gc{c.N, c.M, c.seed, c.bits, c.threads};
  bcf_galambos_summary s{};
  check(bcf_galambos_run(&gc, &s));
  ordered_json j;
  j["N"] = c.N;
  j["M"] = c.M;
  j["seed"] = c.seed;
  j["ks_distance"] = s.ks_distance;
  j["p_first_digit_one"] = s.p_first_digit_one;
  j["sampler_chi2"] = s.sampler_chi2;
  j["resampled"] = s.resampled;
  j["config"] = config_echo(c);
  write_json(dir / "galambos.json", j);
  Tolerances tol(c.strict);
  tol.require(s.ks_distance < c.ks_tol, "galambos ks_distance " + fmt(s.ks_distance));
  return tol.code();
}

int cmd_tail(const Config& c) {
  const fs::path dir = out_dir(c);
  bcf_tail_config tc{c.d, c.L, c.seed, c.threads, 0, nullptr, 0, c.d == 1 ? 1000000u : 0u, 200.0};
  bcf_tail* raw = nullptr;
  check(bcf_tail_run(&tc, &raw));
  Handle<bcf_tail, bcf_tail_free> t(raw);
  bcf_tail_summary s{};
  check(bcf_tail_get_summary(t.get(), &s));
  ordered_json j;
  j["d"] = c.d;
  j["L"] = c.L;
  j["seed"] = c.seed;
  j["H_hat"] = s.H_hat;
  j["H_stderr"] = s.H_stderr;
  j["plateau_spread"] = s.plateau_spread;
  j["flat"] = s.flat == 1;
  j["warning"] = bcf_tail_warning(t.get());
  j["chunks"] = s.chunks;
  j["restarts"] = s.restarts;
  ordered_json th = ordered_json::array();
  ordered_json fr = ordered_json::array();
  ordered_json sc = ordered_json::array();
  for (std::size_t i = 0; i < bcf_tail_threshold_count(t.get()); ++i) {
    double a = 0, b = 0, cc = 0;
    check(bcf_tail_threshold_at(t.get(), i, &a, &b, &cc));
    th.push_back(a);
    fr.push_back(b);
    sc.push_back(cc);
  }
  j["thresholds"] = th;
  j["tail_freq"] = fr;
  j["scaled"] = sc;
  if (c.d == 1) {
    j["lebesgue_t"] = tc.lebesgue_t;
    j["lebesgue_scaled"] = s.lebesgue_scaled;
    j["lebesgue_stderr"] = s.lebesgue_stderr;
  }
  j["config"] = config_echo(c);
  write_json(dir / "tail.json", j);
  if (!s.flat) std::cerr << "warning: " << bcf_tail_warning(t.get()) << '\n';
  Tolerances tol(c.strict);
  tol.require(s.plateau_spread < c.spread_tol, "plateau spread " + fmt(s.plateau_spread));
  if (c.d == 1) {
    tol.require(std::abs(s.lebesgue_scaled / std::numbers::pi - 1) < 0.05, "Lebesgue tail " + fmt(s.lebesgue_scaled) + " is not near pi");
  }
  return tol.code();
}

int cmd_identities(const Config& c) {
  const fs::path dir = out_dir(c);
  ordered_json j;
  j["d"] = c.d;
  std::uint64_t failures = 0;
  auto dump = [&](bcf_suite* raw, const char* key) {
    Handle<bcf_suite, bcf_suite_free> s(raw);
    ordered_json arr = ordered_json::array();
    for (std::size_t i = 0; i < bcf_suite_check_count(s.get()); ++i) {
      bcf_check chk{};
      check(bcf_suite_check_at(s.get(), i, &chk));
      failures += chk.failures;
      arr.push_back({{"name", chk.name}, {"trials", chk.trials}, {"failures", chk.failures}, {"worst", chk.worst}});
    }
    j[key] = arr;
  };
  bcf_suite* raw = nullptr;
  check(bcf_identity_suite(c.d, c.M, c.bits, c.N, c.seed, c.threads, &raw));
  dump(raw, "identities");
  raw = nullptr;
  check(bcf_geometry_suite(c.d, c.L, c.seed, c.threads, &raw));
  dump(raw, "geometry");
  j["failures"] = failures;
  j["config"] = config_echo(c);
  write_json(dir / "identities.json", j);
  Tolerances tol(c.strict);
  tol.require(failures == 0, std::to_string(failures) + " identity or geometry checks failed");
  return tol.code();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Nearest-integer complex continued fractions over imaginary quadratic rings"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(bcf_version()));

  // One config per subcommand, so that defaults do not leak between them.
  std::deque<Config> configs;
  Config* chosen = nullptr;
  struct Defaults {
    std::uint64_t N, M, L;
    double T;
    unsigned bits;
  };
  auto add = [&](const std::string& name, const std::string& help, Defaults def) {
    CLI::App* s = app.add_subcommand(name, help);
    Config& c = configs.emplace_back();
    s->add_option("--d", c.d, "discriminant: 1, 2, 3, 7 or 11")->check(CLI::IsMember({1, 2, 3, 7, 11}))->capture_default_str();
    s->add_option("--N", c.N, "digits per expansion")->check(CLI::PositiveNumber)->default_val(def.N);
    s->add_option("--M", c.M, "number of samples")->check(CLI::PositiveNumber)->default_val(def.M);
    s->add_option("--T", c.T, "geodesic time horizon")->check(CLI::PositiveNumber)->default_val(def.T);
    s->add_option("--L", c.L, "orbit length")->check(CLI::PositiveNumber)->default_val(def.L);
    s->add_option("--seed", c.seed, "64-bit seed")->capture_default_str();
    s->add_option("--bits", c.bits, "coordinate bits of random betas (0: automatic)")->default_val(def.bits);
    s->add_option("--k", c.k, "order of the k-th maximum")->check(CLI::Range(1u, 64u))->capture_default_str();
    s->add_option("--out", c.out, "output directory (file for expand)");
    s->add_option("--format", c.format, "csv or json")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
    s->add_flag("--strict", c.strict, "exit with status 4 when a tolerance check fails");
    s->add_option("--threads", c.threads, "worker threads (0: all cores)")->capture_default_str();
    s->add_option("--ks-tol", c.ks_tol, "KS tolerance")->capture_default_str();
    s->callback([&c, &chosen, name] {
      c.command = name;
      chosen = &c;
    });
    return s;
  };

  CLI::App* expand = add("expand", "digits and convergents of one point", {100, 1, 1, 1, 0});
  expand->add_option("--z", configs.back().z, "point, e.g. 3/10+1/5i")->required();
  add("frechet", "maxima of digit moduli against the Frechet law", {1000, 10000, 1000000, 1, 0});
  CLI::App* exc = add("excursions", "intersection and excursion times, C* estimators", {1000, 200, 1, 1, 0});
  exc->add_option("--defect-bound", configs.back().defect_bound, "bound on the lemma51 defect")->capture_default_str();
  CLI::App* thm = add("theorem2", "cusp excursion maxima against the Frechet law", {1, 10000, 1000000, 1000, 0});
  thm->add_option("--C", configs.back().C, "Frechet scale C_d (default: sqrt of the estimated tail constant)");
  thm->add_option("--direct-count", configs.back().direct_count, "geodesics for the direct check")->capture_default_str();
  thm->add_option("--direct-T", configs.back().direct_T, "time horizon of the direct check")->capture_default_str();
  thm->add_option("--dt", configs.back().dt, "time step of the direct check")->check(CLI::PositiveNumber)->capture_default_str();
  thm->add_option("--alpha-tol", configs.back().alpha_tol, "tolerance on alpha_hat - alpha_fitted")->capture_default_str();
  thm->add_option("--gap-tol", configs.back().gap_tol, "tolerance on the p95 direct gap")->capture_default_str();
  add("galambos", "regular continued fraction baseline", {10000, 10000, 1, 1, 0});
  CLI::App* tail = add("tail", "tail constant of the digit distribution", {1, 1, 10000000, 1, 0});
  tail->add_option("--spread-tol", configs.back().spread_tol, "tolerance on the plateau spread")->capture_default_str();
  add("identities", "exact identity and geometry suites (N: digits, M: betas, L: geometry draws)",
      {200, 1000, 10000, 1, 256});

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitArgs;
  }

  if (!chosen) return kExitArgs;
  const Config& c = *chosen;
  try {
    if (c.command == "expand") return cmd_expand(c);
    if (c.command == "frechet") return cmd_frechet(c);
    if (c.command == "excursions") return cmd_excursions(c);
    if (c.command == "theorem2") return cmd_theorem2(c);
    if (c.command == "galambos") return cmd_galambos(c);
    if (c.command == "tail") return cmd_tail(c);
    if (c.command == "identities") return cmd_identities(c);
  } catch (const Failure& f) {
    std::cerr << "error: " << f.what() << '\n';
    return f.code();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitArgs;
}
