// C interface and command-line tests. Links only the shared C library.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

#include "json.hpp"

#include "bianchi_cf.h"

namespace fs = std::filesystem;

namespace {

const std::string kCli = BCF_CLI_PATH;

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("bcf_cli_test_" + std::to_string(::getpid())) / name;
  fs::remove_all(p);
  fs::create_directories(p.parent_path());
  return p;
}

struct RunResult {
  int code;
  std::string out;
};

RunResult run(const std::string& args) {
  const fs::path capture = scratch("stdout.txt");
  const std::string cmd = kCli + " " + args + " > " + capture.string() + " 2>/dev/null";
  const int status = std::system(cmd.c_str());
  std::ifstream f(capture, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, ss.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  REQUIRE(f.good());
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

// Minimal RFC 4180 reader (no embedded line breaks needed here).
std::vector<std::vector<std::string>> read_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find("\r\n", pos);
    REQUIRE(end != std::string::npos);
    const std::string line = text.substr(pos, end - pos);
    pos = end + 2;
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      const char c = line[i];
      if (quoted) {
        if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else if (c == '"') {
          quoted = false;
        } else {
          cur += c;
        }
      } else if (c == '"') {
        quoted = true;
      } else if (c == ',') {
        fields.push_back(cur);
        cur.clear();
      } else {
        cur += c;
      }
    }
    fields.push_back(cur);
    rows.push_back(fields);
  }
  return rows;
}

double to_double(const std::string& s) {
  double v = 0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  REQUIRE(r.ec == std::errc());
  REQUIRE(r.ptr == s.data() + s.size());
  return v;
}

}  // namespace

TEST_CASE("status codes and errors through the C interface") {
  CHECK(std::string(bcf_version()).size() > 0);
  CHECK(bcf_supported_d(7) == 1);
  CHECK(bcf_supported_d(5) == 0);
  bcf_expansion* e = nullptr;
  CHECK(bcf_expand(5, "0", 10, &e) == BCF_INVALID_ARGUMENT);
  CHECK(e == nullptr);
  CHECK(std::string(bcf_last_error()).find("d must be") != std::string::npos);
  CHECK(bcf_expand(1, "7+0i", 10, &e) == BCF_PRECONDITION);
  CHECK(bcf_expand(1, "1/3+", 10, &e) == BCF_INVALID_ARGUMENT);
  CHECK(bcf_expand(1, nullptr, 10, &e) == BCF_INVALID_ARGUMENT);
  CHECK(bcf_expand(1, "0", 10, nullptr) == BCF_INVALID_ARGUMENT);
  CHECK(std::string(bcf_status_name(BCF_NOT_CONVERGED)) == "not converged");

  REQUIRE(bcf_expand(1, "3/10+1/5i", 10, &e) == BCF_OK);
  CHECK(std::string(bcf_last_error()).empty());
  CHECK(bcf_expansion_size(e) == 3);
  CHECK(bcf_expansion_terminated(e) == 1);
  CHECK(bcf_expansion_is_exact(e) == 1);
  bcf_expansion_row row{};
  CHECK(bcf_expansion_row_at(e, 0, &row) == BCF_INVALID_ARGUMENT);
  CHECK(bcf_expansion_row_at(e, 4, &row) == BCF_INVALID_ARGUMENT);
  REQUIRE(bcf_expansion_row_at(e, 3, &row) == BCF_OK);
  CHECK(row.determinant_ok == 1);
  CHECK(row.abs_iterate == 0.0);
  char* a = nullptr;
  char* p = nullptr;
  char* q = nullptr;
  REQUIRE(bcf_expansion_strings(e, 3, &a, &p, &q) == BCF_OK);
  CHECK(std::string(a) == "2i");
  CHECK(std::string(p) == "3+2i");
  CHECK(std::string(q) == "10");
  bcf_string_free(a);
  bcf_string_free(p);
  bcf_string_free(q);
  REQUIRE(bcf_expansion_strings(e, 1, &a, nullptr, nullptr) == BCF_OK);
  CHECK(std::string(a) == "2-2i");
  bcf_string_free(a);
  bcf_expansion_free(e);
  bcf_expansion_free(nullptr);
  CHECK(bcf_expansion_size(nullptr) == 0);

  REQUIRE(bcf_expand(3, "0.1+0.2i", 60, &e) == BCF_OK);
  CHECK(bcf_expansion_is_exact(e) == 0);
  bcf_expansion_free(e);
}

TEST_CASE("experiment handles through the C interface") {
  bcf_frechet_config fc{1, 100, 40, 20000, 3, 0, 3, 2};
  bcf_frechet* f = nullptr;
  REQUIRE(bcf_frechet_run(&fc, &f) == BCF_OK);
  bcf_frechet_summary s{};
  REQUIRE(bcf_frechet_get_summary(f, &s) == BCF_OK);
  CHECK(s.C_hat == doctest::Approx(std::sqrt(s.H_hat)));
  CHECK(bcf_frechet_count(f) == 40);
  double m1 = 0, m2 = 0;
  REQUIRE(bcf_frechet_sample(f, 39, &m1, &m2) == BCF_OK);
  CHECK(m1 >= m2);
  CHECK(bcf_frechet_sample(f, 40, &m1, &m2) == BCF_INVALID_ARGUMENT);
  bcf_frechet_free(f);

  fc.d = 4;
  CHECK(bcf_frechet_run(&fc, &f) == BCF_INVALID_ARGUMENT);
  fc.d = 1;
  fc.N = 0;
  CHECK(bcf_frechet_run(&fc, &f) == BCF_INVALID_ARGUMENT);

  bcf_excursions_config xc{3, 50, 5, 1, 0, 1};
  bcf_excursions* x = nullptr;
  REQUIRE(bcf_excursions_run(&xc, &x) == BCF_OK);
  bcf_excursion_row r{};
  REQUIRE(bcf_excursions_row_at(x, 4, 49, &r) == BCF_OK);
  CHECK(r.n == 50);
  CHECK(r.t_star_n >= r.t_n);
  CHECK(bcf_excursions_row_at(x, 5, 0, &r) == BCF_INVALID_ARGUMENT);
  bcf_excursions_free(x);

  bcf_theorem2_config tc{1, 20, 30, 1, 0, 0, 0, 1, 0, 0, 0.02};
  bcf_theorem2_summary ts{};
  CHECK(bcf_theorem2_run(&tc, &ts) == BCF_INVALID_ARGUMENT);  // no C_d and no tail length
  tc.C_d = 1.9;
  REQUIRE(bcf_theorem2_run(&tc, &ts) == BCF_OK);
  CHECK(std::isnan(ts.direct_p95_gap));

  const double th[] = {2.0, 4.0};
  bcf_tail_config tl{2, 10000, 1, 1, 512, th, 2, 0, 0};
  bcf_tail* t = nullptr;
  REQUIRE(bcf_tail_run(&tl, &t) == BCF_OK);
  CHECK(bcf_tail_threshold_count(t) == 2);
  double thr = 0, fr = 0, sc = 0;
  REQUIRE(bcf_tail_threshold_at(t, 1, &thr, &fr, &sc) == BCF_OK);
  CHECK(thr == 4.0);
  CHECK(sc == doctest::Approx(16 * fr));
  bcf_tail_free(t);

  bcf_suite* su = nullptr;
  REQUIRE(bcf_identity_suite(7, 5, 128, 50, 1, 1, &su) == BCF_OK);
  REQUIRE(bcf_suite_check_count(su) == 8);
  for (std::size_t i = 0; i < 8; ++i) {
    bcf_check c{};
    REQUIRE(bcf_suite_check_at(su, i, &c) == BCF_OK);
    CHECK(c.failures == 0);
  }
  bcf_suite_free(su);
}

TEST_CASE("expand command") {
  RunResult r = run("expand --d 1 --z 3/10+1/5i");
  CHECK(r.code == 0);
  const auto rows = read_csv(r.out);
  REQUIRE(rows.size() == 4);
  CHECK(rows[0] == std::vector<std::string>{"n", "a_n", "p_n", "q_n", "abs_iterate", "determinant_ok"});
  CHECK(rows[3][2] == "3+2i");
  CHECK(rows[3][3] == "10");
  for (std::size_t i = 1; i < rows.size(); ++i) CHECK(rows[i][5] == "1");

  r = run("expand --d 1 --z 0");
  CHECK(r.code == 0);
  CHECK(read_csv(r.out).size() == 1);

  CHECK(run("expand --d 1 --z 7+0i").code == 3);
  CHECK(run("expand --d 5 --z 0").code == 2);
  CHECK(run("expand --d 1").code == 2);
  CHECK(run("frechet --bogus").code == 2);
  CHECK(run("").code == 2);

  r = run("expand --d 3 --z 1/7+1/9w --format json");
  CHECK(r.code == 0);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j["exact"] == true);
  CHECK(j["rows"].size() > 0);
  CHECK(j["config"]["d"] == 3);
}

TEST_CASE("outputs are byte-identical across thread counts") {
  const fs::path a = scratch("a");
  const fs::path b = scratch("b");
  const std::string common[] = {
      "frechet --N 150 --M 60 --L 30000 --seed 9",
      "excursions --N 80 --M 12 --seed 9",
      "theorem2 --T 40 --M 60 --C 1.9 --direct-count 2 --direct-T 15 --seed 9",
      "galambos --N 300 --M 80 --seed 9",
      "tail --d 3 --L 60000 --seed 9",
      "identities --d 2 --M 10 --L 100 --N 60 --seed 9",
  };
  for (const std::string& args : common) {
    CHECK(run(args + " --threads 1 --out " + a.string()).code == 0);
    CHECK(run(args + " --threads 3 --out " + b.string()).code == 0);
  }
  for (const char* name : {"maxima.csv", "fit.json", "trace.csv", "cstar.json", "thm2.json", "galambos.json",
                           "tail.json", "identities.json"}) {
    INFO(name);
    CHECK(slurp(a / name) == slurp(b / name));
  }
  // A rerun with the same seed reproduces the files; another seed does not.
  CHECK(run(common[0] + " --out " + b.string()).code == 0);
  CHECK(slurp(a / "maxima.csv") == slurp(b / "maxima.csv"));
  CHECK(run("frechet --N 150 --M 60 --L 30000 --seed 10 --out " + b.string()).code == 0);
  CHECK(slurp(a / "maxima.csv") != slurp(b / "maxima.csv"));

  SUBCASE("file contents") {
    const auto fit = nlohmann::json::parse(slurp(a / "fit.json"));
    for (const char* key : {"d", "N", "M", "seed", "H_hat", "C_hat", "ks_distance", "ks_poisson_k2"}) {
      CHECK(fit.contains(key));
    }
    CHECK(fit["config"]["tool_version"] == bcf_version());
    CHECK(fit["config"]["seed"] == 9);
    const auto thm = nlohmann::json::parse(slurp(a / "thm2.json"));
    CHECK(thm.contains("alpha_hat"));
    CHECK(thm.contains("ks_distance"));
    const auto cs = nlohmann::json::parse(slurp(a / "cstar.json"));
    for (const char* key : {"C_star", "stderr", "cross_estimator", "agreement_flag"}) CHECK(cs.contains(key));
    CHECK(cs["lemma51_defect_max"].get<double>() < cs["lemma51_defect_bound"].get<double>());
    const auto ids = nlohmann::json::parse(slurp(a / "identities.json"));
    CHECK(ids["failures"] == 0);

    const auto trace = read_csv(slurp(a / "trace.csv"));
    REQUIRE(trace.size() == 1 + 80 * 12);
    CHECK(trace[0] ==
          std::vector<std::string>{"sample_id", "n", "t_n", "t_star_n", "apex_height", "log_norm_q", "lemma51_defect"});
    for (std::size_t i = 2; i < trace.size(); ++i) {
      if (trace[i][0] == trace[i - 1][0]) CHECK(to_double(trace[i][3]) >= to_double(trace[i - 1][3]));
    }
    const auto maxima = read_csv(slurp(a / "maxima.csv"));
    REQUIRE(maxima.size() == 61);
    CHECK(maxima[0] == std::vector<std::string>{"sample_id", "max_abs_digit", "k2_abs_digit"});
  }
}

TEST_CASE("CSV values round-trip exactly") {
  const fs::path dir = scratch("rt");
  REQUIRE(run("frechet --N 120 --M 30 --L 20000 --seed 4 --out " + dir.string()).code == 0);
  bcf_frechet_config fc{1, 120, 30, 20000, 4, 0, 2, 1};
  bcf_frechet* f = nullptr;
  REQUIRE(bcf_frechet_run(&fc, &f) == BCF_OK);
  const auto rows = read_csv(slurp(dir / "maxima.csv"));
  REQUIRE(rows.size() == 31);
  for (std::size_t i = 0; i < 30; ++i) {
    double m1 = 0, m2 = 0;
    REQUIRE(bcf_frechet_sample(f, i, &m1, &m2) == BCF_OK);
    CHECK(std::stoul(rows[i + 1][0]) == i);
    CHECK(to_double(rows[i + 1][1]) == m1);
    CHECK(to_double(rows[i + 1][2]) == m2);
  }
  bcf_frechet_free(f);
}

TEST_CASE("strict mode turns tolerance failures into exit status 4") {
  const fs::path dir = scratch("strict");
  CHECK(run("galambos --N 200 --M 50 --ks-tol 0 --out " + dir.string()).code == 0);
  CHECK(run("galambos --N 200 --M 50 --ks-tol 0 --strict --out " + dir.string()).code == 4);
  CHECK(run("galambos --N 200 --M 50 --ks-tol 1 --strict --out " + dir.string()).code == 0);
  CHECK(run("tail --d 2 --L 20000 --spread-tol 0 --strict --out " + dir.string()).code == 4);
}

TEST_CASE("unwritable output is reported") {
  const fs::path dir = scratch("blocked");
  { std::ofstream(dir.string()) << "file in the way"; }
  CHECK(run("galambos --N 50 --M 10 --out " + (dir / "sub").string()).code == 1);
}
