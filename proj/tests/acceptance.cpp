// Acceptance run. One PASS/FAIL line per criterion; exit status 1 if any fail.
// Usage: acceptance [criterion ...]   (default: all of 1..9)

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <unistd.h>

#include "bianchi/error.hpp"
#include "bianchi/evt.hpp"
#include "bianchi/excursion.hpp"
#include "bianchi/extended.hpp"
#include "bianchi/hyperbolic.hpp"
#include "bianchi/suites.hpp"

using namespace bianchi;
namespace fs = std::filesystem;

namespace {

// Pinned sizes and tolerances.
constexpr int kDs[] = {1, 2, 3, 7, 11};
constexpr std::uint64_t kSeed = 20240611;

constexpr std::size_t kIdentityBetas = 1000;
constexpr unsigned kIdentityBits = 256;
constexpr std::size_t kIdentityMaxN = 200;

constexpr std::size_t kGeometryLifts = 10000;

constexpr std::size_t kBisectionPairs = 100;
constexpr double kBisectionTol = 1e-8;
constexpr double kDefectStabilityTol = 0.10;

constexpr std::size_t kGalambosN = 10000;
constexpr std::size_t kGalambosM = 10000;
constexpr double kGalambosKs = 0.05;

constexpr std::size_t kFrechetN = 1000;
constexpr std::size_t kFrechetM = 10000;
constexpr double kFrechetKs = 0.05;
constexpr double kMedianRatioTol = 0.15;
constexpr double kFittedScaleTol = 0.10;

constexpr std::size_t kTailLength = 10000000;
constexpr double kTailSpread = 0.10;
constexpr double kLebesgueT = 200;
constexpr std::size_t kLebesgueDraws = 1000000;
constexpr double kLebesgueTol = 0.05;

constexpr std::size_t kCStarBetas = 1000;
constexpr std::size_t kCStarN = 1000;
constexpr double kCStarSigmas = 3.0;

constexpr double kThm2T = 1000;
constexpr std::size_t kThm2M = 10000;
constexpr std::size_t kDirectCount = 100;
constexpr double kDirectT = 200;
constexpr double kDirectDt = 0.02;
constexpr double kAlphaTol = 0.1;
constexpr double kThm2Ks = 0.05;
constexpr double kDirectGapP95 = 2.0;

const unsigned kThreads = std::max(1u, std::thread::hardware_concurrency());

struct Verdict {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [violated: " << what << "]";
    }
  }
};

std::string fmt(double x, int prec = 4) {
  std::ostringstream s;
  s.precision(prec);
  s << x;
  return s.str();
}

// ---------------------------------------------------------------------------
// Shared runs

const TailEstimate& tail_for(int d) {
  static std::map<int, TailEstimate> cache;
  auto it = cache.find(d);
  if (it == cache.end()) {
    TailOptions opt;
    opt.threads = kThreads;
    it = cache.emplace(d, estimate_tail_constant(Discriminant(d), kTailLength, default_thresholds(), kSeed + d, opt))
             .first;
  }
  return it->second;
}

struct ExcursionSummary {
  CStarEstimate cstar;
  double sup_half = 0;  // sup of the defect over n <= N/2
  double sup_full = 0;  // over n <= N
  std::size_t resampled = 0;
};

const ExcursionSummary& excursions_for(int d) {
  static std::map<int, ExcursionSummary> cache;
  auto it = cache.find(d);
  if (it == cache.end()) {
    ExcursionSummary s;
    const auto traces =
        excursion_batch(Discriminant(d), kCStarN, kCStarBetas, kSeed + 100 + d, 0, kThreads, &s.resampled);
    s.cstar = cstar_estimate(traces, kCStarN);
    for (const auto& tr : traces) {
      for (const auto& r : tr.records) {
        const double v = r.lemma51_defect;
        s.sup_full = std::max(s.sup_full, v);
        if (r.n <= kCStarN / 2) s.sup_half = std::max(s.sup_half, v);
      }
    }
    it = cache.emplace(d, s).first;
  }
  return it->second;
}

// ---------------------------------------------------------------------------
// Criteria

Verdict exact_identities() {
  Verdict v;
  for (int d : kDs) {
    const SuiteReport r = identity_suite(Discriminant(d), kIdentityBetas, kIdentityBits, kIdentityMaxN, kSeed + d,
                                         kThreads);
    std::size_t trials = 0;
    for (const auto& c : r.checks) {
      trials += c.trials;
      v.require(c.failures == 0, "d=" + std::to_string(d) + " " + c.name + " failures=" +
                                     std::to_string(c.failures));
    }
    v.detail << " d=" << d << ":" << r.checks.size() << " checks/" << trials << " trials/" << r.failures()
             << " failures";
  }
  return v;
}

Verdict geometry() {
  Verdict v;
  for (int d : kDs) {
    const SuiteReport r = geometry_suite(Discriminant(d), kGeometryLifts, kSeed + 10 + d, kThreads);
    v.detail << " d=" << d << ":";
    for (const auto& c : r.checks) {
      v.require(c.failures == 0, "d=" + std::to_string(d) + " " + c.name + " failures=" +
                                     std::to_string(c.failures));
      v.detail << " " << c.name << "<=" << fmt(c.worst, 2);
    }
  }
  return v;
}

// Crossing time of beta + e^{-t} j with P^{-1} H(0), by bisection on the sign
// of |z'|^2 + r'^2 - 1 at the image under P, in 2048-bit arithmetic.
double bisect_intersection(const Expansion& e, std::size_t n) {
  PrecisionScope scope(2048);
  const MobiusMap P = p_matrix(e, n);
  const auto [bx, by] = embed_as<ExtReal>(e.exact_beta());
  auto f = [&](double t) {
    const BasicH3Point<ExtReal> p{bx, by, exp(ExtReal(-t))};
    const BasicH3Point<ExtReal> q = act(P, p);
    return (q.x * q.x + q.y * q.y + q.r * q.r - 1).convert_to<double>();
  };
  double lo = -5.0;
  double hi = 5.0;
  while (f(lo) < 0) lo -= 10;
  while (f(hi) > 0) hi += 10;
  for (int i = 0; i < 300 && hi - lo > 1e-13; ++i) {
    const double mid = (lo + hi) / 2;
    (f(mid) > 0 ? lo : hi) = mid;
  }
  return (lo + hi) / 2;
}

Verdict intersection_oracle() {
  Verdict v;
  const std::size_t ns[] = {1, 2, 7, 30, 100};
  std::size_t pairs = 0;
  double worst = 0;
  std::uint64_t index = 0;
  for (int d : kDs) {
    const Discriminant D(d);
    for (std::size_t b = 0; b < kBisectionPairs / (5 * std::size(ns)); ++b) {
      Expansion e = expand(FieldElement(D), 0);
      do {
        Rng rng = sample_rng(kSeed, 20, index++);
        e = expand(sample_exact_cell(D, 400, rng), 120);
      } while (e.size() < 100);
      for (std::size_t n : ns) {
        worst = std::max(worst, std::abs(intersection_time(e, n) - bisect_intersection(e, n)));
        ++pairs;
      }
    }
  }
  v.require(pairs == kBisectionPairs, "pair count");
  v.require(worst < kBisectionTol, "max |closed - bisection| < " + fmt(kBisectionTol));
  v.detail << " pairs=" << pairs << " max_abs_diff=" << fmt(worst, 3) << ";";
  for (int d : kDs) {
    const ExcursionSummary& s = excursions_for(d);
    const double rel = std::abs(s.sup_full / s.sup_half - 1);
    v.require(rel <= kDefectStabilityTol, "d=" + std::to_string(d) + " defect sup change " + fmt(rel));
    v.detail << " d=" << d << ":sup(n<=" << kCStarN / 2 << ")=" << fmt(s.sup_half)
             << ",sup(n<=" << kCStarN << ")=" << fmt(s.sup_full);
  }
  return v;
}

Verdict galambos() {
  Verdict v;
  const GalambosResult g = galambos_baseline(kGalambosN, kGalambosM, kSeed + 30, 0, kThreads);
  v.require(g.fit.ks_distance < kGalambosKs, "KS < " + fmt(kGalambosKs));
  v.detail << " N=" << g.N << " M=" << g.M << " KS=" << fmt(g.fit.ks_distance) << " P(a1=1)=" << fmt(g.p_first_digit_one)
           << " sampler_chi2=" << fmt(g.sampler_chi2);
  return v;
}

double median(std::vector<double> x) {
  std::sort(x.begin(), x.end());
  const std::size_t m = x.size() / 2;
  return x.size() % 2 ? x[m] : (x[m - 1] + x[m]) / 2;
}

Verdict frechet(std::vector<std::string>& info) {
  Verdict v;
  for (int d : kDs) {
    const Discriminant D(d);
    const TailEstimate& tail = tail_for(d);
    const double C = std::sqrt(tail.h_hat);
    const MaxDigitSample s = max_digit_experiment(D, kFrechetN, kFrechetM, kSeed + 40 + d, 2, 0, kThreads);
    const MaxDigitSample s4 = max_digit_experiment(D, 4 * kFrechetN, kFrechetM, kSeed + 50 + d, 1, 0, kThreads);
    const double ks = frechet_fit(s, C).ks_distance;
    const double fitted = frechet_fit(s).fitted_scale;
    const double ratio = median(s4.maxima) / median(s.maxima);
    const std::string tag = "d=" + std::to_string(d);
    v.require(ks < kFrechetKs, tag + " KS < " + fmt(kFrechetKs));
    v.require(std::abs(ratio / 2 - 1) < kMedianRatioTol, tag + " median ratio");
    v.require(std::abs(fitted / C - 1) < kFittedScaleTol, tag + " fitted scale");
    v.detail << " " << tag << ":C=" << fmt(C) << ",KS=" << fmt(ks) << ",median_ratio=" << fmt(ratio)
             << ",fitted=" << fmt(fitted);
    info.push_back("INFO C5 " + tag + " KS with scale H^-1/2=" + fmt(1 / C) + ": " +
                   fmt(frechet_fit(s, 1 / C).ks_distance) + "; KS k=2 Poisson=" +
                   fmt(poisson_k_fit(s, 2, C).ks_distance));
  }
  return v;
}

Verdict tail_plateau() {
  Verdict v;
  for (int d : kDs) {
    const TailEstimate& t = tail_for(d);
    v.require(t.plateau_spread < kTailSpread, "d=" + std::to_string(d) + " spread < " + fmt(kTailSpread));
    v.detail << " d=" << d << ":H=" << fmt(t.h_hat) << ",spread=" << fmt(t.plateau_spread, 3);
  }
  const LebesgueTail leb = lebesgue_tail_d1(kLebesgueT, kLebesgueDraws, kSeed + 60);
  const double rel = std::abs(leb.scaled / std::numbers::pi - 1);
  v.require(rel < kLebesgueTol, "Lebesgue within 5% of pi");
  v.detail << "; d=1 Lebesgue t=" << kLebesgueT << ": " << fmt(leb.scaled, 5) << " (rel " << fmt(rel, 2) << ")";
  return v;
}

Verdict cstar_agreement() {
  Verdict v;
  for (int d : kDs) {
    const CStarEstimate& c = excursions_for(d).cstar;
    const double se = std::hypot(c.stderr_c_star, c.stderr_cross);
    const double z = std::abs(c.c_star - c.cross_estimator) / se;
    v.require(z < kCStarSigmas, "d=" + std::to_string(d) + " within 3 combined stderr");
    v.detail << " d=" << d << ":C*=" << fmt(c.c_star, 5) << ",cross=" << fmt(c.cross_estimator, 5)
             << ",z=" << fmt(z, 3);
  }
  return v;
}

Verdict theorem2() {
  Verdict v;
  for (int d : kDs) {
    Theorem2Options opt;
    opt.c_d = std::sqrt(tail_for(d).h_hat);
    opt.direct_count = kDirectCount;
    opt.direct_T = kDirectT;
    opt.direct_dt = kDirectDt;
    opt.threads = kThreads;
    const Theorem2Result r = theorem2_experiment(Discriminant(d), kThm2T, kThm2M, kSeed + 70 + d, opt);
    const std::string tag = "d=" + std::to_string(d);
    v.require(std::abs(r.alpha_hat - r.alpha_fitted) < kAlphaTol, tag + " |alpha_hat - alpha_fit|");
    v.require(r.ks_T_vs_4T < kThm2Ks, tag + " KS(T, 4T)");
    v.require(r.direct.gaps.size() == kDirectCount, tag + " direct count");
    v.require(r.direct.p95_abs_gap < kDirectGapP95, tag + " direct gap p95");
    v.detail << " " << tag << ":alpha_hat=" << fmt(r.alpha_hat) << ",alpha_fit=" << fmt(r.alpha_fitted)
             << ",KS(T,4T)=" << fmt(r.ks_T_vs_4T) << ",gap_p95=" << fmt(r.direct.p95_abs_gap, 3);
  }
  return v;
}

// ---------------------------------------------------------------------------
// Reproducibility through the command-line tool

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

Verdict reproducibility() {
  Verdict v;
  const fs::path root = fs::temp_directory_path() / ("bcf_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(root);
  const std::vector<std::string> commands = {
      "expand --d 7 --z 0.3137+0.1211w --N 200 --format json",
      "frechet --d 3 --N 400 --M 400 --L 200000",
      "excursions --d 2 --N 300 --M 40",
      "theorem2 --d 1 --T 150 --M 300 --L 100000 --direct-count 5 --direct-T 40",
      "galambos --N 1000 --M 400",
      "tail --d 1 --L 300000",
      "identities --d 11 --M 40 --L 300",
  };
  std::size_t files = 0;
  for (std::size_t i = 0; i < commands.size(); ++i) {
    std::vector<fs::path> dirs;
    for (const char* run : {"t1", "t4", "t1again"}) {
      const fs::path dir = root / std::to_string(i) / run;
      fs::create_directories(dir);
      const std::string threads = std::string(run) == "t4" ? "4" : "1";
      const std::string cmd = std::string(BCF_CLI_PATH) + " " + commands[i] + " --seed 11 --threads " + threads +
                              " --out " + dir.string() + (i == 0 ? "/rows.json" : "") + " > /dev/null 2>&1";
      const int status = std::system(cmd.c_str());
      v.require(status == 0, "exit status of: " + commands[i]);
      dirs.push_back(dir);
    }
    std::set<std::string> names;
    for (const auto& entry : fs::directory_iterator(dirs[0])) names.insert(entry.path().filename().string());
    v.require(!names.empty(), "no output from: " + commands[i]);
    for (const auto& dir : dirs) {
      std::set<std::string> other;
      for (const auto& entry : fs::directory_iterator(dir)) other.insert(entry.path().filename().string());
      v.require(other == names, "file sets differ for: " + commands[i]);
    }
    for (const std::string& name : names) {
      const std::string ref = slurp(dirs[0] / name);
      v.require(!ref.empty(), name + " empty");
      v.require(slurp(dirs[1] / name) == ref, name + " differs between 1 and 4 threads");
      v.require(slurp(dirs[2] / name) == ref, name + " differs on rerun");
      ++files;
    }
  }
  fs::remove_all(root);
  v.detail << " " << commands.size() << " commands, " << files << " files compared across threads=1/4 and a rerun";
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));
  if (selected.empty()) selected = {1, 2, 3, 4, 5, 6, 7, 8, 9};

  std::vector<std::string> info;
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria = {
      {"exact identity suite", exact_identities},
      {"geometry suite", geometry},
      {"intersection-time oracle and defect stability", intersection_oracle},
      {"regular continued fraction maxima", galambos},
      {"Frechet law of digit maxima", [&] { return frechet(info); }},
      {"tail plateau", tail_plateau},
      {"growth-rate estimators", cstar_agreement},
      {"cusp excursion limit law", theorem2},
      {"reproducibility", reproducibility},
  };
  std::printf("threads=%u seed=%llu\n", kThreads, static_cast<unsigned long long>(kSeed));
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!selected.count(id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail << " exception: " << e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s C%d %s:%s (%.0f s)\n", v.pass ? "PASS" : "FAIL", id, criteria[i].first.c_str(),
                v.detail.str().c_str(), secs);
    std::fflush(stdout);
    for (const auto& line : info) std::printf("%s\n", line.c_str());
    info.clear();
    if (!v.pass) ++failed;
  }
  return failed == 0 ? 0 : 1;
}
