// Acceptance suite: one pass/fail line per criterion, nonzero exit when any
// criterion fails. Heavier reproductions (error profiles, accuracy grid,
// simulation) honour LATSCORE_THREADS.
#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <random>
#include <string>
#include <tuple>
#include <vector>

#include "latscore/cgf.hpp"
#include "latscore/evaluate.hpp"
#include "latscore/exact.hpp"
#include "latscore/fast.hpp"
#include "latscore/model.hpp"
#include "latscore/numerics.hpp"
#include "latscore/pvalue.hpp"
#include "latscore/saddlepoint.hpp"

using namespace latscore;

namespace {

int g_threads = 1;
int g_failures = 0;

void report(int criterion, bool pass, const std::string& detail) {
  std::printf("criterion %2d: %s  %s\n", criterion, pass ? "PASS" : "FAIL",
              detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---------------------------------------------------------------- criterion 1

// brute-force conditional pmf over response vectors with a fixed case count
std::map<long, double> enumerate_counts(const GenotypeCounts& c, int v) {
  const int n = c.n();
  std::vector<int> g;
  for (int i = 0; i < c.n0; ++i) g.push_back(0);
  for (int i = 0; i < c.n1; ++i) g.push_back(1);
  for (int i = 0; i < c.n2; ++i) g.push_back(2);
  std::map<long, double> mass;
  long total = 0;
  for (std::uint32_t bits = 0; bits < (1u << n); ++bits) {
    if (__builtin_popcount(bits) != v) continue;
    long gy = 0;
    for (int i = 0; i < n; ++i)
      if (bits & (1u << i)) gy += g[static_cast<size_t>(i)];
    mass[gy] += 1.0;
    ++total;
  }
  for (auto& [k, p] : mass) p /= static_cast<double>(total);
  return mass;
}

bool check_intercept_pmf(const GenotypeCounts& c, int v, double tol, double& worst) {
  LatticePmf pmf = exact_intercept_pmf(c, v);
  auto oracle = enumerate_counts(c, v);
  double mu = static_cast<double>(v) / c.n();
  std::vector<double> expected(static_cast<size_t>(pmf.size()), 0.0);
  for (const auto& [gy, p] : oracle) {
    int idx = pmf.index_of(static_cast<double>(gy) - c.max_score() * mu);
    if (idx < 0 || idx >= pmf.size()) return false;
    expected[static_cast<size_t>(idx)] = p;
  }
  for (int i = 0; i < pmf.size(); ++i) {
    double diff = std::abs(pmf.probs[static_cast<size_t>(i)] -
                           expected[static_cast<size_t>(i)]);
    worst = std::max(worst, diff);
    if (diff > tol) return false;
  }
  return true;
}

void criterion_1() {
  auto t0 = std::chrono::steady_clock::now();
  const double tol = 1e-12;
  double worst = 0.0;
  long intercept_checked = 0, binary_checked = 0;
  bool ok = true;

  for (int n = 2; n <= 12 && ok; ++n)
    for (int n0 = 0; n0 <= n && ok; ++n0)
      for (int n1 = 0; n0 + n1 <= n && ok; ++n1) {
        GenotypeCounts c{n0, n1, n - n0 - n1};
        for (int v = 1; v < n && ok; ++v) {
          ok = check_intercept_pmf(c, v, tol, worst);
          ++intercept_checked;
        }
      }

  // binary-covariate model: every stratum split of every n <= 12, every
  // feasible pair of per-stratum case counts
  std::map<std::array<int, 4>, std::map<long, double>> memo;
  auto stratum_mass = [&](const GenotypeCounts& c, int v) {
    std::array<int, 4> key{c.n0, c.n1, c.n2, v};
    auto it = memo.find(key);
    if (it == memo.end()) it = memo.emplace(key, enumerate_counts(c, v)).first;
    return it->second;
  };
  for (int n = 2; n <= 12 && ok; ++n)
    for (int l = 1; l < n && ok; ++l) {
      int m = n - l;
      for (int l0 = 0; l0 <= l && ok; ++l0)
        for (int l1 = 0; l0 + l1 <= l && ok; ++l1)
          for (int m0 = 0; m0 <= m && ok; ++m0)
            for (int m1 = 0; m0 + m1 <= m && ok; ++m1) {
              BinaryCovariateCounts bc{{l0, l1, l - l0 - l1}, {m0, m1, m - m0 - m1}};
              for (int v0 = 1; v0 < l && ok; ++v0)
                for (int v1 = 1; v1 < m && ok; ++v1) {
                  LatticePmf pmf = exact_binary_covariate_pmf(bc, v0, v1);
                  auto a = stratum_mass(bc.stratum0, v0);
                  auto b = stratum_mass(bc.stratum1, v1);
                  double shift =
                      bc.stratum0.max_score() * (static_cast<double>(v0) / l) +
                      bc.stratum1.max_score() * (static_cast<double>(v1) / m);
                  std::vector<double> expected(static_cast<size_t>(pmf.size()), 0.0);
                  for (const auto& [ka, pa] : a)
                    for (const auto& [kb, pb] : b) {
                      int idx = pmf.index_of(static_cast<double>(ka + kb) - shift);
                      expected[static_cast<size_t>(idx)] += pa * pb;
                    }
                  for (int i = 0; i < pmf.size() && ok; ++i) {
                    double diff = std::abs(pmf.probs[static_cast<size_t>(i)] -
                                           expected[static_cast<size_t>(i)]);
                    worst = std::max(worst, diff);
                    if (diff > tol) ok = false;
                  }
                  ++binary_checked;
                }
            }
    }

  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "exact pmfs vs enumeration: %ld intercept + %ld binary configs, "
                "worst |diff| = %.2e (tol 1e-12), %.1fs",
                intercept_checked, binary_checked, worst, seconds_since(t0));
  report(1, ok, buf);
}

// ------------------------------------------------------- criteria 2, 3 and 4

std::string join_ints(const std::vector<int>& v) {
  std::string s = "{";
  for (size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s + "}";
}

void criteria_2_3_4() {
  auto t0 = std::chrono::steady_clock::now();
  const GenotypeCounts counts{980, 20, 0};
  const std::vector<Method> methods{Method::dspa_cc, Method::espa_cc, Method::normal,
                                    Method::espa, Method::exact_intercept};
  const std::vector<double> alphas{0.05, 5e-5};
  ConditionalErrorTable table =
      compute_conditional_errors(counts, methods, alphas, g_threads);

  // criterion 2: exact invalid-v sets of the continuity-corrected methods
  std::vector<int> dspa_05 = table.invalid_v(0, 0);
  std::vector<int> dspa_5e5 = table.invalid_v(0, 1);
  std::vector<int> espacc_05 = table.invalid_v(1, 0);
  std::vector<int> espacc_5e5 = table.invalid_v(1, 1);
  const std::vector<int> expected_05{301, 325, 675, 699};
  const std::vector<int> expected_5e5{406, 594};
  bool ok2 = dspa_05 == expected_05 && espacc_05 == expected_05 &&
             dspa_5e5.empty() && espacc_5e5 == expected_5e5;
  char buf[512];
  std::snprintf(buf, sizeof(buf),
                "invalid v at 0.05: dspa_cc=%s espa_cc=%s (want {301,325,675,699}); "
                "at 5e-5: dspa_cc=%s (want {}) espa_cc=%s (want {406,594}); %.1fs",
                join_ints(dspa_05).c_str(), join_ints(espacc_05).c_str(),
                join_ints(dspa_5e5).c_str(), join_ints(espacc_5e5).c_str(),
                seconds_since(t0));
  report(2, ok2, buf);

  // criterion 3: invalidity fractions of the uncorrected methods
  auto frac = [&](size_t mi, size_t ai) {
    return 100.0 * static_cast<double>(table.invalid_v(mi, ai).size()) / 999.0;
  };
  double nrm_05 = frac(2, 0), nrm_5e5 = frac(2, 1);
  double espa_05 = frac(3, 0), espa_5e5 = frac(3, 1);
  bool ok3 = std::abs(nrm_05 - 40.0) <= 3.0 && std::abs(nrm_5e5 - 64.0) <= 3.0 &&
             std::abs(espa_05 - 43.0) <= 3.0 && std::abs(espa_5e5 - 39.0) <= 3.0;
  std::snprintf(buf, sizeof(buf),
                "invalid fractions: normal %.1f%%/%.1f%% (want ~40/~64 +-3), "
                "espa %.1f%%/%.1f%% (want ~43/~39 +-3)",
                nrm_05, nrm_5e5, espa_05, espa_5e5);
  report(3, ok3, buf);

  // criterion 4: exact-test overall error <= alpha across the mu grid
  bool ok4 = true;
  double worst_excess = -1.0;
  for (size_t ai = 0; ai < alphas.size(); ++ai) {
    const auto& cond = table.errors[4][ai];
    for (int gi = 0; gi < 199; ++gi) {
      double mu = 0.005 + (0.995 - 0.005) * gi / 198.0;
      KahanSum overall;
      for (int v = 1; v < counts.n(); ++v)
        overall.add(cond[static_cast<size_t>(v - 1)] *
                    std::exp(binomial_logpmf(counts.n(), mu, v)));
      double excess = overall.value() - alphas[ai];
      worst_excess = std::max(worst_excess, excess);
      if (excess > 1e-12) ok4 = false;
    }
  }
  std::snprintf(buf, sizeof(buf),
                "exact test overall error on 199-point mu grid, both alphas: "
                "worst excess over alpha = %.2e (must be <= 1e-12)",
                worst_excess);
  report(4, ok4, buf);
}

// ---------------------------------------------------------------- criterion 5

void criterion_5() {
  NullFit fit = make_intercept_fit({980, 20, 0}, 10);
  Eigen::VectorXd g = genotype_from_counts({980, 20, 0});
  SupportBounds sb = conditional_support(fit, g);
  bool ok = std::abs(sb.lower + 0.2) <= 1e-12 && std::abs(sb.upper - 9.8) <= 1e-12;
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "conditional support for (980,20,0), 10 cases: (%.12g, %.12g), "
                "want (-0.2, 9.8)",
                sb.lower, sb.upper);
  report(5, ok, buf);
}

// ---------------------------------------------------------------- criterion 6

void criterion_6() {
  bool ok = std::abs(reflect(4.5) + 4.5) <= 1e-12 &&
            std::abs(reflect(1.9) + 2.1) <= 1e-12;
  // skewed lattice with support minimum -1.1: u = 1.9 goes one-sided
  NullFit fit = make_intercept_fit({892, 106, 2}, 10);
  Eigen::VectorXd g = genotype_from_counts({892, 106, 2});
  PvalueReport rep = two_sided_pvalue(Method::exact_intercept, fit, g, 1.9);
  ok = ok && rep.sided == PvalueReport::Sided::one &&
       std::abs(*rep.u_inv + 2.1) <= 1e-12;
  char buf[200];
  std::snprintf(buf, sizeof(buf),
                "reflect(4.5) = %.6g, reflect(1.9) = %.6g, u = 1.9 with support "
                "minimum -1.1 is one-sided: %s",
                reflect(4.5), reflect(1.9),
                rep.sided == PvalueReport::Sided::one ? "yes" : "no");
  report(6, ok, buf);
}

// ---------------------------------------------------------------- criterion 7

struct TailErrors {
  double dspa = 0.0;
  double espa_cc = 0.0;
  std::string dspa_at, espa_at;
};

TailErrors accuracy_config(const GenotypeCounts& c, int v) {
  TailErrors err;
  LatticePmf pmf = exact_intercept_pmf(c, v);
  NullFit fit = make_intercept_fit(c, v);
  Eigen::VectorXd g = genotype_from_counts(c);
  JointCgf joint(fit, g);
  Eigen::VectorXd gt = efficient_genotype(fit, g);
  EfficientCgf eff(gt, fit.mu_hat);
  double fgg = conditional_variance(fit, g);
  double ldh = log_det_llt(fit.xtwx);
  SupportBounds sb = conditional_support(fit, g);
  DspaEngine dspa(joint, ldh, fgg, sb, Method::dspa_cc);
  EspaEngine espa(eff, fgg, sb, Method::espa_cc, true);

  auto tally = [&](double approx, double exact, double& worst, std::string& where,
                   double u, char side) {
    if (exact < 1e-6 || exact > 1.0 - 1e-6) return;
    double rel = std::abs(approx - exact) / exact;
    if (rel > worst) {
      worst = rel;
      char b[64];
      std::snprintf(b, sizeof(b), "%c-tail u=%.3g exact=%.2e", side, u, exact);
      where = b;
    }
  };
  for (int i = 0; i < pmf.size(); ++i) {
    double u = pmf.point(i);
    double sex = pmf.survival(u);
    double lex = pmf.left_tail(u);
    if (i > 0) {
      tally(dspa.survival(u).survival, sex, err.dspa, err.dspa_at, u, 'S');
      tally(espa.survival(u).survival, sex, err.espa_cc, err.espa_at, u, 'S');
    }
    tally(dspa.left_tail(u), lex, err.dspa, err.dspa_at, u, 'L');
    tally(espa.left_tail(u), lex, err.espa_cc, err.espa_at, u, 'L');
  }
  return err;
}

void criterion_7() {
  auto t0 = std::chrono::steady_clock::now();
  TailErrors worst;
  std::string worst_cfg_d, worst_cfg_e;
  for (int n : {50, 200, 1000})
    for (double cp : {0.05, 0.2, 0.5})
      for (double maf : {0.02, 0.05, 0.2}) {
        int n2 = static_cast<int>(std::llround(maf * maf * n));
        int n1 = static_cast<int>(std::llround(2.0 * maf * (1.0 - maf) * n));
        GenotypeCounts c{n - n1 - n2, n1, n2};
        int v = static_cast<int>(std::llround(cp * n));
        if (v < 1 || v >= n || c.max_score() == 0) continue;
        TailErrors e = accuracy_config(c, v);
        char cfg[128];
        std::snprintf(cfg, sizeof(cfg), "n=%d cp=%.2f maf=%.2f %s", n, cp, maf,
                      e.dspa_at.c_str());
        if (e.dspa > worst.dspa) {
          worst.dspa = e.dspa;
          worst_cfg_d = cfg;
        }
        std::snprintf(cfg, sizeof(cfg), "n=%d cp=%.2f maf=%.2f %s", n, cp, maf,
                      e.espa_at.c_str());
        if (e.espa_cc > worst.espa_cc) {
          worst.espa_cc = e.espa_cc;
          worst_cfg_e = cfg;
        }
      }
  bool ok = worst.dspa <= 0.20 && worst.espa_cc <= 0.20;
  char buf[512];
  std::snprintf(buf, sizeof(buf),
                "tails down to 1e-6 vs exact: worst dspa_cc %.1f%% at [%s]; worst "
                "espa_cc %.1f%% at [%s] (tolerance 20%%), %.1fs",
                100.0 * worst.dspa, worst_cfg_d.c_str(), 100.0 * worst.espa_cc,
                worst_cfg_e.c_str(), seconds_since(t0));
  report(7, ok, buf);
}

// ---------------------------------------------------------------- criterion 8

struct BalancedSim {
  NullFit fit;
  Eigen::VectorXd g;
};

BalancedSim balanced_sim(int n, int mac, std::uint64_t seed) {
  for (std::uint64_t s = seed;; ++s) {
    std::mt19937_64 rng(s);
    std::normal_distribution<double> norm(0.0, 1.0);
    std::bernoulli_distribution half(0.5);
    std::bernoulli_distribution case_coin(0.2);
    Eigen::MatrixXd X(n, 3);
    Eigen::VectorXd y(n);
    BalancedSim sim;
    sim.g = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < n; ++i) {
      X(i, 0) = 1.0;
      X(i, 1) = half(rng) ? 1.0 : 0.0;
      X(i, 2) = norm(rng);
      y[i] = case_coin(rng) ? 1.0 : 0.0;
    }
    std::vector<int> order(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) order[static_cast<size_t>(i)] = i;
    std::shuffle(order.begin(), order.end(), rng);
    for (int k = 0; k < mac; ++k) sim.g[order[static_cast<size_t>(k)]] += 1.0;
    if (y.sum() < 1.0 || y.sum() > n - 1.0) continue;
    try {
      sim.fit = fit_null(y, X);
      return sim;
    } catch (const FitError&) {
      continue;
    }
  }
}

void criterion_8() {
  auto t0 = std::chrono::steady_clock::now();
  double worst_gap = 0.0;
  std::string worst_at;
  bool ok = true;

  for (int n : {2000, 20000})
    for (int mac : {3, 10, 50})
      for (std::uint64_t seed : {61, 62}) {
        BalancedSim sim =
            balanced_sim(n, mac, seed + static_cast<std::uint64_t>(mac + n));
        ScoreContext ctx = make_score_context(sim.fit, sim.g);
        if (!ctx.testable) continue;
        CarrierPartition part = make_carrier_partition(sim.fit, sim.g);
        for (double step : {1.0, 3.0}) {
          double u = std::floor(ctx.u) + step;
          if (u <= ctx.support.lower + 1.0 || u > ctx.support.upper) continue;
          TailResult full_d = dspa_cc_survival(sim.fit, sim.g, u);
          TailResult fast_d = fast_dspa_cc_survival(sim.fit, part, sim.g, u);
          TailResult full_e = espa_survival(sim.fit, sim.g, u, false);
          TailResult fast_e = fast_spa_survival(sim.fit, part, sim.g, u, false);
          for (auto [a, b, tag] :
               {std::tuple<double, double, const char*>{full_d.survival,
                                                        fast_d.survival, "dspa"},
                {full_e.survival, fast_e.survival, "spa"}}) {
            if (a <= 0.0 || b <= 0.0) continue;
            double gap = std::abs(std::log10(a) - std::log10(b));
            if (gap > worst_gap) {
              worst_gap = gap;
              char w[96];
              std::snprintf(w, sizeof(w), "%s n=%d mac=%d", tag, n, mac);
              worst_at = w;
            }
            if (gap > 0.1) ok = false;
          }
        }
      }

  // exact identity when every sample is a carrier
  BalancedSim allc = balanced_sim(500, 0, 77);
  allc.g = Eigen::VectorXd::Ones(500);
  for (int i = 0; i < 500; i += 4) allc.g[i] = 2.0;
  CarrierPartition part = make_carrier_partition(allc.fit, allc.g);
  ScoreContext ctx = make_score_context(allc.fit, allc.g);
  double u = std::floor(ctx.u) + 2.0;
  TailResult full_d = dspa_cc_survival(allc.fit, allc.g, u);
  TailResult fast_d = fast_dspa_cc_survival(allc.fit, part, allc.g, u);
  double ident_gap = std::abs(full_d.survival - fast_d.survival) /
                     std::max(full_d.survival, 1e-300);
  if (ident_gap > 1e-12) ok = false;

  char buf[320];
  std::snprintf(buf, sizeof(buf),
                "fast vs full: worst |dlog10 p| = %.4f at [%s] (tol 0.1); "
                "all-carrier identity gap %.1e (tol 1e-12), %.1fs",
                worst_gap, worst_at.c_str(), ident_gap, seconds_since(t0));
  report(8, ok, buf);
}

// ---------------------------------------------------------------- criterion 9

void criterion_9() {
  auto t0 = std::chrono::steady_clock::now();
  SimConfig config;
  config.n = 2000;
  config.cases = 40;
  config.maf = 0.05;
  config.alpha = 1e-3;
  config.replicates = 100000;
  config.methods = {Method::dspa_cc, Method::espa_cc, Method::espa};
  config.seed = 20260810;
  config.threads = g_threads;
  SimResult res = simulate_conditional_t1e(config);

  const SimMethodResult& dspa = res.methods[0];
  const SimMethodResult& espacc = res.methods[1];
  const SimMethodResult& espa = res.methods[2];
  bool ok = dspa.ci.upper <= config.alpha && espacc.ci.upper <= config.alpha &&
            espa.ci.lower <= config.alpha && config.alpha <= espa.ci.upper;
  char buf[512];
  std::snprintf(buf, sizeof(buf),
                "1e5 replicates at alpha=1e-3: dspa_cc %.2e [%.2e,%.2e] "
                "(upper<=alpha), espa_cc %.2e [%.2e,%.2e] (upper<=alpha), espa "
                "%.2e [%.2e,%.2e] (contains alpha); untestable=%ld, %.0fs",
                dspa.rate, dspa.ci.lower, dspa.ci.upper, espacc.rate,
                espacc.ci.lower, espacc.ci.upper, espa.rate, espa.ci.lower,
                espa.ci.upper, res.untestable, seconds_since(t0));
  report(9, ok, buf);
}

// --------------------------------------------------------------- criterion 10

void criterion_10() {
  auto t0 = std::chrono::steady_clock::now();
  // gradients and Hessians against central finite differences
  std::mt19937_64 rng(1234);
  std::normal_distribution<double> norm(0.0, 1.0);
  std::bernoulli_distribution coin(0.3);
  std::binomial_distribution<int> geno(2, 0.3);
  std::uniform_real_distribution<double> tdist(-0.5, 0.5);
  const double h = 1e-6;
  double worst_fd = 0.0;
  int checked = 0;
  while (checked < 100) {
    int n = 20 + (checked % 30);
    int d = 2 + (checked % 2);
    Eigen::MatrixXd X(n, d);
    Eigen::VectorXd y(n), g(n);
    for (int i = 0; i < n; ++i) {
      X(i, 0) = 1.0;
      for (int c = 1; c < d; ++c) X(i, c) = norm(rng);
      y[i] = coin(rng) ? 1.0 : 0.0;
      g[i] = geno(rng);
    }
    if (y.sum() < 1.0 || y.sum() > n - 1.0) continue;
    NullFit fit;
    try {
      fit = fit_null(y, X);
    } catch (const FitError&) {
      continue;
    }
    JointCgf cgf(fit, g);
    Eigen::VectorXd t(d + 1);
    for (int c = 0; c <= d; ++c) t[c] = tdist(rng);
    CgfEval ev = cgf.eval(t);
    for (int c = 0; c <= d; ++c) {
      Eigen::VectorXd tp = t, tm = t;
      tp[c] += h;
      tm[c] -= h;
      CgfEval evp = cgf.eval(tp), evm = cgf.eval(tm);
      worst_fd = std::max(worst_fd,
                          std::abs(ev.grad[c] - (evp.value - evm.value) / (2 * h)));
      worst_fd = std::max(worst_fd, (ev.hess.col(c) - (evp.grad - evm.grad) / (2 * h))
                                        .lpNorm<Eigen::Infinity>());
    }
    ++checked;
  }
  bool fd_ok = worst_fd <= 1e-6;

  // prevalence intercept: the criterion pins the rounded -5.6 +- 0.05; the
  // integral's actual root sits at -5.6936 (prevalence(-5.6) = 1.095%), so
  // this half fails and is reported honestly.
  double b0 = solve_prevalence_intercept(0.01);
  bool b0_ok = std::abs(b0 - (-5.6)) <= 0.05;

  char buf[384];
  std::snprintf(buf, sizeof(buf),
                "CGF derivatives vs central differences on 100 instances: worst "
                "|diff| = %.2e (tol 1e-6) -> %s; beta0 solve = %.4f, want -5.6 "
                "+- 0.05 -> %s (prevalence(-5.6) = %.6f), %.1fs",
                worst_fd, fd_ok ? "ok" : "fail", b0, b0_ok ? "ok" : "fail",
                prevalence_for_intercept(-5.6), seconds_since(t0));
  report(10, fd_ok && b0_ok, buf);
}

}  // namespace

int main() {
  if (const char* env = std::getenv("LATSCORE_THREADS")) {
    int t = std::atoi(env);
    if (t > 0) g_threads = t;
  }
  std::printf("acceptance suite (threads=%d)\n", g_threads);
  criterion_1();
  criteria_2_3_4();
  criterion_5();
  criterion_6();
  criterion_7();
  criterion_8();
  criterion_9();
  criterion_10();
  std::printf("%d criterion(s) failed\n", g_failures);
  return g_failures == 0 ? 0 : 1;
}
