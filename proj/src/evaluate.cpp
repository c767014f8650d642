#include "latscore/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include <boost/math/distributions/beta.hpp>

#include "latscore/numerics.hpp"
#include "latscore/pvalue.hpp"

namespace latscore {

Eigen::VectorXd genotype_from_counts(const GenotypeCounts& counts) {
  Eigen::VectorXd g(counts.n());
  int k = 0;
  for (int i = 0; i < counts.n0; ++i) g[k++] = 0.0;
  for (int i = 0; i < counts.n1; ++i) g[k++] = 1.0;
  for (int i = 0; i < counts.n2; ++i) g[k++] = 2.0;
  return g;
}

NullFit make_intercept_fit(const GenotypeCounts& counts, int v) {
  const int n = counts.n();
  if (v <= 0 || v >= n)
    throw std::invalid_argument("make_intercept_fit: v must satisfy 0 < v < n");
  NullFit fit;
  const double mu = static_cast<double>(v) / n;
  fit.beta_hat = Eigen::VectorXd::Constant(1, logit(mu));
  fit.mu_hat = Eigen::VectorXd::Constant(n, mu);
  fit.w_hat = Eigen::VectorXd::Constant(n, mu * (1.0 - mu));
  fit.xtwx = Eigen::MatrixXd::Constant(1, 1, n * mu * (1.0 - mu));
  fit.xtwx_factor.compute(fit.xtwx);
  fit.X = Eigen::MatrixXd::Ones(n, 1);
  // y ordering is irrelevant for the conditional machinery; place the cases
  // on the tail of the genotype-sorted vector deterministically.
  fit.y = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < v; ++i) fit.y[n - 1 - i] = 1.0;
  fit.resid = fit.y - fit.mu_hat;
  return fit;
}

std::vector<double> lattice_pvalues(const NullFit& fit, const Eigen::VectorXd& g,
                                    const LatticePmf& pmf, Method method) {
  PvalueEngine engine(method, fit, g);
  std::vector<double> p(static_cast<size_t>(pmf.size()));
  for (int i = 0; i < pmf.size(); ++i)
    p[static_cast<size_t>(i)] = engine.at(pmf.point(i)).p_two_sided;
  return p;
}

RejectionRegion region_from_pvalues(const LatticePmf& pmf,
                                    const std::vector<double>& pvalues, double alpha,
                                    Method method) {
  RejectionRegion region;
  region.alpha = alpha;
  region.method = method;
  const int m = pmf.size();
  int cl = -1;
  for (int i = 0; i < m; ++i) {
    if (pvalues[static_cast<size_t>(i)] <= alpha) cl = i;
    else break;
  }
  int cu = m;
  for (int i = m - 1; i >= 0; --i) {
    if (pvalues[static_cast<size_t>(i)] <= alpha) cu = i;
    else break;
  }
  region.has_lower = cl >= 0;
  region.has_upper = cu < m;
  if (region.has_lower) region.c_lower = pmf.point(cl);
  if (region.has_upper) region.c_upper = pmf.point(cu);
  KahanSum err;
  for (int i = 0; i < m; ++i)
    if (i <= cl || i >= cu) err.add(pmf.probs[static_cast<size_t>(i)]);
  region.cond_error = err.value();
  return region;
}

RejectionRegion conditional_rejection_region(const GenotypeCounts& counts, int v,
                                             double alpha, Method method) {
  NullFit fit = make_intercept_fit(counts, v);
  Eigen::VectorXd g = genotype_from_counts(counts);
  LatticePmf pmf = exact_intercept_pmf(counts, v);
  std::vector<double> p = lattice_pvalues(fit, g, pmf, method);
  return region_from_pvalues(pmf, p, alpha, method);
}

std::vector<int> ConditionalErrorTable::invalid_v(size_t method_idx, size_t alpha_idx,
                                                  double slack) const {
  std::vector<int> bad;
  const auto& err = errors[method_idx][alpha_idx];
  for (size_t i = 0; i < err.size(); ++i)
    if (err[i] > alphas[alpha_idx] + slack) bad.push_back(static_cast<int>(i) + 1);
  return bad;
}

ConditionalErrorTable compute_conditional_errors(const GenotypeCounts& counts,
                                                 const std::vector<Method>& methods,
                                                 const std::vector<double>& alphas,
                                                 int threads) {
  ConditionalErrorTable table;
  table.counts = counts;
  table.methods = methods;
  table.alphas = alphas;
  const int n = counts.n();
  table.errors.assign(methods.size(),
                      std::vector<std::vector<double>>(
                          alphas.size(), std::vector<double>(static_cast<size_t>(n - 1))));

  Eigen::VectorXd g = genotype_from_counts(counts);
  auto work = [&](int v_begin, int v_end) {
    for (int v = v_begin; v < v_end; ++v) {
      NullFit fit = make_intercept_fit(counts, v);
      LatticePmf pmf = exact_intercept_pmf(counts, v);
      for (size_t mi = 0; mi < methods.size(); ++mi) {
        std::vector<double> p = lattice_pvalues(fit, g, pmf, methods[mi]);
        for (size_t ai = 0; ai < alphas.size(); ++ai) {
          RejectionRegion region = region_from_pvalues(pmf, p, alphas[ai], methods[mi]);
          table.errors[mi][ai][static_cast<size_t>(v - 1)] = region.cond_error;
        }
      }
    }
  };

  threads = std::max(1, threads);
  if (threads == 1) {
    work(1, n);
  } else {
    std::vector<std::thread> pool;
    int span = (n - 1 + threads - 1) / threads;
    for (int w = 0; w < threads; ++w) {
      int b = 1 + w * span;
      int e = std::min(n, b + span);
      if (b >= e) break;
      pool.emplace_back(work, b, e);
    }
    for (auto& th : pool) th.join();
  }
  return table;
}

double binomial_logpmf(int n, double mu, int v) {
  static thread_local std::unique_ptr<LogBinomTable> table;
  if (!table || table->max_n() < n) table = std::make_unique<LogBinomTable>(n);
  return (*table)(n, v) + v * std::log(mu) + (n - v) * std::log1p(-mu);
}

ErrorProfile error_profile(const GenotypeCounts& counts, double alpha, Method method,
                           const std::vector<double>& mu_grid, int threads) {
  ConditionalErrorTable table =
      compute_conditional_errors(counts, {method}, {alpha}, threads);
  ErrorProfile profile;
  profile.method = method;
  profile.alpha = alpha;
  profile.cond_error = table.errors[0][0];
  profile.invalid_v = table.invalid_v(0, 0);
  profile.mu_grid = mu_grid;
  const int n = counts.n();
  for (double mu : mu_grid) {
    if (!(mu > 0.0 && mu < 1.0))
      throw std::invalid_argument("error_profile: mu grid must lie inside (0,1)");
    KahanSum overall, invalid;
    size_t next_invalid = 0;
    for (int v = 1; v < n; ++v) {
      double wv = std::exp(binomial_logpmf(n, mu, v));
      overall.add(profile.cond_error[static_cast<size_t>(v - 1)] * wv);
      if (next_invalid < profile.invalid_v.size() &&
          profile.invalid_v[next_invalid] == v) {
        invalid.add(wv);
        ++next_invalid;
      }
    }
    profile.overall_error.push_back(overall.value());
    profile.invalid_prob.push_back(invalid.value());
  }
  return profile;
}

ConfidenceInterval clopper_pearson(long k, long n, double level) {
  if (n <= 0 || k < 0 || k > n) throw std::invalid_argument("clopper_pearson: bad k/n");
  const double tail = 0.5 * (1.0 - level);
  ConfidenceInterval ci;
  if (k == 0) ci.lower = 0.0;
  else {
    boost::math::beta_distribution<double> lo(static_cast<double>(k),
                                              static_cast<double>(n - k + 1));
    ci.lower = boost::math::quantile(lo, tail);
  }
  if (k == n) ci.upper = 1.0;
  else {
    boost::math::beta_distribution<double> hi(static_cast<double>(k + 1),
                                              static_cast<double>(n - k));
    ci.upper = boost::math::quantile(hi, 1.0 - tail);
  }
  return ci;
}

double prevalence_for_intercept(double beta0, int gh_nodes) {
  GaussHermite gh = gauss_hermite(gh_nodes);
  return gauss_hermite_normal_mean(gh, [&](double x2) {
    return 0.5 * (sigmoid(beta0 + x2) + sigmoid(beta0 + 1.0 + x2));
  });
}

double solve_prevalence_intercept(double target, int gh_nodes) {
  if (!(target > 0.0 && target < 1.0))
    throw std::invalid_argument("solve_prevalence_intercept: target outside (0,1)");
  double lo = -40.0, hi = 10.0;
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (lo + hi);
    if (prevalence_for_intercept(mid, gh_nodes) < target) lo = mid;
    else hi = mid;
  }
  return 0.5 * (lo + hi);
}

ConditionalCovariateSampler::ConditionalCovariateSampler(double beta0, int gh_nodes)
    : beta0_(beta0) {
  GaussHermite gh = gauss_hermite(gh_nodes);
  // h(x1, y) = E_{x2}[ P(y | x1, x2) ]
  auto h = [&](int x1, int y) {
    return gauss_hermite_normal_mean(gh, [&](double x2) {
      double p = sigmoid(beta0_ + x1 + x2);
      return y ? p : 1.0 - p;
    });
  };
  double h1c = h(1, 1), h0c = h(0, 1);
  double h1n = h(1, 0), h0n = h(0, 0);
  p1_case_ = h1c / (h0c + h1c);
  p1_control_ = h1n / (h0n + h1n);
  // acceptance = E_z[ likelihood_weight(z, y) ] = P(y) under the mixture
  accept_case_ = 0.5 * (h0c + h1c);
  accept_control_ = 0.5 * (h0n + h1n);
}

double ConditionalCovariateSampler::likelihood_weight(double x2, int y) const {
  double p0 = sigmoid(beta0_ + x2);
  double p1 = sigmoid(beta0_ + 1.0 + x2);
  return y ? 0.5 * (p0 + p1) : 0.5 * ((1.0 - p0) + (1.0 - p1));
}

SimResult simulate_conditional_t1e(const SimConfig& config) {
  if (config.cases <= 0 || config.cases >= config.n)
    throw std::invalid_argument("simulate_conditional_t1e: cases out of range");
  if (!(config.maf > 0.0 && config.maf <= 0.5))
    throw std::invalid_argument("simulate_conditional_t1e: MAF outside (0, 0.5]");
  if (!(config.alpha > 0.0 && config.alpha <= 1.0))
    throw std::invalid_argument("simulate_conditional_t1e: alpha outside (0,1]");

  const ConditionalCovariateSampler sampler(config.beta0);
  const int n = config.n;
  Eigen::VectorXd y = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < config.cases; ++i) y[i] = 1.0;

  const size_t n_methods = config.methods.size();
  struct Tally {
    std::vector<long> rejections;
    long untestable = 0;
    long fit_failures = 0;
  };

  auto run_block = [&](long r_begin, long r_end, Tally& tally) {
    tally.rejections.assign(n_methods, 0);
    Eigen::MatrixXd X(n, 3);
    X.col(0).setOnes();
    Eigen::VectorXd g(n);
    for (long r = r_begin; r < r_end; ++r) {
      std::mt19937_64 rng(splitmix64(config.seed ^
                                     (0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(r + 1))));
      std::binomial_distribution<int> geno(2, config.maf);
      for (int i = 0; i < n; ++i) {
        int yi = static_cast<int>(y[i]);
        X(i, 1) = sampler.sample_x1(yi, rng);
        X(i, 2) = sampler.sample_x2(yi, rng);
        g[i] = geno(rng);
      }
      if (g.minCoeff() == g.maxCoeff()) {
        ++tally.untestable;
        continue;
      }
      try {
        NullFit fit = fit_null(y, X);
        for (size_t mi = 0; mi < n_methods; ++mi) {
          PvalueReport rep =
              two_sided_pvalue(config.methods[mi], fit, g, score_statistic(fit, g));
          if (!rep.untestable && rep.p_two_sided <= config.alpha)
            ++tally.rejections[mi];
        }
      } catch (const FitError&) {
        ++tally.fit_failures;
      }
    }
  };

  const int threads = std::max(1, config.threads);
  std::vector<Tally> tallies(static_cast<size_t>(threads));
  if (threads == 1) {
    run_block(0, config.replicates, tallies[0]);
  } else {
    std::vector<std::thread> pool;
    long span = (config.replicates + threads - 1) / threads;
    for (int w = 0; w < threads; ++w) {
      long b = w * span;
      long e = std::min<long>(config.replicates, b + span);
      if (b >= e) {
        tallies[static_cast<size_t>(w)].rejections.assign(n_methods, 0);
        continue;
      }
      pool.emplace_back(run_block, b, e, std::ref(tallies[static_cast<size_t>(w)]));
    }
    for (auto& th : pool) th.join();
  }

  SimResult result;
  result.replicates = config.replicates;
  std::vector<long> total(n_methods, 0);
  for (const Tally& t : tallies) {
    result.untestable += t.untestable;
    result.fit_failures += t.fit_failures;
    for (size_t mi = 0; mi < n_methods; ++mi)
      if (!t.rejections.empty()) total[mi] += t.rejections[mi];
  }
  for (size_t mi = 0; mi < n_methods; ++mi) {
    SimMethodResult mr;
    mr.method = config.methods[mi];
    mr.rejections = total[mi];
    mr.rate = static_cast<double>(total[mi]) / static_cast<double>(config.replicates);
    mr.ci = clopper_pearson(total[mi], config.replicates);
    result.methods.push_back(mr);
  }
  return result;
}

}  // namespace latscore
