#ifndef LATSCORE_EVALUATE_HPP
#define LATSCORE_EVALUATE_HPP

#include <cstdint>
#include <random>
#include <vector>

#include "latscore/exact.hpp"
#include "latscore/method.hpp"
#include "latscore/model.hpp"

namespace latscore {

/// Two-sided rejection region {u <= c_lower} U {u >= c_upper} on the
/// conditional lattice, built by grid searches from each end using the
/// method's own two-sided p-values.
struct RejectionRegion {
  double alpha = 0.0;
  Method method = Method::normal;
  bool has_lower = false;
  bool has_upper = false;
  double c_lower = 0.0;
  double c_upper = 0.0;
  double cond_error = 0.0;  // exact conditional mass of the region
};

/// Exact intercept-model null fit for genotype counts and v cases
/// (mu = v/n in closed form; no IRLS noise).
NullFit make_intercept_fit(const GenotypeCounts& counts, int v);
Eigen::VectorXd genotype_from_counts(const GenotypeCounts& counts);

/// Method's two-sided p-value at every lattice point of the exact pmf.
std::vector<double> lattice_pvalues(const NullFit& fit, const Eigen::VectorXd& g,
                                    const LatticePmf& pmf, Method method);

RejectionRegion region_from_pvalues(const LatticePmf& pmf,
                                    const std::vector<double>& pvalues, double alpha,
                                    Method method);

RejectionRegion conditional_rejection_region(const GenotypeCounts& counts, int v,
                                             double alpha, Method method);

/// Conditional type-I error for every v = 1..n-1 at each alpha; p-values are
/// computed once per (v, method) and reused across alpha levels.
struct ConditionalErrorTable {
  GenotypeCounts counts;
  std::vector<Method> methods;
  std::vector<double> alphas;
  // errors[m][a][v-1]
  std::vector<std::vector<std::vector<double>>> errors;

  std::vector<int> invalid_v(size_t method_idx, size_t alpha_idx,
                             double slack = 1e-12) const;
};

ConditionalErrorTable compute_conditional_errors(const GenotypeCounts& counts,
                                                 const std::vector<Method>& methods,
                                                 const std::vector<double>& alphas,
                                                 int threads = 1);

struct ErrorProfile {
  Method method = Method::normal;
  double alpha = 0.0;
  std::vector<double> cond_error;  // index v-1, v = 1..n-1
  std::vector<int> invalid_v;
  std::vector<double> mu_grid;
  std::vector<double> overall_error;
  std::vector<double> invalid_prob;
};

ErrorProfile error_profile(const GenotypeCounts& counts, double alpha, Method method,
                           const std::vector<double>& mu_grid, int threads = 1);

double binomial_logpmf(int n, double mu, int v);

struct ConfidenceInterval {
  double lower = 0.0;
  double upper = 1.0;
};
/// Clopper-Pearson interval for k successes out of n.
ConfidenceInterval clopper_pearson(long k, long n, double level = 0.95);

/// Intercept for the two-covariate simulation model so that
/// P(Y=1) = target under X1 ~ Bern(1/2), X2 ~ N(0,1):
/// 0.5 E[ sigmoid(b0 + X2) + sigmoid(b0 + 1 + X2) ] = target.
double solve_prevalence_intercept(double target, int gh_nodes = 64);
double prevalence_for_intercept(double beta0, int gh_nodes = 64);

/// Covariate sampling conditional on the phenotype (null model, gamma = 0):
/// X1 | y from its two-point conditional law; X2 | y by rejection sampling
/// with the standard normal envelope (the conditional density is phi(x)
/// times an average of Bernoulli likelihoods, which is <= phi(x)).
class ConditionalCovariateSampler {
 public:
  explicit ConditionalCovariateSampler(double beta0, int gh_nodes = 64);

  double p_x1_given_y(int y) const { return y ? p1_case_ : p1_control_; }
  /// Average acceptance probability of the x2 rejection sampler.
  double x2_acceptance(int y) const { return y ? accept_case_ : accept_control_; }

  template <class Rng>
  int sample_x1(int y, Rng& rng) const {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    return unif(rng) < p_x1_given_y(y) ? 1 : 0;
  }

  template <class Rng>
  double sample_x2(int y, Rng& rng) const {
    std::normal_distribution<double> norm(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (;;) {
      double z = norm(rng);
      if (unif(rng) < likelihood_weight(z, y)) return z;
    }
  }

  double likelihood_weight(double x2, int y) const;  // in (0,1]

 private:
  double beta0_;
  double p1_case_ = 0.5;
  double p1_control_ = 0.5;
  double accept_case_ = 0.0;
  double accept_control_ = 0.0;
};

struct SimConfig {
  int n = 2000;
  int cases = 40;
  double maf = 0.05;
  double alpha = 1e-3;
  long replicates = 100000;
  std::vector<Method> methods{Method::dspa_cc, Method::espa_cc, Method::espa};
  std::uint64_t seed = 1;
  int threads = 1;
  double beta0 = -5.6;  // simulation design intercept
};

struct SimMethodResult {
  Method method = Method::normal;
  long rejections = 0;
  double rate = 0.0;
  ConfidenceInterval ci;
};

struct SimResult {
  long replicates = 0;
  long untestable = 0;  // monomorphic genotype draws (no test performed)
  long fit_failures = 0;
  std::vector<SimMethodResult> methods;
};

/// Conditional type-I-error simulation: phenotype vector fixed at the given
/// case count, covariates sampled given y, genotype independent of y.
/// Per-replicate RNG substreams derived from the seed make the result
/// independent of the thread count.
SimResult simulate_conditional_t1e(const SimConfig& config);

}  // namespace latscore

#endif
