#ifndef LATSCORE_MODEL_HPP
#define LATSCORE_MODEL_HPP

#include <stdexcept>
#include <string>

#include <Eigen/Dense>

#include "latscore/exact.hpp"

namespace latscore {

/// One analysis unit: binary response, design matrix whose first column
/// is the intercept, and a single genotype vector with entries in {0,1,2}.
struct Dataset {
  Eigen::VectorXd y;
  Eigen::MatrixXd X;
  Eigen::VectorXd g;

  void validate() const;
};

class FitError : public std::runtime_error {
 public:
  enum class Kind { non_convergence, separation, rank_deficient, degenerate_response };
  FitError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

/// Restricted (gamma = 0) maximum likelihood fit of the null logistic model.
/// Immutable after construction; shared freely across per-variant work.
struct NullFit {
  Eigen::VectorXd beta_hat;
  Eigen::VectorXd mu_hat;
  Eigen::VectorXd w_hat;  // mu_hat * (1 - mu_hat)
  Eigen::MatrixXd xtwx;
  Eigen::LLT<Eigen::MatrixXd> xtwx_factor;
  Eigen::VectorXd y;
  Eigen::VectorXd resid;  // y - mu_hat
  Eigen::MatrixXd X;
  int iterations = 0;

  Eigen::Index n() const { return y.size(); }
  Eigen::Index d() const { return X.cols(); }
  bool is_intercept_only() const;
  /// Second column binary 0/1 with an intercept: the exact binary-covariate
  /// machinery applies.
  bool is_intercept_plus_binary() const;
};

struct FitOptions {
  int max_iterations = 50;
  double tolerance_per_n = 1e-8;     // convergence: ||X'(y-mu)||_inf <= tol * n
  double separation_bound = 1e-12;   // mu outside (b, 1-b) flags separation
};

NullFit fit_null(const Eigen::VectorXd& y, const Eigen::MatrixXd& X,
                 const FitOptions& opts = {});
NullFit fit_null(const Dataset& data, const FitOptions& opts = {});

/// Observed score u = g'(y - mu_hat).
double score_statistic(const NullFit& fit, const Eigen::VectorXd& g);

/// Efficient genotype g~ = g - X (X'WX)^{-1} X'W g.
Eigen::VectorXd efficient_genotype(const NullFit& fit, const Eigen::VectorXd& g);

/// Conditional score variance, block form of the Fisher information:
/// g'Wg - g'WX (X'WX)^{-1} X'Wg.
double conditional_variance(const NullFit& fit, const Eigen::VectorXd& g);

/// Per-variant quantities shared by every test method. A variant with
/// zero conditional variance is untestable (monomorphic after projection),
/// not an error.
struct ScoreContext {
  double u = 0.0;
  Eigen::VectorXd g_tilde;
  double var_cond = 0.0;
  SupportBounds support;
  bool testable = false;
};

ScoreContext make_score_context(const NullFit& fit, const Eigen::VectorXd& g);

}  // namespace latscore

#endif
