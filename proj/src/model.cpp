#include "latscore/model.hpp"

#include <cmath>

#include "latscore/numerics.hpp"

namespace latscore {

void Dataset::validate() const {
  const Eigen::Index n = y.size();
  if (X.rows() != n) throw std::invalid_argument("Dataset: X row count != length of y");
  if (g.size() != 0 && g.size() != n)
    throw std::invalid_argument("Dataset: genotype length != length of y");
  if (X.cols() < 1 || n < X.cols())
    throw std::invalid_argument("Dataset: need n >= d >= 1");
  for (Eigen::Index i = 0; i < n; ++i) {
    if (y[i] != 0.0 && y[i] != 1.0)
      throw std::invalid_argument("Dataset: response must be 0/1");
    if (X(i, 0) != 1.0)
      throw std::invalid_argument("Dataset: first design column must be the intercept");
    if (g.size() == n) {
      double gi = g[i];
      if (gi != 0.0 && gi != 1.0 && gi != 2.0)
        throw std::invalid_argument("Dataset: genotype entries must be in {0,1,2}");
    }
  }
}

bool NullFit::is_intercept_only() const { return X.cols() == 1; }

bool NullFit::is_intercept_plus_binary() const {
  if (X.cols() != 2) return false;
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    double x = X(i, 1);
    if (x != 0.0 && x != 1.0) return false;
  }
  return true;
}

NullFit fit_null(const Eigen::VectorXd& y, const Eigen::MatrixXd& X,
                 const FitOptions& opts) {
  const Eigen::Index n = y.size();
  const Eigen::Index d = X.cols();
  if (X.rows() != n || d < 1 || n < d)
    throw std::invalid_argument("fit_null: bad dimensions");
  const double ysum = y.sum();
  if (ysum <= 0.0 || ysum >= static_cast<double>(n))
    throw FitError(FitError::Kind::degenerate_response,
                   "fit_null: response all zeros or all ones");

  const double tol = opts.tolerance_per_n * static_cast<double>(n);
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(d);
  beta[0] = logit(ysum / static_cast<double>(n));
  Eigen::VectorXd eta = X * beta;
  Eigen::VectorXd mu = eta.unaryExpr([](double e) { return sigmoid(e); });
  Eigen::VectorXd score = X.transpose() * (y - mu);
  double score_norm = score.lpNorm<Eigen::Infinity>();

  NullFit fit;
  int it = 0;
  for (; it < opts.max_iterations && score_norm > tol; ++it) {
    Eigen::VectorXd w = mu.array() * (1.0 - mu.array());
    Eigen::MatrixXd xtwx = X.transpose() * w.asDiagonal() * X;
    Eigen::LLT<Eigen::MatrixXd> llt(xtwx);
    if (llt.info() != Eigen::Success)
      throw FitError(FitError::Kind::rank_deficient,
                     "fit_null: X'WX not positive definite (rank-deficient design?)");
    Eigen::VectorXd step = llt.solve(score);

    // step-halving on the score norm
    double scale = 1.0;
    for (int h = 0; h < 40; ++h) {
      Eigen::VectorXd beta_try = beta + scale * step;
      Eigen::VectorXd mu_try = (X * beta_try).unaryExpr([](double e) { return sigmoid(e); });
      Eigen::VectorXd score_try = X.transpose() * (y - mu_try);
      double norm_try = score_try.lpNorm<Eigen::Infinity>();
      if (norm_try < score_norm || scale < 1e-8) {
        beta = beta_try;
        mu = mu_try;
        score = score_try;
        score_norm = norm_try;
        break;
      }
      scale *= 0.5;
    }
  }
  if (score_norm > tol)
    throw FitError(FitError::Kind::non_convergence,
                   "fit_null: no convergence after max iterations");
  for (Eigen::Index i = 0; i < n; ++i) {
    if (mu[i] <= opts.separation_bound || mu[i] >= 1.0 - opts.separation_bound)
      throw FitError(FitError::Kind::separation,
                     "fit_null: fitted probability at 0/1 (separation)");
  }

  fit.beta_hat = beta;
  fit.mu_hat = mu;
  fit.w_hat = mu.array() * (1.0 - mu.array());
  fit.xtwx = X.transpose() * fit.w_hat.asDiagonal() * X;
  fit.xtwx_factor.compute(fit.xtwx);
  if (fit.xtwx_factor.info() != Eigen::Success)
    throw FitError(FitError::Kind::rank_deficient, "fit_null: X'WX factorization failed");
  fit.y = y;
  fit.resid = y - mu;
  fit.X = X;
  fit.iterations = it;
  return fit;
}

NullFit fit_null(const Dataset& data, const FitOptions& opts) {
  data.validate();
  return fit_null(data.y, data.X, opts);
}

double score_statistic(const NullFit& fit, const Eigen::VectorXd& g) {
  if (g.size() != fit.n())
    throw std::invalid_argument("score_statistic: genotype length mismatch");
  return g.dot(fit.resid);
}

Eigen::VectorXd efficient_genotype(const NullFit& fit, const Eigen::VectorXd& g) {
  if (g.size() != fit.n())
    throw std::invalid_argument("efficient_genotype: genotype length mismatch");
  Eigen::VectorXd xtwg = fit.X.transpose() * (fit.w_hat.asDiagonal() * g);
  Eigen::VectorXd coef = fit.xtwx_factor.solve(xtwg);
  return g - fit.X * coef;
}

double conditional_variance(const NullFit& fit, const Eigen::VectorXd& g) {
  if (g.size() != fit.n())
    throw std::invalid_argument("conditional_variance: genotype length mismatch");
  Eigen::VectorXd wg = fit.w_hat.asDiagonal() * g;
  Eigen::VectorXd xtwg = fit.X.transpose() * wg;
  double quad = xtwg.dot(fit.xtwx_factor.solve(xtwg));
  double var = g.dot(wg) - quad;
  return var > 0.0 ? var : 0.0;
}

ScoreContext make_score_context(const NullFit& fit, const Eigen::VectorXd& g) {
  ScoreContext ctx;
  ctx.u = score_statistic(fit, g);
  ctx.g_tilde = efficient_genotype(fit, g);
  ctx.var_cond = conditional_variance(fit, g);
  ctx.support = conditional_support(fit, g);
  ctx.testable = ctx.var_cond > 0.0 && ctx.support.upper > ctx.support.lower;
  return ctx;
}

}  // namespace latscore
