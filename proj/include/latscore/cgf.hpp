#ifndef LATSCORE_CGF_HPP
#define LATSCORE_CGF_HPP

#include <Eigen/Dense>

#include "latscore/model.hpp"

namespace latscore {

struct CgfEval {
  double value = 0.0;
  Eigen::VectorXd grad;
  Eigen::MatrixXd hess;
};

/// Cumulant generating function of a multivariate score sum, with gradient
/// and Hessian. Implementations must be pure and reentrant.
class MultivariateCgf {
 public:
  virtual ~MultivariateCgf() = default;
  virtual Eigen::Index dim() const = 0;
  virtual CgfEval eval(const Eigen::VectorXd& t) const = 0;
};

/// Scalar CGF with first and second derivatives.
class ScalarCgf {
 public:
  virtual ~ScalarCgf() = default;
  virtual void eval(double t, double& k, double& k1, double& k2) const = 0;
  /// Attainable range of k'(t) as t -> -inf / +inf.
  virtual double deriv_inf() const = 0;
  virtual double deriv_sup() const = 0;
};

// Per-observation pieces, overflow-safe for any finite s = t'z. The
// e^{-s} algebraic form is used for s > 0 so every exponential argument
// stays non-positive.
double cgf_term(double mu, double s);      // ln(1 - mu + mu e^s) - mu s
double tilted_prob(double mu, double s);   // mu e^s / (1 - mu + mu e^s)

/// Joint CGF of (U_beta, U_gamma) over z_i = (x_i', g_i)'.
class JointCgf : public MultivariateCgf {
 public:
  JointCgf(const NullFit& fit, const Eigen::VectorXd& g) : fit_(fit), g_(g) {}
  Eigen::Index dim() const override { return fit_.d() + 1; }
  CgfEval eval(const Eigen::VectorXd& t) const override;

 private:
  const NullFit& fit_;
  const Eigen::VectorXd& g_;
};

/// Marginal CGF of U_beta (z_i replaced by x_i).
class MarginalCgf : public MultivariateCgf {
 public:
  explicit MarginalCgf(const NullFit& fit) : fit_(fit) {}
  Eigen::Index dim() const override { return fit_.d(); }
  CgfEval eval(const Eigen::VectorXd& t) const override;

 private:
  const NullFit& fit_;
};

/// CGF of the efficient score g~'(Y - mu_hat), unconditional with
/// mu_hat plugged in.
class EfficientCgf : public ScalarCgf {
 public:
  EfficientCgf(const Eigen::VectorXd& g_tilde, const Eigen::VectorXd& mu)
      : g_tilde_(g_tilde), mu_(mu) {}
  void eval(double t, double& k, double& k1, double& k2) const override;
  double deriv_inf() const override;
  double deriv_sup() const override;

 private:
  const Eigen::VectorXd& g_tilde_;
  const Eigen::VectorXd& mu_;
};

}  // namespace latscore

#endif
