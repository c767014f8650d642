#ifndef LATSCORE_FAST_HPP
#define LATSCORE_FAST_HPP

#include <vector>

#include <Eigen/Dense>

#include "latscore/cgf.hpp"
#include "latscore/model.hpp"
#include "latscore/saddlepoint.hpp"

namespace latscore {

/// Carrier/non-carrier split for the speed-up CGFs. Cov(U_beta) = X'WX is
/// dataset-wide (taken from the null fit); the carrier block is the only
/// per-variant O(m) work.
struct CarrierPartition {
  std::vector<int> carriers;  // indices with g_i > 0
  Eigen::MatrixXd cov_carrier;
  Eigen::MatrixXd cov_rest;  // Cov(U_beta) - carrier block
  Eigen::MatrixXd x_carrier;
  Eigen::VectorXd mu_carrier;
  Eigen::VectorXd w_carrier;
  Eigen::VectorXd g_carrier;
};

CarrierPartition make_carrier_partition(const NullFit& fit, const Eigen::VectorXd& g);

/// Joint CGF with the non-carrier contribution replaced by the normal
/// (quadratic) CGF of U*_beta.
class FastJointCgf : public MultivariateCgf {
 public:
  FastJointCgf(const NullFit& fit, const CarrierPartition& part)
      : fit_(fit), part_(part) {}
  Eigen::Index dim() const override { return fit_.d() + 1; }
  CgfEval eval(const Eigen::VectorXd& t) const override;

 private:
  const NullFit& fit_;
  const CarrierPartition& part_;
};

/// Fully quadratic marginal CGF, 0.5 t' Cov(U_beta) t.
class FastMarginalCgf : public MultivariateCgf {
 public:
  explicit FastMarginalCgf(const NullFit& fit) : fit_(fit) {}
  Eigen::Index dim() const override { return fit_.d(); }
  CgfEval eval(const Eigen::VectorXd& t) const override;

 private:
  const NullFit& fit_;
};

/// Efficient-score pieces restricted to carriers: g~ on carrier rows, the
/// non-carrier variance in closed form, and the observed score, all O(m d)
/// plus one O(d^2) solve.
struct FastEfficientContext {
  Eigen::VectorXd g_tilde_carrier;
  Eigen::VectorXd mu_carrier;
  double noncarrier_var = 0.0;  // sum over g_i = 0 of g~_i^2 w_i
  double var_cond = 0.0;        // full g~' W g~
  double u = 0.0;               // observed score (carrier rows only)
};

FastEfficientContext make_fast_efficient_context(const NullFit& fit,
                                                 const CarrierPartition& part);

/// Efficient-score CGF with the non-carrier sum replaced by its normal CGF.
class FastEfficientCgf : public ScalarCgf {
 public:
  explicit FastEfficientCgf(const FastEfficientContext& ctx) : ctx_(ctx) {}
  void eval(double t, double& k, double& k1, double& k2) const override;
  double deriv_inf() const override;
  double deriv_sup() const override;

 private:
  const FastEfficientContext& ctx_;
};

TailResult fast_dspa_cc_survival(const NullFit& fit, const CarrierPartition& part,
                                 const Eigen::VectorXd& g, double u);
TailResult fast_spa_survival(const NullFit& fit, const CarrierPartition& part,
                             const Eigen::VectorXd& g, double u,
                             bool corrected = false);

}  // namespace latscore

#endif
