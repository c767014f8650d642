#ifndef LATSCORE_SADDLEPOINT_HPP
#define LATSCORE_SADDLEPOINT_HPP

#include <Eigen/Dense>

#include "latscore/cgf.hpp"
#include "latscore/exact.hpp"
#include "latscore/method.hpp"
#include "latscore/model.hpp"

namespace latscore {

struct SaddleSolution {
  Eigen::VectorXd t_hat;
  bool converged = false;
  bool out_of_range = false;  // target outside the attainable mean range
  int iterations = 0;
  double residual = 0.0;
};

struct TailResult {
  double survival = 0.0;
  double w = 0.0;
  double v = 0.0;
  Method method = Method::dspa_cc;
  bool fallback_used = false;  // near-singular saddlepoint, normal-limit value
  bool boundary = false;       // u at/beyond the support; clamped value
};

class SaddleError : public std::runtime_error {
 public:
  SaddleError(Method m, const std::string& what)
      : std::runtime_error(method_name(m) + ": " + what), method_(m) {}
  Method method() const { return method_; }

 private:
  Method method_;
};

/// Newton solve of grad K(t) = (0,...,0, target)' from t = 0 with
/// step-halving on the residual norm.
SaddleSolution solve_double(const MultivariateCgf& cgf, double target,
                            int max_iterations = 100, double tol_scale = 1e-10);

/// Safeguarded Newton (expanding bracket + bisection) for K'(t) = target.
SaddleSolution solve_single(const ScalarCgf& cgf, double target,
                            int max_iterations = 200, double tol_scale = 1e-12);

/// Barndorff-Nielsen r* combination. Callers guarantee w != 0, v/w > 0.
double bn_zscore(double w, double v);
/// Survival 1 - Phi(r*), clamped to [0,1].
double bn_tail(double w, double v);
/// Lugannani-Rice comparator, diagnostic only: 1 - Phi(w) + phi(w)(1/v - 1/w).
/// Deliberately unclamped so out-of-range output stays observable.
double lr_tail_diagnostic(double w, double v);

/// Double-saddlepoint survival with the second continuity correction,
/// P(U >= u | U_beta = 0), target u - 1/2. Works for any MultivariateCgf
/// whose last coordinate is the genotype direction (exact or fast joint CGF).
class DspaEngine {
 public:
  DspaEngine(const MultivariateCgf& joint, double log_det_hbeta0, double var_cond,
             SupportBounds support, Method tag);

  TailResult survival(double u) const;
  /// Lattice left tail P(U <= u) = 1 - survival(u + 1).
  double left_tail(double u) const;
  const SupportBounds& support() const { return support_; }

 private:
  const MultivariateCgf& joint_;
  double log_det_hb0_;
  double var_cond_;
  SupportBounds support_;
  Method tag_;
};

/// Single-saddlepoint tails on the efficient score. Corrected mode applies
/// the second continuity correction on the conditional lattice; continuous
/// mode is the plain Barndorff-Nielsen approximation on the unconditional
/// efficient-score distribution (its domain is the attainable range of K',
/// wider than the conditional lattice support).
class EspaEngine {
 public:
  EspaEngine(const ScalarCgf& cgf, double var_cond, SupportBounds lattice_support,
             Method tag, bool corrected);

  TailResult survival(double u) const;
  double left_tail(double u) const;

  /// Continuous-right / continuous-left tails at an arbitrary point, used by
  /// the uncorrected two-sided rule (reflection at exactly -u).
  TailResult continuous_survival(double x) const;
  TailResult continuous_left(double x) const;

  const SupportBounds& support() const { return support_; }

 private:
  TailResult corrected_survival(double u) const;

  const ScalarCgf& cgf_;
  double var_cond_;
  SupportBounds support_;
  Method tag_;
  bool corrected_;
};

/// Threshold below which the removable singularity of the r* formula is
/// replaced by the normal-limit tail of the (corrected) standardized score.
inline constexpr double kSaddleFallbackThreshold = 1e-4;

double log_det_llt(const Eigen::MatrixXd& m);  // via Cholesky, throws if not PD

// One-call forms over a null fit and raw genotype vector.
TailResult dspa_cc_survival(const NullFit& fit, const Eigen::VectorXd& g, double u);
TailResult espa_survival(const NullFit& fit, const Eigen::VectorXd& g, double u,
                         bool corrected);
double left_tail(Method method, const NullFit& fit, const Eigen::VectorXd& g, double u);

}  // namespace latscore

#endif
