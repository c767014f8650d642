#include "latscore/saddlepoint.hpp"

#include <cmath>

#include "latscore/fast.hpp"
#include "latscore/numerics.hpp"

namespace latscore {

namespace {

// Full-system damped Newton from t = 0. Fast when it works; steps that fail
// to reduce the residual after repeated halving abort the attempt.
SaddleSolution newton_full(const MultivariateCgf& cgf, double target,
                           int max_iterations, double tol) {
  const Eigen::Index dim = cgf.dim();
  Eigen::VectorXd target_vec = Eigen::VectorXd::Zero(dim);
  target_vec[dim - 1] = target;

  SaddleSolution sol;
  Eigen::VectorXd t = Eigen::VectorXd::Zero(dim);
  CgfEval ev = cgf.eval(t);
  double rnorm = (ev.grad - target_vec).lpNorm<Eigen::Infinity>();
  int it = 0;
  for (; it < max_iterations && rnorm > tol; ++it) {
    Eigen::LDLT<Eigen::MatrixXd> ldlt(ev.hess);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) break;
    Eigen::VectorXd step = ldlt.solve(target_vec - ev.grad);
    double scale = 1.0;
    bool accepted = false;
    for (int h = 0; h < 60; ++h) {
      Eigen::VectorXd t_try = t + scale * step;
      CgfEval ev_try = cgf.eval(t_try);
      double rnorm_try = (ev_try.grad - target_vec).lpNorm<Eigen::Infinity>();
      if (std::isfinite(rnorm_try) && rnorm_try < rnorm) {
        t = t_try;
        ev = ev_try;
        rnorm = rnorm_try;
        accepted = true;
        break;
      }
      scale *= 0.5;
    }
    if (!accepted) break;
  }
  sol.t_hat = t;
  sol.iterations = it;
  sol.residual = rnorm;
  sol.converged = rnorm <= tol;
  return sol;
}

// Inner stage of the profile solver: with the last coordinate pinned, drive
// the nuisance block of the gradient to zero (convex subproblem).
bool solve_beta_block(const MultivariateCgf& cgf, Eigen::VectorXd& t, CgfEval& ev,
                      double tol) {
  const Eigen::Index d = cgf.dim() - 1;
  double rnorm = ev.grad.head(d).lpNorm<Eigen::Infinity>();
  for (int it = 0; it < 100 && rnorm > tol; ++it) {
    Eigen::LLT<Eigen::MatrixXd> llt(ev.hess.topLeftCorner(d, d));
    if (llt.info() != Eigen::Success) return false;
    Eigen::VectorXd step = llt.solve(-ev.grad.head(d));
    double scale = 1.0;
    bool accepted = false;
    for (int h = 0; h < 60; ++h) {
      Eigen::VectorXd t_try = t;
      t_try.head(d) += scale * step;
      CgfEval ev_try = cgf.eval(t_try);
      double rnorm_try = ev_try.grad.head(d).lpNorm<Eigen::Infinity>();
      if (std::isfinite(rnorm_try) && rnorm_try < rnorm) {
        t = t_try;
        ev = ev_try;
        rnorm = rnorm_try;
        accepted = true;
        break;
      }
      scale *= 0.5;
    }
    if (!accepted) return false;
  }
  return rnorm <= tol;
}

// Robust fallback: profile the gamma coordinate. The profiled derivative
// d/dt_gamma K(t_beta*(t_gamma), t_gamma) is increasing, so an expanding
// bracket plus safeguarded Newton (Schur-complement slope) always lands.
SaddleSolution solve_profile(const MultivariateCgf& cgf, double target, double tol) {
  const Eigen::Index dim = cgf.dim();
  const Eigen::Index d = dim - 1;
  SaddleSolution sol;
  Eigen::VectorXd t = Eigen::VectorXd::Zero(dim);
  CgfEval ev = cgf.eval(t);
  const double inner_tol = 0.1 * tol;

  auto profile_at = [&](double tg, Eigen::VectorXd& t_io, CgfEval& ev_io) -> bool {
    t_io[d] = tg;
    ev_io = cgf.eval(t_io);
    return solve_beta_block(cgf, t_io, ev_io, inner_tol);
  };

  double r0 = ev.grad[d] - target;
  bool have_lo = r0 < 0.0, have_hi = r0 > 0.0;
  double lo = 0.0, hi = 0.0;
  double step = 1.0;
  Eigen::VectorXd t_probe = t;
  CgfEval ev_probe = ev;
  while (!have_lo || !have_hi) {
    double cand = have_lo ? lo + step : hi - step;
    if (!profile_at(cand, t_probe, ev_probe)) {
      sol.t_hat = t_probe;
      return sol;
    }
    double r = ev_probe.grad[d] - target;
    if (!std::isfinite(r)) {
      sol.t_hat = t_probe;
      return sol;
    }
    if (r > 0.0) {
      hi = cand;
      have_hi = true;
    } else {
      lo = cand;
      have_lo = true;
    }
    step *= 2.0;
    if (step > 1e9) {
      sol.t_hat = t_probe;
      return sol;
    }
  }

  double tg = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    if (!profile_at(tg, t, ev)) {
      tg = 0.5 * (lo + hi);
      if (!profile_at(tg, t, ev)) {
        sol.t_hat = t;
        return sol;
      }
    }
    double r = ev.grad[d] - target;
    double full_resid = (ev.grad - Eigen::VectorXd::Unit(dim, d) * target)
                            .lpNorm<Eigen::Infinity>();
    if (full_resid <= tol) {
      sol.t_hat = t;
      sol.iterations = it;
      sol.residual = full_resid;
      sol.converged = true;
      return sol;
    }
    if (r > 0.0) hi = tg;
    else lo = tg;
    // profiled slope: Schur complement of the beta block
    Eigen::LLT<Eigen::MatrixXd> llt(ev.hess.topLeftCorner(d, d));
    double slope = ev.hess(d, d);
    if (llt.info() == Eigen::Success) {
      Eigen::VectorXd cross = ev.hess.topRightCorner(d, 1);
      slope -= cross.dot(llt.solve(cross));
    }
    double tg_next = slope > 0.0 ? tg - r / slope : 0.5 * (lo + hi);
    if (!std::isfinite(tg_next) || tg_next <= lo || tg_next >= hi)
      tg_next = 0.5 * (lo + hi);
    tg = tg_next;
  }
  sol.t_hat = t;
  sol.residual = (ev.grad - Eigen::VectorXd::Unit(dim, d) * target)
                     .lpNorm<Eigen::Infinity>();
  sol.converged = sol.residual <= tol;
  return sol;
}

}  // namespace

SaddleSolution solve_double(const MultivariateCgf& cgf, double target,
                            int max_iterations, double tol_scale) {
  const double tol = tol_scale * (1.0 + std::abs(target));
  SaddleSolution sol = newton_full(cgf, target, max_iterations, tol);
  if (sol.converged) return sol;
  // deep-tail targets under extreme imbalance can defeat the plain Newton
  // iteration; the profiled bracketed solve is slower but always lands
  return solve_profile(cgf, target, tol);
}

SaddleSolution solve_single(const ScalarCgf& cgf, double target,
                            int max_iterations, double tol_scale) {
  SaddleSolution sol;
  sol.t_hat.resize(1);
  if (!(target > cgf.deriv_inf() && target < cgf.deriv_sup())) {
    sol.out_of_range = true;
    sol.t_hat[0] = target >= cgf.deriv_sup() ? std::numeric_limits<double>::infinity()
                                             : -std::numeric_limits<double>::infinity();
    return sol;
  }
  const double tol = tol_scale * (1.0 + std::abs(target));

  double k, k1, k2;
  cgf.eval(0.0, k, k1, k2);
  double r0 = k1 - target;
  if (std::abs(r0) <= tol) {
    sol.t_hat[0] = 0.0;
    sol.converged = true;
    return sol;
  }
  // K' is increasing, so r(0) > 0 puts the root left of zero.
  bool have_lo = r0 < 0.0, have_hi = r0 > 0.0;
  double lo = 0.0, hi = 0.0;
  double step = 1.0;
  while (!have_lo || !have_hi) {
    double cand = have_lo ? lo + step : hi - step;
    cgf.eval(cand, k, k1, k2);
    double r = k1 - target;
    if (!std::isfinite(r)) return sol;
    if (r > 0.0) {
      hi = cand;
      have_hi = true;
    } else {
      lo = cand;
      have_lo = true;
    }
    step *= 2.0;
    if (step > 1e18) return sol;
  }

  double t = 0.5 * (lo + hi);
  int it = 0;
  for (; it < max_iterations; ++it) {
    cgf.eval(t, k, k1, k2);
    double r = k1 - target;
    if (std::abs(r) <= tol) {
      sol.t_hat[0] = t;
      sol.iterations = it;
      sol.residual = std::abs(r);
      sol.converged = true;
      return sol;
    }
    if (r > 0.0) hi = t;
    else lo = t;
    double t_next = (k2 > 0.0) ? t - r / k2 : 0.5 * (lo + hi);
    if (!std::isfinite(t_next) || t_next <= lo || t_next >= hi)
      t_next = 0.5 * (lo + hi);
    t = t_next;
  }
  cgf.eval(t, k, k1, k2);
  sol.t_hat[0] = t;
  sol.iterations = it;
  sol.residual = std::abs(k1 - target);
  sol.converged = sol.residual <= tol * 100.0;  // bisection end state
  return sol;
}

double bn_zscore(double w, double v) { return w + (1.0 / w) * std::log(v / w); }

double bn_tail(double w, double v) {
  double s = norm_sf(bn_zscore(w, v));
  if (s < 0.0) return 0.0;
  if (s > 1.0) return 1.0;
  return s;
}

double lr_tail_diagnostic(double w, double v) {
  return norm_sf(w) + norm_pdf(w) * (1.0 / v - 1.0 / w);
}

double log_det_llt(const Eigen::MatrixXd& m) {
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("log_det_llt: matrix not positive definite");
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

// ---------------- double saddlepoint ----------------

DspaEngine::DspaEngine(const MultivariateCgf& joint, double log_det_hbeta0,
                       double var_cond, SupportBounds support, Method tag)
    : joint_(joint),
      log_det_hb0_(log_det_hbeta0),
      var_cond_(var_cond),
      support_(support),
      tag_(tag) {}

TailResult DspaEngine::survival(double u) const {
  TailResult res;
  res.method = tag_;
  if (u <= support_.lower + 0.25) {
    res.survival = 1.0;
    res.boundary = true;
    return res;
  }
  if (u > support_.upper + 0.25) {
    res.survival = 0.0;
    res.boundary = true;
    return res;
  }
  const double target = u - 0.5;
  SaddleSolution sol = solve_double(joint_, target);
  if (!sol.converged)
    throw SaddleError(tag_, "double saddlepoint did not converge (target " +
                                std::to_string(target) + ")");
  const double tg = sol.t_hat[sol.t_hat.size() - 1];
  if (std::abs(tg) < kSaddleFallbackThreshold) {
    res.survival = norm_sf(target / std::sqrt(var_cond_));
    res.fallback_used = true;
    return res;
  }
  CgfEval ev = joint_.eval(sol.t_hat);
  double arg = 2.0 * (-ev.value + tg * target);
  res.w = std::copysign(std::sqrt(std::max(arg, 0.0)), tg);
  if (std::abs(res.w) < kSaddleFallbackThreshold) {
    res.survival = norm_sf(target / std::sqrt(var_cond_));
    res.fallback_used = true;
    return res;
  }
  double log_det_ratio = log_det_llt(ev.hess) - log_det_hb0_;
  res.v = 2.0 * std::sinh(0.5 * tg) * std::exp(0.5 * log_det_ratio);
  res.survival = bn_tail(res.w, res.v);
  return res;
}

double DspaEngine::left_tail(double u) const { return 1.0 - survival(u + 1.0).survival; }

// ---------------- single saddlepoint ----------------

EspaEngine::EspaEngine(const ScalarCgf& cgf, double var_cond,
                       SupportBounds lattice_support, Method tag, bool corrected)
    : cgf_(cgf),
      var_cond_(var_cond),
      support_(lattice_support),
      tag_(tag),
      corrected_(corrected) {}

TailResult EspaEngine::corrected_survival(double u) const {
  TailResult res;
  res.method = tag_;
  if (u <= support_.lower + 0.25) {
    res.survival = 1.0;
    res.boundary = true;
    return res;
  }
  if (u > support_.upper + 0.25) {
    res.survival = 0.0;
    res.boundary = true;
    return res;
  }
  const double target = u - 0.5;
  SaddleSolution sol = solve_single(cgf_, target);
  if (sol.out_of_range || !sol.converged)
    throw SaddleError(tag_, "single saddlepoint did not converge (target " +
                                std::to_string(target) + ")");
  const double t = sol.t_hat[0];
  if (std::abs(t) < kSaddleFallbackThreshold) {
    res.survival = norm_sf(target / std::sqrt(var_cond_));
    res.fallback_used = true;
    return res;
  }
  double k, k1, k2;
  cgf_.eval(t, k, k1, k2);
  double arg = 2.0 * (t * target - k);
  res.w = std::copysign(std::sqrt(std::max(arg, 0.0)), t);
  if (std::abs(res.w) < kSaddleFallbackThreshold) {
    res.survival = norm_sf(target / std::sqrt(var_cond_));
    res.fallback_used = true;
    return res;
  }
  res.v = 2.0 * std::sinh(0.5 * t) * std::sqrt(k2);
  res.survival = bn_tail(res.w, res.v);
  return res;
}

TailResult EspaEngine::continuous_survival(double x) const {
  TailResult res;
  res.method = tag_;
  if (x <= cgf_.deriv_inf()) {
    res.survival = 1.0;
    res.boundary = true;
    return res;
  }
  if (x >= cgf_.deriv_sup()) {
    res.survival = 0.0;
    res.boundary = true;
    return res;
  }
  SaddleSolution sol = solve_single(cgf_, x);
  if (sol.out_of_range || !sol.converged)
    throw SaddleError(tag_, "single saddlepoint did not converge (target " +
                                std::to_string(x) + ")");
  const double t = sol.t_hat[0];
  if (std::abs(t) < kSaddleFallbackThreshold) {
    res.survival = norm_sf(x / std::sqrt(var_cond_));
    res.fallback_used = true;
    return res;
  }
  double k, k1, k2;
  cgf_.eval(t, k, k1, k2);
  double arg = 2.0 * (t * x - k);
  res.w = std::copysign(std::sqrt(std::max(arg, 0.0)), t);
  if (std::abs(res.w) < kSaddleFallbackThreshold) {
    res.survival = norm_sf(x / std::sqrt(var_cond_));
    res.fallback_used = true;
    return res;
  }
  res.v = t * std::sqrt(k2);
  res.survival = bn_tail(res.w, res.v);
  return res;
}

TailResult EspaEngine::continuous_left(double x) const {
  TailResult res = continuous_survival(x);
  if (res.boundary || res.fallback_used) {
    res.survival = 1.0 - res.survival;
    return res;
  }
  // Full-precision complement: Phi(z) instead of 1 - (1 - Phi(z)).
  double z = bn_zscore(res.w, res.v);
  double l = norm_cdf(z);
  res.survival = l < 0.0 ? 0.0 : (l > 1.0 ? 1.0 : l);
  return res;
}

TailResult EspaEngine::survival(double u) const {
  if (corrected_) return corrected_survival(u);
  TailResult res = continuous_survival(u);
  // The continuous target u is unattainable at the lattice maximum when the
  // conditional support coincides with the CGF range; report the nearest
  // interior evaluation (the half-step-in target) with a boundary flag.
  if (res.boundary && u > support_.lower + 0.25 && u <= support_.upper + 0.25) {
    res = continuous_survival(u - 0.5);
    res.boundary = true;
  }
  return res;
}

double EspaEngine::left_tail(double u) const { return 1.0 - survival(u + 1.0).survival; }

// ---------------- one-call forms ----------------

TailResult dspa_cc_survival(const NullFit& fit, const Eigen::VectorXd& g, double u) {
  JointCgf joint(fit, g);
  double log_det_hb0 = log_det_llt(fit.xtwx);
  double fgg = conditional_variance(fit, g);
  SupportBounds sb = conditional_support(fit, g);
  DspaEngine engine(joint, log_det_hb0, fgg, sb, Method::dspa_cc);
  return engine.survival(u);
}

TailResult espa_survival(const NullFit& fit, const Eigen::VectorXd& g, double u,
                         bool corrected) {
  Eigen::VectorXd g_tilde = efficient_genotype(fit, g);
  EfficientCgf cgf(g_tilde, fit.mu_hat);
  double fgg = conditional_variance(fit, g);
  SupportBounds sb = conditional_support(fit, g);
  EspaEngine engine(cgf, fgg, sb, corrected ? Method::espa_cc : Method::espa, corrected);
  return engine.survival(u);
}

double left_tail(Method method, const NullFit& fit, const Eigen::VectorXd& g, double u) {
  switch (method) {
    case Method::dspa_cc:
      return 1.0 - dspa_cc_survival(fit, g, u + 1.0).survival;
    case Method::espa_cc:
      return 1.0 - espa_survival(fit, g, u + 1.0, true).survival;
    case Method::espa:
      return 1.0 - espa_survival(fit, g, u + 1.0, false).survival;
    case Method::fast_dspa_cc: {
      CarrierPartition part = make_carrier_partition(fit, g);
      return 1.0 - fast_dspa_cc_survival(fit, part, g, u + 1.0).survival;
    }
    case Method::fast_spa: {
      CarrierPartition part = make_carrier_partition(fit, g);
      return 1.0 - fast_spa_survival(fit, part, g, u + 1.0).survival;
    }
    case Method::exact_intercept:
    case Method::exact_binary:
      // handled by the pvalue module against the exact pmf
      throw std::invalid_argument("left_tail: use the exact pmf for exact methods");
  }
  throw std::invalid_argument("left_tail: unsupported method");
}

}  // namespace latscore
