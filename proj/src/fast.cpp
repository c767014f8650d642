#include "latscore/fast.hpp"

#include <cmath>

#include "latscore/numerics.hpp"

namespace latscore {

CarrierPartition make_carrier_partition(const NullFit& fit, const Eigen::VectorXd& g) {
  if (g.size() != fit.n())
    throw std::invalid_argument("make_carrier_partition: genotype length mismatch");
  CarrierPartition part;
  for (Eigen::Index i = 0; i < g.size(); ++i)
    if (g[i] > 0.0) part.carriers.push_back(static_cast<int>(i));
  const Eigen::Index m = static_cast<Eigen::Index>(part.carriers.size());
  const Eigen::Index d = fit.d();
  part.x_carrier.resize(m, d);
  part.mu_carrier.resize(m);
  part.w_carrier.resize(m);
  part.g_carrier.resize(m);
  for (Eigen::Index r = 0; r < m; ++r) {
    int i = part.carriers[static_cast<size_t>(r)];
    part.x_carrier.row(r) = fit.X.row(i);
    part.mu_carrier[r] = fit.mu_hat[i];
    part.w_carrier[r] = fit.w_hat[i];
    part.g_carrier[r] = g[i];
  }
  part.cov_carrier =
      part.x_carrier.transpose() * part.w_carrier.asDiagonal() * part.x_carrier;
  part.cov_rest = fit.xtwx - part.cov_carrier;
  return part;
}

CgfEval FastJointCgf::eval(const Eigen::VectorXd& t) const {
  const Eigen::Index d = fit_.d();
  const Eigen::Index dim = d + 1;
  CgfEval out;
  out.grad = Eigen::VectorXd::Zero(dim);
  out.hess = Eigen::MatrixXd::Zero(dim, dim);
  Eigen::VectorXd gcomp = Eigen::VectorXd::Zero(dim);
  Eigen::VectorXd z(dim);
  double vsum = 0.0, vcomp = 0.0;
  double* grad = out.grad.data();
  double* comp = gcomp.data();
  double* hess = out.hess.data();
  const double* zp = z.data();
  const double* tp = t.data();
  for (Eigen::Index r = 0; r < part_.g_carrier.size(); ++r) {
    for (Eigen::Index c = 0; c < d; ++c) z[c] = part_.x_carrier(r, c);
    z[d] = part_.g_carrier[r];
    double s = 0.0;
    for (Eigen::Index j = 0; j < dim; ++j) s += tp[j] * zp[j];
    const double m = part_.mu_carrier[r];
    {
      double x = cgf_term(m, s) - vcomp;
      double tt = vsum + x;
      vcomp = (tt - vsum) - x;
      vsum = tt;
    }
    const double p = tilted_prob(m, s);
    const double gw = p - m;
    const double hw = p * (1.0 - p);
    for (Eigen::Index j = 0; j < dim; ++j) {
      double x = gw * zp[j] - comp[j];
      double tt = grad[j] + x;
      comp[j] = (tt - grad[j]) - x;
      grad[j] = tt;
      const double hz = hw * zp[j];
      double* col = hess + j * dim;
      for (Eigen::Index k = j; k < dim; ++k) col[k] += hz * zp[k];
    }
  }
  for (Eigen::Index j = 0; j < dim; ++j)
    for (Eigen::Index k = j + 1; k < dim; ++k) out.hess(j, k) = out.hess(k, j);
  Eigen::VectorXd tb = t.head(d);
  out.value = vsum + 0.5 * tb.dot(part_.cov_rest * tb);
  out.grad.head(d) += part_.cov_rest * tb;
  out.hess.topLeftCorner(d, d) += part_.cov_rest;
  return out;
}

CgfEval FastMarginalCgf::eval(const Eigen::VectorXd& t) const {
  CgfEval out;
  out.value = 0.5 * t.dot(fit_.xtwx * t);
  out.grad = fit_.xtwx * t;
  out.hess = fit_.xtwx;
  return out;
}

FastEfficientContext make_fast_efficient_context(const NullFit& fit,
                                                 const CarrierPartition& part) {
  FastEfficientContext ctx;
  const Eigen::Index m = part.g_carrier.size();
  // X'Wg and g'Wg touch only carrier rows (g vanishes elsewhere).
  Eigen::VectorXd xtwg =
      part.x_carrier.transpose() * (part.w_carrier.asDiagonal() * part.g_carrier);
  Eigen::VectorXd coef = fit.xtwx_factor.solve(xtwg);
  double gwg = part.g_carrier.dot(part.w_carrier.asDiagonal() * part.g_carrier);
  double var = gwg - xtwg.dot(coef);
  ctx.var_cond = var > 0.0 ? var : 0.0;

  ctx.g_tilde_carrier = part.g_carrier - part.x_carrier * coef;
  ctx.mu_carrier = part.mu_carrier;
  KahanSum carrier_var;
  for (Eigen::Index r = 0; r < m; ++r)
    carrier_var.add(ctx.g_tilde_carrier[r] * ctx.g_tilde_carrier[r] * part.w_carrier[r]);
  ctx.noncarrier_var = std::max(0.0, ctx.var_cond - carrier_var.value());

  KahanSum u;
  for (Eigen::Index r = 0; r < m; ++r) {
    int i = part.carriers[static_cast<size_t>(r)];
    u.add(part.g_carrier[r] * fit.resid[i]);
  }
  ctx.u = u.value();
  return ctx;
}

void FastEfficientCgf::eval(double t, double& k, double& k1, double& k2) const {
  KahanSum vk, vk1, vk2;
  for (Eigen::Index r = 0; r < ctx_.g_tilde_carrier.size(); ++r) {
    const double gt = ctx_.g_tilde_carrier[r];
    const double s = gt * t;
    const double m = ctx_.mu_carrier[r];
    vk.add(cgf_term(m, s));
    const double p = tilted_prob(m, s);
    vk1.add(gt * (p - m));
    vk2.add(gt * gt * p * (1.0 - p));
  }
  k = vk.value() + 0.5 * ctx_.noncarrier_var * t * t;
  k1 = vk1.value() + ctx_.noncarrier_var * t;
  k2 = vk2.value() + ctx_.noncarrier_var;
}

double FastEfficientCgf::deriv_inf() const {
  if (ctx_.noncarrier_var > 0.0) return -std::numeric_limits<double>::infinity();
  KahanSum acc;
  for (Eigen::Index r = 0; r < ctx_.g_tilde_carrier.size(); ++r) {
    const double gt = ctx_.g_tilde_carrier[r];
    acc.add(gt * ((gt < 0.0 ? 1.0 : 0.0) - ctx_.mu_carrier[r]));
  }
  return acc.value();
}

double FastEfficientCgf::deriv_sup() const {
  if (ctx_.noncarrier_var > 0.0) return std::numeric_limits<double>::infinity();
  KahanSum acc;
  for (Eigen::Index r = 0; r < ctx_.g_tilde_carrier.size(); ++r) {
    const double gt = ctx_.g_tilde_carrier[r];
    acc.add(gt * ((gt > 0.0 ? 1.0 : 0.0) - ctx_.mu_carrier[r]));
  }
  return acc.value();
}

TailResult fast_dspa_cc_survival(const NullFit& fit, const CarrierPartition& part,
                                 const Eigen::VectorXd& g, double u) {
  FastJointCgf joint(fit, part);
  double log_det_hb0 = log_det_llt(fit.xtwx);  // fast marginal Hessian at 0 is exact
  FastEfficientContext ectx = make_fast_efficient_context(fit, part);
  SupportBounds sb = conditional_support(fit, g);
  DspaEngine engine(joint, log_det_hb0, ectx.var_cond, sb, Method::fast_dspa_cc);
  return engine.survival(u);
}

TailResult fast_spa_survival(const NullFit& fit, const CarrierPartition& part,
                             const Eigen::VectorXd& g, double u, bool corrected) {
  FastEfficientContext ectx = make_fast_efficient_context(fit, part);
  FastEfficientCgf cgf(ectx);
  SupportBounds sb = conditional_support(fit, g);
  EspaEngine engine(cgf, ectx.var_cond, sb, Method::fast_spa, corrected);
  return engine.survival(u);
}

}  // namespace latscore
