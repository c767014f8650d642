#include "latscore/cgf.hpp"

#include <cmath>

#include "latscore/numerics.hpp"

namespace latscore {

double cgf_term(double mu, double s) {
  if (s > 0.0) return (1.0 - mu) * s + std::log1p((1.0 - mu) * std::expm1(-s));
  return std::log1p(mu * std::expm1(s)) - mu * s;
}

double tilted_prob(double mu, double s) {
  if (s > 0.0) return mu / ((1.0 - mu) * std::exp(-s) + mu);
  double es = std::exp(s);
  return mu * es / (1.0 - mu + mu * es);
}

namespace {

// Allocation-free accumulation over rows; value and gradient are
// Kahan-compensated (tail-accurate sums for n up to ~5e5), the Hessian is
// accumulated plainly. zrow(i, z) fills the i-th z vector in place.
template <class ZRow>
CgfEval accumulate_cgf(const Eigen::VectorXd& mu, Eigen::Index dim,
                       const Eigen::VectorXd& t, ZRow&& zrow) {
  CgfEval out;
  out.grad = Eigen::VectorXd::Zero(dim);
  out.hess = Eigen::MatrixXd::Zero(dim, dim);
  Eigen::VectorXd gcomp = Eigen::VectorXd::Zero(dim);
  Eigen::VectorXd z(dim);
  double vsum = 0.0, vcomp = 0.0;
  double* grad = out.grad.data();
  double* comp = gcomp.data();
  double* hess = out.hess.data();  // column-major, symmetric: fill lower triangle
  const double* zp = z.data();
  const double* tp = t.data();

  for (Eigen::Index i = 0; i < mu.size(); ++i) {
    zrow(i, z);
    double s = 0.0;
    for (Eigen::Index j = 0; j < dim; ++j) s += tp[j] * zp[j];
    const double m = mu[i];
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
  out.value = vsum;
  return out;
}

}  // namespace

CgfEval JointCgf::eval(const Eigen::VectorXd& t) const {
  const Eigen::Index d = fit_.d();
  const Eigen::MatrixXd& X = fit_.X;
  return accumulate_cgf(fit_.mu_hat, d + 1, t, [&](Eigen::Index i, Eigen::VectorXd& z) {
    for (Eigen::Index c = 0; c < d; ++c) z[c] = X(i, c);
    z[d] = g_[i];
  });
}

CgfEval MarginalCgf::eval(const Eigen::VectorXd& t) const {
  const Eigen::Index d = fit_.d();
  const Eigen::MatrixXd& X = fit_.X;
  return accumulate_cgf(fit_.mu_hat, d, t, [&](Eigen::Index i, Eigen::VectorXd& z) {
    for (Eigen::Index c = 0; c < d; ++c) z[c] = X(i, c);
  });
}

void EfficientCgf::eval(double t, double& k, double& k1, double& k2) const {
  KahanSum vk, vk1, vk2;
  for (Eigen::Index i = 0; i < mu_.size(); ++i) {
    const double gt = g_tilde_[i];
    const double s = gt * t;
    const double m = mu_[i];
    vk.add(cgf_term(m, s));
    const double p = tilted_prob(m, s);
    vk1.add(gt * (p - m));
    vk2.add(gt * gt * p * (1.0 - p));
  }
  k = vk.value();
  k1 = vk1.value();
  k2 = vk2.value();
}

double EfficientCgf::deriv_inf() const {
  KahanSum acc;
  for (Eigen::Index i = 0; i < mu_.size(); ++i) {
    const double gt = g_tilde_[i];
    acc.add(gt * ((gt < 0.0 ? 1.0 : 0.0) - mu_[i]));
  }
  return acc.value();
}

double EfficientCgf::deriv_sup() const {
  KahanSum acc;
  for (Eigen::Index i = 0; i < mu_.size(); ++i) {
    const double gt = g_tilde_[i];
    acc.add(gt * ((gt > 0.0 ? 1.0 : 0.0) - mu_[i]));
  }
  return acc.value();
}

}  // namespace latscore
