#include <doctest.h>

#include <cmath>
#include <random>

#include "latscore/cgf.hpp"
#include "latscore/model.hpp"

using namespace latscore;

namespace {

struct Instance {
  NullFit fit;
  Eigen::VectorXd g;
};

Instance random_instance(int n, int d, std::uint64_t seed) {
  // small random designs can separate; walk the seed until the fit succeeds
  for (std::uint64_t s = seed;; ++s) {
    std::mt19937_64 rng(s);
    std::normal_distribution<double> norm(0.0, 1.0);
    std::bernoulli_distribution coin(0.3);
    std::binomial_distribution<int> geno(2, 0.25);
    Eigen::MatrixXd X(n, d);
    Eigen::VectorXd y(n);
    Instance inst;
    inst.g.resize(n);
    for (int i = 0; i < n; ++i) {
      X(i, 0) = 1.0;
      for (int c = 1; c < d; ++c) X(i, c) = norm(rng);
      y[i] = coin(rng) ? 1.0 : 0.0;
      inst.g[i] = geno(rng);
    }
    if (y.sum() == 0.0) y[0] = 1.0;
    if (y.sum() == n) y[0] = 0.0;
    try {
      inst.fit = fit_null(y, X);
      return inst;
    } catch (const FitError&) {
      continue;
    }
  }
}

// naive direct evaluation, overflow-prone by construction
double naive_joint_value(const NullFit& fit, const Eigen::VectorXd& g,
                         const Eigen::VectorXd& t) {
  double k = 0.0;
  int d = static_cast<int>(fit.d());
  for (int i = 0; i < fit.n(); ++i) {
    double s = g[i] * t[d];
    for (int c = 0; c < d; ++c) s += fit.X(i, c) * t[c];
    double mu = fit.mu_hat[i];
    k += std::log(1.0 - mu + mu * std::exp(s)) - mu * s;
  }
  return k;
}

}  // namespace

TEST_SUITE_BEGIN("cgf");

TEST_CASE("joint CGF at zero reproduces the Fisher information blocks") {
  Instance inst = random_instance(40, 2, 101);
  JointCgf cgf(inst.fit, inst.g);
  CgfEval ev = cgf.eval(Eigen::VectorXd::Zero(3));
  CHECK(ev.value == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(ev.grad.lpNorm<Eigen::Infinity>() <= 1e-12);
  Eigen::MatrixXd xtwx = inst.fit.xtwx;
  Eigen::VectorXd xtwg =
      inst.fit.X.transpose() * (inst.fit.w_hat.asDiagonal() * inst.g);
  double gwg = inst.g.dot(inst.fit.w_hat.asDiagonal() * inst.g);
  CHECK((ev.hess.topLeftCorner(2, 2) - xtwx).lpNorm<Eigen::Infinity>() <= 1e-10);
  CHECK((ev.hess.topRightCorner(2, 1) - xtwg).lpNorm<Eigen::Infinity>() <= 1e-10);
  CHECK(ev.hess(2, 2) == doctest::Approx(gwg).epsilon(1e-12));
}

TEST_CASE("single-observation hand value") {
  // mu = 1/2, z = 1, t = ln 3: K = ln 2 - ln(3)/2
  CHECK(cgf_term(0.5, std::log(3.0)) ==
        doctest::Approx(std::log(2.0) - 0.5 * std::log(3.0)).epsilon(1e-14));
}

TEST_CASE("joint gradient and Hessian match central finite differences") {
  Instance inst = random_instance(10, 3, 202);
  JointCgf cgf(inst.fit, inst.g);
  std::mt19937_64 rng(303);
  std::uniform_real_distribution<double> unif(-0.4, 0.4);
  const double h = 1e-6;
  for (int rep = 0; rep < 20; ++rep) {
    Eigen::VectorXd t(4);
    for (int c = 0; c < 4; ++c) t[c] = unif(rng);
    CgfEval ev = cgf.eval(t);
    for (int c = 0; c < 4; ++c) {
      Eigen::VectorXd tp = t, tm = t;
      tp[c] += h;
      tm[c] -= h;
      double fd = (cgf.eval(tp).value - cgf.eval(tm).value) / (2.0 * h);
      CHECK(std::abs(ev.grad[c] - fd) <= 1e-6);
      Eigen::VectorXd gd = (cgf.eval(tp).grad - cgf.eval(tm).grad) / (2.0 * h);
      CHECK((ev.hess.col(c) - gd).lpNorm<Eigen::Infinity>() <= 1e-6);
    }
  }
}

TEST_CASE("marginal CGF") {
  Instance inst = random_instance(25, 2, 404);
  MarginalCgf marg(inst.fit);
  JointCgf joint(inst.fit, inst.g);

  SUBCASE("stationary at zero with Hessian X'WX") {
    CgfEval ev = marg.eval(Eigen::VectorXd::Zero(2));
    CHECK(ev.value == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(ev.grad.lpNorm<Eigen::Infinity>() <= 1e-12);
    CHECK((ev.hess - inst.fit.xtwx).lpNorm<Eigen::Infinity>() <= 1e-10);
  }
  SUBCASE("marginal equals joint at (t_beta, 0)") {
    std::mt19937_64 rng(505);
    std::uniform_real_distribution<double> unif(-0.8, 0.8);
    for (int rep = 0; rep < 25; ++rep) {
      Eigen::VectorXd tb(2);
      tb << unif(rng), unif(rng);
      Eigen::VectorXd tj(3);
      tj << tb[0], tb[1], 0.0;
      CHECK(marg.eval(tb).value == doctest::Approx(joint.eval(tj).value).epsilon(1e-13));
    }
  }
  SUBCASE("gradient matches finite differences") {
    Eigen::VectorXd t(2);
    t << 0.21, -0.34;
    CgfEval ev = marg.eval(t);
    const double h = 1e-6;
    for (int c = 0; c < 2; ++c) {
      Eigen::VectorXd tp = t, tm = t;
      tp[c] += h;
      tm[c] -= h;
      double fd = (marg.eval(tp).value - marg.eval(tm).value) / (2.0 * h);
      CHECK(std::abs(ev.grad[c] - fd) <= 1e-6);
    }
  }
}

TEST_CASE("efficient-score CGF") {
  Instance inst = random_instance(30, 2, 606);
  Eigen::VectorXd gt = efficient_genotype(inst.fit, inst.g);
  EfficientCgf cgf(gt, inst.fit.mu_hat);

  SUBCASE("derivatives at zero") {
    double k, k1, k2;
    cgf.eval(0.0, k, k1, k2);
    CHECK(k == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(k1 == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(k2 ==
          doctest::Approx(gt.cwiseAbs2().dot(inst.fit.w_hat)).epsilon(1e-12));
    CHECK(k2 == doctest::Approx(conditional_variance(inst.fit, inst.g)).epsilon(1e-10));
  }
  SUBCASE("zero efficient genotype is identically zero") {
    Eigen::VectorXd zero = Eigen::VectorXd::Zero(30);
    EfficientCgf degenerate(zero, inst.fit.mu_hat);
    double k, k1, k2;
    degenerate.eval(1.7, k, k1, k2);
    CHECK(k == doctest::Approx(0.0));
    CHECK(k1 == doctest::Approx(0.0));
    CHECK(k2 == doctest::Approx(0.0));
  }
  SUBCASE("first derivative matches finite differences") {
    const double h = 1e-6;
    for (double t : {-1.3, -0.2, 0.45, 2.0}) {
      double k, k1, k2, kp, d1, d2, km;
      cgf.eval(t, k, k1, k2);
      cgf.eval(t + h, kp, d1, d2);
      cgf.eval(t - h, km, d1, d2);
      CHECK(std::abs(k1 - (kp - km) / (2.0 * h)) <= 1e-6);
    }
  }
  SUBCASE("derivative range brackets the attainable scores") {
    CHECK(cgf.deriv_inf() < 0.0);
    CHECK(cgf.deriv_sup() > 0.0);
    double k, k1, k2;
    cgf.eval(40.0, k, k1, k2);
    CHECK(k1 <= cgf.deriv_sup() + 1e-9);
    cgf.eval(-40.0, k, k1, k2);
    CHECK(k1 >= cgf.deriv_inf() - 1e-9);
  }
}

TEST_CASE("convexity on random chords") {
  Instance inst = random_instance(15, 2, 707);
  JointCgf cgf(inst.fit, inst.g);
  std::mt19937_64 rng(808);
  std::uniform_real_distribution<double> unif(-1.5, 1.5);
  std::uniform_real_distribution<double> mix(0.0, 1.0);
  for (int rep = 0; rep < 1000; ++rep) {
    Eigen::VectorXd t1(3), t2(3);
    for (int c = 0; c < 3; ++c) {
      t1[c] = unif(rng);
      t2[c] = unif(rng);
    }
    double lam = mix(rng);
    double lhs = cgf.eval(lam * t1 + (1.0 - lam) * t2).value;
    double rhs = lam * cgf.eval(t1).value + (1.0 - lam) * cgf.eval(t2).value;
    CHECK(lhs <= rhs + 1e-12);
  }
}

TEST_CASE("Hessian is positive semi-definite on random probes") {
  Instance inst = random_instance(20, 3, 909);
  JointCgf cgf(inst.fit, inst.g);
  std::mt19937_64 rng(1010);
  std::uniform_real_distribution<double> unif(-2.0, 2.0);
  for (int rep = 0; rep < 50; ++rep) {
    Eigen::VectorXd t(4);
    for (int c = 0; c < 4; ++c) t[c] = unif(rng);
    Eigen::MatrixXd h = cgf.eval(t).hess;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
    CHECK(es.eigenvalues().minCoeff() >= -1e-10 * h.norm());
  }
}

TEST_CASE("safe branch equals naive evaluation where naive does not overflow") {
  Instance inst = random_instance(12, 2, 1111);
  JointCgf cgf(inst.fit, inst.g);
  std::mt19937_64 rng(1212);
  std::uniform_real_distribution<double> unif(-8.0, 8.0);
  for (int rep = 0; rep < 200; ++rep) {
    Eigen::VectorXd t(3);
    for (int c = 0; c < 3; ++c) t[c] = unif(rng);
    double safe = cgf.eval(t).value;
    double naive = naive_joint_value(inst.fit, inst.g, t);
    if (!std::isfinite(naive)) continue;
    double scale = std::max(1.0, std::abs(naive));
    CHECK(std::abs(safe - naive) / scale <= 1e-12);
  }
}

TEST_CASE("overflow-safety contract at extreme t") {
  Instance inst = random_instance(12, 2, 1313);
  JointCgf cgf(inst.fit, inst.g);
  double zmax = std::max(inst.fit.X.cwiseAbs().maxCoeff(), inst.g.maxCoeff());
  double bound = 700.0 / zmax;
  Eigen::VectorXd t = Eigen::VectorXd::Constant(3, bound);
  CgfEval ev = cgf.eval(t);
  CHECK(std::isfinite(ev.value));
  CHECK(ev.grad.allFinite());
  CHECK(ev.hess.allFinite());
}

TEST_SUITE_END();
