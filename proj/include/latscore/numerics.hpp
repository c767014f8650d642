#ifndef LATSCORE_NUMERICS_HPP
#define LATSCORE_NUMERICS_HPP

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include <Eigen/Dense>

namespace latscore {

/// Kahan-compensated accumulator for long sums.
class KahanSum {
 public:
  void add(double x) {
    double y = x - comp_;
    double t = sum_ + y;
    comp_ = (t - sum_) - y;
    sum_ = t;
  }
  double value() const { return sum_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

// Standard normal CDF / survival with full relative precision in both tails.
inline double norm_cdf(double x) { return 0.5 * std::erfc(-x * M_SQRT1_2); }
inline double norm_sf(double x) { return 0.5 * std::erfc(x * M_SQRT1_2); }
inline double norm_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
}

/// log C(n, k); -inf outside 0 <= k <= n. Backed by a lgamma-based
/// log-factorial table built once per instance.
class LogBinomTable {
 public:
  explicit LogBinomTable(int max_n);
  double operator()(int n, int k) const;
  int max_n() const { return static_cast<int>(logfact_.size()) - 1; }

 private:
  std::vector<double> logfact_;
};

/// log(sum(exp(x))) over a small term list.
double logsumexp(const std::vector<double>& terms);

struct GaussHermite {
  Eigen::VectorXd nodes;    // abscissae for weight e^{-x^2}
  Eigen::VectorXd weights;  // sum(weights) = sqrt(pi)
};

/// Golub-Welsch nodes/weights for the physicists' Hermite weight e^{-x^2}.
GaussHermite gauss_hermite(int n);

/// E[f(Z)] for Z ~ N(0,1) via Gauss-Hermite quadrature.
template <class F>
double gauss_hermite_normal_mean(const GaussHermite& gh, F&& f) {
  KahanSum acc;
  for (Eigen::Index i = 0; i < gh.nodes.size(); ++i)
    acc.add(gh.weights[i] * f(M_SQRT2 * gh.nodes[i]));
  return acc.value() / std::sqrt(M_PI);
}

inline double logit(double p) { return std::log(p / (1.0 - p)); }
inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

/// Deterministic 64-bit mix (splitmix64); used to derive per-replicate
/// RNG streams from a master seed.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace latscore

#endif
