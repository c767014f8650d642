#include "latscore/numerics.hpp"

#include <algorithm>
#include <stdexcept>

namespace latscore {

LogBinomTable::LogBinomTable(int max_n) {
  if (max_n < 0) throw std::invalid_argument("LogBinomTable: max_n < 0");
  logfact_.resize(static_cast<size_t>(max_n) + 1);
  logfact_[0] = 0.0;
  for (int i = 1; i <= max_n; ++i)
    logfact_[static_cast<size_t>(i)] = std::lgamma(static_cast<double>(i) + 1.0);
}

double LogBinomTable::operator()(int n, int k) const {
  if (k < 0 || k > n || n < 0) return -std::numeric_limits<double>::infinity();
  if (n > max_n()) throw std::out_of_range("LogBinomTable: n exceeds table size");
  return logfact_[static_cast<size_t>(n)] - logfact_[static_cast<size_t>(k)] -
         logfact_[static_cast<size_t>(n - k)];
}

double logsumexp(const std::vector<double>& terms) {
  double m = -std::numeric_limits<double>::infinity();
  for (double t : terms) m = std::max(m, t);
  if (!std::isfinite(m)) return m;
  KahanSum acc;
  for (double t : terms) acc.add(std::exp(t - m));
  return m + std::log(acc.value());
}

GaussHermite gauss_hermite(int n) {
  if (n < 1) throw std::invalid_argument("gauss_hermite: n < 1");
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) {
    double off = std::sqrt(k / 2.0);
    jac(k, k - 1) = off;
    jac(k - 1, k) = off;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jac);
  GaussHermite gh;
  gh.nodes = es.eigenvalues();
  gh.weights.resize(n);
  const double mu0 = std::sqrt(M_PI);  // integral of e^{-x^2}
  for (int i = 0; i < n; ++i) {
    double first = es.eigenvectors()(0, i);
    gh.weights[i] = mu0 * first * first;
  }
  return gh;
}

}  // namespace latscore
