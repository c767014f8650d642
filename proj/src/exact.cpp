#include "latscore/exact.hpp"

#include <cmath>
#include <stdexcept>

#include "latscore/model.hpp"
#include "latscore/numerics.hpp"

namespace latscore {

int LatticePmf::index_of(double u) const {
  double d = u - offset;
  int i = static_cast<int>(std::llround(d));
  if (std::abs(d - i) > 0.25)
    throw std::invalid_argument("LatticePmf::index_of: u not on the lattice");
  return i;
}

double LatticePmf::mean() const {
  KahanSum acc;
  for (int i = 0; i < size(); ++i) acc.add(probs[static_cast<size_t>(i)] * point(i));
  return acc.value();
}

double LatticePmf::variance() const {
  double m = mean();
  KahanSum acc;
  for (int i = 0; i < size(); ++i) {
    double d = point(i) - m;
    acc.add(probs[static_cast<size_t>(i)] * d * d);
  }
  return acc.value();
}

double LatticePmf::survival(double u) const {
  double d = u - offset;
  if (d < -0.25) return 1.0;
  if (d > size() - 1 + 0.25) return 0.0;
  int i = index_of(u);
  KahanSum acc;
  for (int j = size() - 1; j >= i; --j) acc.add(probs[static_cast<size_t>(j)]);
  return acc.value();
}

double LatticePmf::left_tail(double u) const {
  double d = u - offset;
  if (d < -0.25) return 0.0;
  if (d > size() - 1 + 0.25) return 1.0;
  int i = index_of(u);
  KahanSum acc;
  for (int j = 0; j <= i; ++j) acc.add(probs[static_cast<size_t>(j)]);
  return acc.value();
}

namespace {

// Range of u* = v1 + 2 v2 over 0 <= vj <= nj, v0 + v1 + v2 = v.
void ustar_range(const GenotypeCounts& c, int v, int& jmin, int& jmax) {
  int r = std::max(0, v - c.n0);
  int v1 = std::min(r, c.n1);
  jmin = v1 + 2 * (r - v1);
  int v2 = std::min(v, c.n2);
  jmax = 2 * v2 + std::min(v - v2, c.n1);
}

// Integer-grid pmf of u* given v; log-space trivariate hypergeometric sums
// with the inner-sum bounds of the intercept-model distribution.
std::vector<double> ustar_pmf(const GenotypeCounts& c, int v, int jmin, int jmax) {
  LogBinomTable lb(c.n());
  const double lden = lb(c.n(), v);
  std::vector<double> probs(static_cast<size_t>(jmax - jmin + 1));
  std::vector<double> terms;
  for (int j = jmin; j <= jmax; ++j) {
    terms.clear();
    int kmin = (j > c.n1) ? (j - c.n1 + 1) / 2 : 0;  // ceil((j - n1)/2), clamped at 0
    for (int k = kmin; k <= std::min(j / 2, c.n2); ++k)
      terms.push_back(lb(c.n0, v - j + k) + lb(c.n1, j - 2 * k) + lb(c.n2, k));
    double lp = terms.empty() ? -std::numeric_limits<double>::infinity()
                              : logsumexp(terms) - lden;
    probs[static_cast<size_t>(j - jmin)] = std::exp(lp);
  }
  return probs;
}

}  // namespace

LatticePmf exact_intercept_pmf(const GenotypeCounts& counts, int v) {
  const int n = counts.n();
  if (counts.n0 < 0 || counts.n1 < 0 || counts.n2 < 0)
    throw std::invalid_argument("exact_intercept_pmf: negative count");
  if (v <= 0 || v >= n)
    throw std::invalid_argument("exact_intercept_pmf: v must satisfy 0 < v < n");
  const double mu = static_cast<double>(v) / n;
  int jmin, jmax;
  ustar_range(counts, v, jmin, jmax);
  LatticePmf pmf;
  pmf.probs = ustar_pmf(counts, v, jmin, jmax);
  pmf.offset = jmin - counts.max_score() * mu;
  return pmf;
}

LatticePmf exact_binary_covariate_pmf(const BinaryCovariateCounts& counts,
                                      int v_group0, int v_group1) {
  const GenotypeCounts& a = counts.stratum0;
  const GenotypeCounts& b = counts.stratum1;
  const bool have_a = a.n() > 0;
  const bool have_b = b.n() > 0;
  if (!have_a && !have_b)
    throw std::invalid_argument("exact_binary_covariate_pmf: both strata empty");
  if (!have_b) {
    if (v_group1 != 0)
      throw std::invalid_argument("exact_binary_covariate_pmf: cases in empty stratum");
    return exact_intercept_pmf(a, v_group0);
  }
  if (!have_a) {
    if (v_group0 != 0)
      throw std::invalid_argument("exact_binary_covariate_pmf: cases in empty stratum");
    return exact_intercept_pmf(b, v_group1);
  }
  if (v_group0 <= 0 || v_group0 >= a.n() || v_group1 <= 0 || v_group1 >= b.n())
    throw std::invalid_argument(
        "exact_binary_covariate_pmf: group case counts out of range");

  const double mu0 = static_cast<double>(v_group0) / a.n();
  const double mu1 = static_cast<double>(v_group1) / b.n();
  int ja_min, ja_max, jb_min, jb_max;
  ustar_range(a, v_group0, ja_min, ja_max);
  ustar_range(b, v_group1, jb_min, jb_max);
  std::vector<double> pa = ustar_pmf(a, v_group0, ja_min, ja_max);
  std::vector<double> pb = ustar_pmf(b, v_group1, jb_min, jb_max);

  // The two stratum lattices share step 1, so the joint pmf is a plain
  // convolution on the integer grid.
  LatticePmf pmf;
  pmf.probs.assign(pa.size() + pb.size() - 1, 0.0);
  for (size_t i = 0; i < pa.size(); ++i) {
    if (pa[i] == 0.0) continue;
    for (size_t j = 0; j < pb.size(); ++j)
      pmf.probs[i + j] += pa[i] * pb[j];
  }
  pmf.offset = (ja_min + jb_min) - a.max_score() * mu0 - b.max_score() * mu1;
  return pmf;
}

SupportBounds conditional_support(const NullFit& fit, const Eigen::VectorXd& g) {
  SupportBounds sb;
  const double g_mu = g.dot(fit.mu_hat);
  if (fit.is_intercept_only()) {
    // Greedy allocation: min/max of g'y over binary y with sum(y) = v.
    const auto& gv = g;
    int n = static_cast<int>(gv.size());
    int v = static_cast<int>(std::llround(fit.y.sum()));
    int n0 = 0, n1 = 0, n2 = 0;
    for (int i = 0; i < n; ++i) {
      int gi = static_cast<int>(std::llround(gv[i]));
      if (gi == 0) ++n0;
      else if (gi == 1) ++n1;
      else ++n2;
    }
    int r = std::max(0, v - n0);
    int lo1 = std::min(r, n1);
    int gmin = lo1 + 2 * (r - lo1);
    int v2 = std::min(v, n2);
    int gmax = 2 * v2 + std::min(v - v2, n1);
    sb.lower = gmin - g_mu;
    sb.upper = gmax - g_mu;
    sb.exact = true;
    return sb;
  }
  sb.lower = -g_mu;
  sb.upper = g.dot(Eigen::VectorXd::Ones(g.size()) - fit.mu_hat);
  sb.exact = false;
  return sb;
}

}  // namespace latscore
