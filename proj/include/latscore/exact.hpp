#ifndef LATSCORE_EXACT_HPP
#define LATSCORE_EXACT_HPP

#include <vector>

#include <Eigen/Dense>

namespace latscore {

struct NullFit;

/// Genotype counts for the intercept model.
struct GenotypeCounts {
  int n0 = 0;
  int n1 = 0;
  int n2 = 0;
  int n() const { return n0 + n1 + n2; }
  int max_score() const { return n1 + 2 * n2; }
};

/// Per-stratum genotype counts for the binary-covariate model
/// (stratum 0: x = 0, stratum 1: x = 1).
struct BinaryCovariateCounts {
  GenotypeCounts stratum0;
  GenotypeCounts stratum1;
};

/// Point probabilities of a step-1 lattice distribution. The smallest
/// support point sits at `offset` (generally non-integer); probs[i] is
/// the mass at offset + i.
struct LatticePmf {
  double offset = 0.0;
  std::vector<double> probs;

  int size() const { return static_cast<int>(probs.size()); }
  double point(int i) const { return offset + i; }
  double min() const { return offset; }
  double max() const { return offset + size() - 1; }

  /// Lattice index of u (u must sit on the lattice up to rounding noise).
  int index_of(double u) const;

  double mean() const;
  double variance() const;

  /// P(U >= u) for on-lattice u; 1 below the support, 0 above it.
  double survival(double u) const;
  /// P(U <= u); exact prefix sum (not 1 - survival).
  double left_tail(double u) const;
};

/// Exact conditional pmf of the score for the intercept model given
/// v = sum(y) cases (trivariate hypergeometric sums).
LatticePmf exact_intercept_pmf(const GenotypeCounts& counts, int v);

/// Exact conditional pmf for the model with one binary covariate:
/// convolution of the two per-stratum lattice pmfs.
LatticePmf exact_binary_covariate_pmf(const BinaryCovariateCounts& counts,
                                      int v_group0, int v_group1);

struct SupportBounds {
  double lower = 0.0;
  double upper = 0.0;
  /// true when the bounds are the exact conditional extremes (intercept
  /// model, greedy allocation); false for the conservative envelope
  /// [-g'mu, g'(1-mu)] used with general covariates.
  bool exact = false;
};

/// Support of the conditional score lattice.
SupportBounds conditional_support(const NullFit& fit, const Eigen::VectorXd& g);

}  // namespace latscore

#endif
