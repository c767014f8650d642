#ifndef LATSCORE_PVALUE_HPP
#define LATSCORE_PVALUE_HPP

#include <memory>
#include <optional>

#include <Eigen/Dense>

#include "latscore/exact.hpp"
#include "latscore/method.hpp"
#include "latscore/model.hpp"

namespace latscore {

class DspaEngine;
class EspaEngine;
class JointCgf;
class EfficientCgf;
class FastJointCgf;
class FastEfficientCgf;
struct CarrierPartition;
struct FastEfficientContext;

struct PvalueFlags {
  bool boundary = false;      // a tail was evaluated at/clamped to the support edge
  bool fallback = false;      // near-singular saddlepoint normal-limit value used
  bool clamped = false;       // p clamped away from 0
  bool normal_cutoff = false; // |u|/sd below the SPA cutoff, normal p returned
};

struct PvalueReport {
  Method method = Method::normal;
  double p_two_sided = 1.0;
  enum class Sided { one, two } sided = Sided::two;
  double u = 0.0;
  std::optional<double> u_inv;
  bool untestable = false;
  PvalueFlags flags;
};

/// Closest lattice point to -u at least as far from zero as u:
/// u - sgn(u) * ceil(2|u|). Requires u != 0.
double reflect(double u);

/// |standardized score| below which the continuous single-saddlepoint
/// methods return the normal p-value (SPA-package convention).
inline constexpr double kEspaNormalCutoff = 2.0;

/// Reusable per-variant p-value evaluator; builds the method's tail
/// machinery once and answers at(u) for any lattice point.
class PvalueEngine {
 public:
  PvalueEngine(Method method, const NullFit& fit, const Eigen::VectorXd& g);
  ~PvalueEngine();
  PvalueEngine(const PvalueEngine&) = delete;
  PvalueEngine& operator=(const PvalueEngine&) = delete;

  PvalueReport at(double u) const;
  const ScoreContext& context() const { return ctx_; }
  const LatticePmf* pmf() const { return pmf_ ? &*pmf_ : nullptr; }

 private:
  struct Tails {
    double right;
    double left;  // for the reflected side
    bool right_boundary, left_boundary, fallback;
  };
  double lattice_survival(double u, PvalueFlags& flags) const;
  double lattice_left(double u, PvalueFlags& flags) const;

  Method method_;
  const NullFit& fit_;
  Eigen::VectorXd g_;
  ScoreContext ctx_;
  std::optional<LatticePmf> pmf_;
  double log_det_hb0_ = 0.0;
  std::unique_ptr<JointCgf> joint_;
  std::unique_ptr<EfficientCgf> eff_;
  std::unique_ptr<CarrierPartition> part_;
  std::unique_ptr<FastEfficientContext> fast_ectx_;
  std::unique_ptr<FastJointCgf> fast_joint_;
  std::unique_ptr<FastEfficientCgf> fast_eff_;
  std::unique_ptr<DspaEngine> dspa_;
  std::unique_ptr<EspaEngine> espa_;
};

/// Two-sided p-value by the lattice reflection rule (or the method's own
/// convention for the continuous single-saddlepoint methods).
PvalueReport two_sided_pvalue(Method method, const NullFit& fit,
                              const Eigen::VectorXd& g, double u);

/// Baseline: p = 2 (1 - Phi(|u| / sqrt(F~))), no continuity correction.
PvalueReport normal_pvalue(const NullFit& fit, const Eigen::VectorXd& g, double u);

}  // namespace latscore

#endif
