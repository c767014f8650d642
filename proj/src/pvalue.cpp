#include "latscore/pvalue.hpp"

#include <cmath>

#include "latscore/cgf.hpp"
#include "latscore/fast.hpp"
#include "latscore/numerics.hpp"
#include "latscore/saddlepoint.hpp"

namespace latscore {

double reflect(double u) {
  if (u == 0.0) throw std::invalid_argument("reflect: u must be nonzero");
  double shift = std::ceil(2.0 * std::abs(u) - 1e-9);
  return u - (u > 0.0 ? shift : -shift);
}

std::string method_name(Method m) {
  switch (m) {
    case Method::normal: return "normal";
    case Method::espa: return "espa";
    case Method::espa_cc: return "espa_cc";
    case Method::dspa_cc: return "dspa_cc";
    case Method::fast_spa: return "fast_spa";
    case Method::fast_dspa_cc: return "fast_dspa_cc";
    case Method::exact_intercept: return "exact_intercept";
    case Method::exact_binary: return "exact_binary";
  }
  return "unknown";
}

std::optional<Method> parse_method(const std::string& name) {
  for (Method m : {Method::normal, Method::espa, Method::espa_cc, Method::dspa_cc,
                   Method::fast_spa, Method::fast_dspa_cc, Method::exact_intercept,
                   Method::exact_binary}) {
    if (method_name(m) == name) return m;
  }
  return std::nullopt;
}

namespace {

GenotypeCounts counts_from(const Eigen::VectorXd& g) {
  GenotypeCounts c;
  for (Eigen::Index i = 0; i < g.size(); ++i) {
    int gi = static_cast<int>(std::llround(g[i]));
    if (gi == 0) ++c.n0;
    else if (gi == 1) ++c.n1;
    else ++c.n2;
  }
  return c;
}

double clamp_probability(double p, PvalueFlags& flags) {
  if (p > 1.0) p = 1.0;
  if (p <= 0.0) {
    p = std::numeric_limits<double>::denorm_min();
    flags.clamped = true;
  }
  return p;
}

}  // namespace

PvalueEngine::PvalueEngine(Method method, const NullFit& fit, const Eigen::VectorXd& g)
    : method_(method), fit_(fit), g_(g), ctx_(make_score_context(fit, g)) {
  if (!ctx_.testable) return;
  switch (method_) {
    case Method::normal:
      break;
    case Method::exact_intercept: {
      if (!fit_.is_intercept_only())
        throw std::invalid_argument("exact_intercept requires the intercept-only model");
      int v = static_cast<int>(std::llround(fit_.y.sum()));
      pmf_ = exact_intercept_pmf(counts_from(g_), v);
      break;
    }
    case Method::exact_binary: {
      if (!fit_.is_intercept_plus_binary())
        throw std::invalid_argument(
            "exact_binary requires an intercept plus one binary covariate");
      BinaryCovariateCounts bc;
      int v0 = 0, v1 = 0;
      Eigen::VectorXd g0, g1;
      GenotypeCounts c0, c1;
      for (Eigen::Index i = 0; i < fit_.n(); ++i) {
        int gi = static_cast<int>(std::llround(g_[i]));
        GenotypeCounts& c = fit_.X(i, 1) == 0.0 ? c0 : c1;
        if (gi == 0) ++c.n0;
        else if (gi == 1) ++c.n1;
        else ++c.n2;
        if (fit_.y[i] == 1.0) (fit_.X(i, 1) == 0.0 ? v0 : v1)++;
      }
      bc.stratum0 = c0;
      bc.stratum1 = c1;
      pmf_ = exact_binary_covariate_pmf(bc, v0, v1);
      break;
    }
    case Method::dspa_cc: {
      joint_ = std::make_unique<JointCgf>(fit_, g_);
      log_det_hb0_ = log_det_llt(fit_.xtwx);
      dspa_ = std::make_unique<DspaEngine>(*joint_, log_det_hb0_, ctx_.var_cond,
                                           ctx_.support, method_);
      break;
    }
    case Method::espa:
    case Method::espa_cc: {
      eff_ = std::make_unique<EfficientCgf>(ctx_.g_tilde, fit_.mu_hat);
      espa_ = std::make_unique<EspaEngine>(*eff_, ctx_.var_cond, ctx_.support, method_,
                                           method_ == Method::espa_cc);
      break;
    }
    case Method::fast_dspa_cc: {
      part_ = std::make_unique<CarrierPartition>(make_carrier_partition(fit_, g_));
      fast_ectx_ = std::make_unique<FastEfficientContext>(
          make_fast_efficient_context(fit_, *part_));
      fast_joint_ = std::make_unique<FastJointCgf>(fit_, *part_);
      log_det_hb0_ = log_det_llt(fit_.xtwx);
      dspa_ = std::make_unique<DspaEngine>(*fast_joint_, log_det_hb0_,
                                           fast_ectx_->var_cond, ctx_.support, method_);
      break;
    }
    case Method::fast_spa: {
      part_ = std::make_unique<CarrierPartition>(make_carrier_partition(fit_, g_));
      fast_ectx_ = std::make_unique<FastEfficientContext>(
          make_fast_efficient_context(fit_, *part_));
      fast_eff_ = std::make_unique<FastEfficientCgf>(*fast_ectx_);
      espa_ = std::make_unique<EspaEngine>(*fast_eff_, fast_ectx_->var_cond,
                                           ctx_.support, method_, false);
      break;
    }
  }
}

PvalueEngine::~PvalueEngine() = default;

double PvalueEngine::lattice_survival(double u, PvalueFlags& flags) const {
  if (pmf_) return pmf_->survival(u);
  TailResult t = dspa_ ? dspa_->survival(u) : espa_->survival(u);
  flags.boundary |= t.boundary;
  flags.fallback |= t.fallback_used;
  return t.survival;
}

double PvalueEngine::lattice_left(double u, PvalueFlags& flags) const {
  if (pmf_) return pmf_->left_tail(u);
  return 1.0 - lattice_survival(u + 1.0, flags);
}

PvalueReport PvalueEngine::at(double u) const {
  PvalueReport rep;
  rep.method = method_;
  rep.u = u;
  if (!ctx_.testable) {
    rep.untestable = true;
    rep.p_two_sided = std::numeric_limits<double>::quiet_NaN();
    return rep;
  }
  const double sd = std::sqrt(ctx_.var_cond);
  if (std::abs(u) <= 1e-9 * (1.0 + sd)) {
    rep.p_two_sided = 1.0;
    return rep;
  }

  if (method_ == Method::normal) {
    rep.p_two_sided = clamp_probability(2.0 * norm_sf(std::abs(u) / sd), rep.flags);
    return rep;
  }

  if (method_ == Method::espa || method_ == Method::fast_spa) {
    // SPA-package convention: normal p below the cutoff, otherwise continuous
    // tails with reflection at exactly -u.
    double z = std::abs(u) / sd;
    rep.u_inv = -u;
    if (z < kEspaNormalCutoff) {
      rep.flags.normal_cutoff = true;
      rep.p_two_sided = clamp_probability(2.0 * norm_sf(z), rep.flags);
      return rep;
    }
    TailResult main = u > 0.0 ? espa_->continuous_survival(u) : espa_->continuous_left(u);
    TailResult refl = u > 0.0 ? espa_->continuous_left(-u) : espa_->continuous_survival(-u);
    rep.flags.boundary |= main.boundary;
    rep.flags.fallback |= main.fallback_used || refl.fallback_used;
    double p = main.survival;
    if (refl.boundary && refl.survival == 0.0) {
      rep.sided = PvalueReport::Sided::one;
    } else {
      p += refl.survival;
    }
    rep.p_two_sided = clamp_probability(p, rep.flags);
    return rep;
  }

  // Lattice methods: reflection rule on the conditional support.
  double ui = reflect(u);
  rep.u_inv = ui;
  double p;
  if (u > 0.0) {
    p = lattice_survival(u, rep.flags);
    if (ui >= ctx_.support.lower - 0.25) {
      p += lattice_left(ui, rep.flags);
    } else {
      rep.sided = PvalueReport::Sided::one;
    }
  } else {
    p = lattice_left(u, rep.flags);
    if (ui <= ctx_.support.upper + 0.25) {
      p += lattice_survival(ui, rep.flags);
    } else {
      rep.sided = PvalueReport::Sided::one;
    }
  }
  rep.p_two_sided = clamp_probability(p, rep.flags);
  return rep;
}

PvalueReport two_sided_pvalue(Method method, const NullFit& fit,
                              const Eigen::VectorXd& g, double u) {
  PvalueEngine engine(method, fit, g);
  return engine.at(u);
}

PvalueReport normal_pvalue(const NullFit& fit, const Eigen::VectorXd& g, double u) {
  return two_sided_pvalue(Method::normal, fit, g, u);
}

}  // namespace latscore
