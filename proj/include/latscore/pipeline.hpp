#ifndef LATSCORE_PIPELINE_HPP
#define LATSCORE_PIPELINE_HPP

#include <optional>
#include <string>
#include <vector>

#include "latscore/exact.hpp"
#include "latscore/method.hpp"

namespace latscore {

enum class NaPolicy { drop, impute };

/// Two-stage GWAS run: normal screen at alpha_screen, refined methods for
/// the survivors, everything written as one row per input variant.
struct RunConfig {
  std::string pheno_path;
  std::string geno_path;
  std::string out_path;
  std::vector<Method> methods{Method::dspa_cc, Method::espa_cc, Method::espa};
  double alpha_screen = 5e-5;
  double alpha_report = 5e-8;
  int min_mac = 0;
  double min_maf = 0.0;
  NaPolicy na_policy = NaPolicy::drop;
  int threads = 1;
  bool no_screen = false;  // run every configured method on every variant
};

struct GwasSummary {
  long variants = 0;
  long filtered = 0;
  long untestable = 0;
  long tested = 0;
  long refined = 0;   // variants past the screen
  long significant = 0;  // refined p (or normal) at or below alpha_report
};

GwasSummary run_gwas(const RunConfig& config);

/// Exact intercept-model lattice pmf as plot-ready CSV: one row per support
/// point with the support endpoints and, when an observation is marked, a
/// 0/1 column for membership in its two-sided p-value mass set.
void emit_lattice_pmf(const GenotypeCounts& counts, int v, std::optional<double> mark,
                      const std::string& out_path);

}  // namespace latscore

#endif
