#include "latscore/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "latscore/evaluate.hpp"
#include "latscore/io.hpp"
#include "latscore/model.hpp"
#include "latscore/pvalue.hpp"

namespace latscore {

namespace {

std::string format_pvalue(double p) {
  if (std::isnan(p)) return "NA";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3e", p);  // 4 significant digits
  return buf;
}

std::string format_real(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", x);
  return buf;
}

struct VariantRow {
  GenotypeRecord rec;
  std::string filter_reason;  // empty = analysed
  bool untestable = false;
  bool screened_out = false;
  double maf = 0.0;
  int mac = 0;
  double u = 0.0;
  double var_cond = 0.0;
  double p_normal = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> p_methods;  // aligned with config.methods, NaN = not run
  std::vector<std::string> flags;
};

int most_likely_genotype(const std::vector<std::int8_t>& g) {
  long count[3] = {0, 0, 0};
  for (std::int8_t v : g)
    if (v >= 0) ++count[v];
  int best = 0;
  for (int k = 1; k < 3; ++k)
    if (count[k] > count[best]) best = k;
  return best;
}

void analyse_variant(const NullFit& fit, const RunConfig& config, VariantRow& row) {
  const Eigen::Index n = fit.n();
  long missing = 0;
  for (std::int8_t v : row.rec.genotypes)
    if (v < 0) ++missing;
  std::vector<std::int8_t> geno = row.rec.genotypes;
  if (missing > 0) {
    if (config.na_policy == NaPolicy::drop) {
      row.filter_reason = "missing_genotypes";
      return;
    }
    int fill = most_likely_genotype(geno);
    for (auto& v : geno)
      if (v < 0) v = static_cast<std::int8_t>(fill);
    row.flags.push_back("imputed:" + std::to_string(missing));
  }
  Eigen::VectorXd g(n);
  long allele_count = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    g[i] = geno[static_cast<size_t>(i)];
    allele_count += geno[static_cast<size_t>(i)];
  }
  row.mac = static_cast<int>(std::min<long>(allele_count, 2 * n - allele_count));
  row.maf = static_cast<double>(row.mac) / static_cast<double>(2 * n);
  if (row.mac < config.min_mac) {
    row.filter_reason = "low_mac";
    return;
  }
  if (row.maf < config.min_maf) {
    row.filter_reason = "low_maf";
    return;
  }

  ScoreContext ctx = make_score_context(fit, g);
  row.u = ctx.u;
  row.var_cond = ctx.var_cond;
  if (!ctx.testable) {
    row.untestable = true;
    row.flags.push_back("untestable");
    return;
  }
  PvalueReport normal = normal_pvalue(fit, g, ctx.u);
  row.p_normal = normal.p_two_sided;
  row.p_methods.assign(config.methods.size(),
                       std::numeric_limits<double>::quiet_NaN());
  if (!config.no_screen && row.p_normal > config.alpha_screen) {
    row.screened_out = true;
    return;
  }
  for (size_t mi = 0; mi < config.methods.size(); ++mi) {
    std::string tag = method_name(config.methods[mi]);
    try {
      PvalueReport rep = two_sided_pvalue(config.methods[mi], fit, g, ctx.u);
      row.p_methods[mi] = rep.p_two_sided;
      if (rep.sided == PvalueReport::Sided::one)
        row.flags.push_back(tag + ":one_sided");
      if (rep.flags.boundary) row.flags.push_back(tag + ":boundary");
      if (rep.flags.fallback) row.flags.push_back(tag + ":fallback");
      if (rep.flags.normal_cutoff) row.flags.push_back(tag + ":normal_cutoff");
      if (rep.flags.clamped) row.flags.push_back(tag + ":clamped");
    } catch (const std::exception&) {
      // method not applicable to this model (e.g. an exact method with
      // general covariates) or a solver failure: record and move on
      row.flags.push_back(tag + ":error");
    }
  }
}

}  // namespace

GwasSummary run_gwas(const RunConfig& config) {
  PhenoData pheno = read_pheno(config.pheno_path);
  Dataset d{pheno.y, pheno.X, Eigen::VectorXd()};
  d.validate();
  NullFit fit = fit_null(pheno.y, pheno.X);

  GenotypeReader reader(config.geno_path);
  reader.align_to(pheno.ids);
  std::vector<VariantRow> rows;
  GenotypeRecord rec;
  while (reader.next(rec)) {
    VariantRow row;
    row.rec = rec;
    rows.push_back(std::move(row));
  }

  const int threads = std::max(1, config.threads);
  std::atomic<size_t> cursor{0};
  auto work = [&]() {
    for (;;) {
      size_t i = cursor.fetch_add(1);
      if (i >= rows.size()) break;
      analyse_variant(fit, config, rows[i]);
    }
  };
  if (threads == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < threads; ++w) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }

  std::ofstream out(config.out_path);
  if (!out) throw std::runtime_error("cannot open output file: " + config.out_path);
  out << "variant_id\tchrom\tpos\tmac\tmaf\tu\tvar_cond\tp_normal";
  for (Method m : config.methods) out << "\tp_" << method_name(m);
  out << "\tpassed_screen\tflags\tfilter_reason\n";

  GwasSummary summary;
  summary.variants = static_cast<long>(rows.size());
  for (const VariantRow& row : rows) {
    out << row.rec.variant_id << '\t' << row.rec.chrom << '\t' << row.rec.pos << '\t';
    if (row.filter_reason.empty())
      out << row.mac << '\t' << format_real(row.maf);
    else
      out << "NA\tNA";
    out << '\t';
    if (row.filter_reason.empty() && !row.untestable)
      out << format_real(row.u) << '\t' << format_real(row.var_cond);
    else
      out << "NA\tNA";
    out << '\t' << format_pvalue(row.p_normal);
    for (size_t mi = 0; mi < config.methods.size(); ++mi)
      out << '\t'
          << format_pvalue(mi < row.p_methods.size()
                               ? row.p_methods[mi]
                               : std::numeric_limits<double>::quiet_NaN());
    std::string screened = "NA";
    if (row.filter_reason.empty() && !row.untestable)
      screened = row.screened_out ? "no" : "yes";
    out << '\t' << screened;
    out << '\t';
    if (row.flags.empty()) out << "-";
    else {
      for (size_t f = 0; f < row.flags.size(); ++f)
        out << (f ? ";" : "") << row.flags[f];
    }
    out << '\t' << (row.filter_reason.empty() ? "-" : row.filter_reason) << '\n';

    if (!row.filter_reason.empty()) {
      ++summary.filtered;
      continue;
    }
    if (row.untestable) {
      ++summary.untestable;
      continue;
    }
    ++summary.tested;
    if (!row.screened_out) {
      ++summary.refined;
      double best = row.p_normal;
      for (double p : row.p_methods)
        if (!std::isnan(p)) best = p;  // refined methods supersede the screen
      if (best <= config.alpha_report) ++summary.significant;
    }
  }
  if (summary.tested == 0)
    std::cerr << "warning: no variant passed the filters; the output table is empty\n";
  return summary;
}

void emit_lattice_pmf(const GenotypeCounts& counts, int v, std::optional<double> mark,
                      const std::string& out_path) {
  LatticePmf pmf = exact_intercept_pmf(counts, v);
  NullFit fit = make_intercept_fit(counts, v);
  Eigen::VectorXd g = genotype_from_counts(counts);
  SupportBounds sb = conditional_support(fit, g);

  std::vector<char> marked(static_cast<size_t>(pmf.size()), 0);
  if (mark) {
    double u = *mark;
    int iu = pmf.index_of(u);
    if (std::abs(u) > 1e-9) {
      double ui = reflect(u);
      for (int i = 0; i < pmf.size(); ++i) {
        double x = pmf.point(i);
        bool in_set = u > 0.0 ? (x >= u - 0.25 || x <= ui + 0.25)
                              : (x <= u + 0.25 || x >= ui - 0.25);
        // reflected side drops out when u_inv leaves the support
        if (u > 0.0 && ui < pmf.min() - 0.25) in_set = x >= u - 0.25;
        if (u < 0.0 && ui > pmf.max() + 0.25) in_set = x <= u + 0.25;
        marked[static_cast<size_t>(i)] = in_set ? 1 : 0;
      }
    } else {
      marked.assign(marked.size(), 1);  // p = 1: the whole support
    }
    (void)iu;
  }

  std::ofstream out(out_path);
  if (!out) throw std::runtime_error("cannot open output file: " + out_path);
  out << "u,probability,support_lower,support_upper,in_pvalue_set\n";
  out.precision(17);
  for (int i = 0; i < pmf.size(); ++i) {
    out << pmf.point(i) << ',' << pmf.probs[static_cast<size_t>(i)] << ',' << sb.lower
        << ',' << sb.upper << ',' << static_cast<int>(marked[static_cast<size_t>(i)])
        << '\n';
  }
}

}  // namespace latscore
