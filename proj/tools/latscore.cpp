// latscore: score-test p-values for binary GWAS via exact conditional
// lattice distributions and continuity-corrected saddlepoint approximations.
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "latscore/evaluate.hpp"
#include "latscore/io.hpp"
#include "latscore/pipeline.hpp"
#include "latscore/pvalue.hpp"

namespace {

using namespace latscore;

int default_threads() {
  if (const char* env = std::getenv("LATSCORE_THREADS")) {
    int t = std::atoi(env);
    if (t > 0) return t;
  }
  return 1;
}

std::vector<Method> parse_method_list(const std::string& csv) {
  std::vector<Method> methods;
  std::stringstream ss(csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    auto m = parse_method(tok);
    if (!m) throw CLI::ValidationError("--methods", "unknown method '" + tok + "'");
    methods.push_back(*m);
  }
  if (methods.empty()) throw CLI::ValidationError("--methods", "empty method list");
  return methods;
}

double kv_double(const std::map<std::string, std::string>& kv, const std::string& key,
                 std::optional<double> fallback = std::nullopt) {
  auto it = kv.find(key);
  if (it == kv.end()) {
    if (fallback) return *fallback;
    throw std::runtime_error("config: missing key '" + key + "'");
  }
  return std::stod(it->second);
}

long kv_long(const std::map<std::string, std::string>& kv, const std::string& key,
             std::optional<long> fallback = std::nullopt) {
  auto it = kv.find(key);
  if (it == kv.end()) {
    if (fallback) return *fallback;
    throw std::runtime_error("config: missing key '" + key + "'");
  }
  return std::stol(it->second);
}

std::string kv_string(const std::map<std::string, std::string>& kv,
                      const std::string& key, const std::string& fallback) {
  auto it = kv.find(key);
  return it == kv.end() ? fallback : it->second;
}

int run_gwas_cmd(const RunConfig& config) {
  GwasSummary s = run_gwas(config);
  std::cout << "variants=" << s.variants << " tested=" << s.tested
            << " refined=" << s.refined << " filtered=" << s.filtered
            << " untestable=" << s.untestable << " significant=" << s.significant
            << "\n";
  return 0;
}

int run_exact_pmf_cmd(int n0, int n1, int n2, int v, std::optional<double> mark,
                      const std::string& out) {
  GenotypeCounts counts{n0, n1, n2};
  emit_lattice_pmf(counts, v, mark, out);
  if (mark) {
    NullFit fit = make_intercept_fit(counts, v);
    Eigen::VectorXd g = genotype_from_counts(counts);
    PvalueReport rep = two_sided_pvalue(Method::exact_intercept, fit, g, *mark);
    std::cout << "marked u=" << *mark << " exact two-sided p=" << rep.p_two_sided
              << (rep.sided == PvalueReport::Sided::one ? " (one-sided)" : "") << "\n";
  }
  return 0;
}

int run_error_profile_cmd(const std::string& config_path, const std::string& out_prefix,
                          int threads) {
  auto kv = read_kv_config(config_path);
  GenotypeCounts counts;
  counts.n0 = static_cast<int>(kv_long(kv, "n0"));
  counts.n1 = static_cast<int>(kv_long(kv, "n1"));
  counts.n2 = static_cast<int>(kv_long(kv, "n2", 0));
  double alpha = kv_double(kv, "alpha");
  std::vector<Method> methods = parse_method_list(kv_string(kv, "methods", "dspa_cc"));
  double mu_min = kv_double(kv, "mu_min", 0.005);
  double mu_max = kv_double(kv, "mu_max", 0.995);
  long mu_points = kv_long(kv, "mu_points", 199);
  std::vector<double> mu_grid;
  for (long i = 0; i < mu_points; ++i)
    mu_grid.push_back(mu_min + (mu_max - mu_min) * static_cast<double>(i) /
                                   static_cast<double>(mu_points - 1));

  std::ofstream cond(out_prefix + "_conditional.csv");
  std::ofstream overall(out_prefix + "_overall.csv");
  if (!cond || !overall)
    throw std::runtime_error("cannot open output files with prefix " + out_prefix);
  cond << "v,conditional_error,method\n";
  overall << "mu,overall_error,invalid_prob,method\n";
  cond.precision(12);
  overall.precision(12);
  for (Method m : methods) {
    ErrorProfile profile = error_profile(counts, alpha, m, mu_grid, threads);
    for (size_t i = 0; i < profile.cond_error.size(); ++i)
      cond << (i + 1) << ',' << profile.cond_error[i] << ',' << method_name(m) << '\n';
    for (size_t i = 0; i < mu_grid.size(); ++i)
      overall << mu_grid[i] << ',' << profile.overall_error[i] << ','
              << profile.invalid_prob[i] << ',' << method_name(m) << '\n';
    std::cout << method_name(m) << ": " << profile.invalid_v.size()
              << " conditionally invalid v values\n";
  }
  return 0;
}

int run_simulate_cmd(const std::string& config_path, const std::string& out_path,
                     int threads, std::optional<std::uint64_t> seed_override) {
  auto kv = read_kv_config(config_path);
  SimConfig config;
  config.n = static_cast<int>(kv_long(kv, "n"));
  config.cases = static_cast<int>(kv_long(kv, "cases"));
  config.maf = kv_double(kv, "maf");
  config.alpha = kv_double(kv, "alpha");
  config.replicates = kv_long(kv, "replicates");
  config.methods = parse_method_list(kv_string(kv, "methods", "dspa_cc,espa_cc,espa"));
  config.seed = static_cast<std::uint64_t>(kv_long(kv, "seed", 1));
  config.beta0 = kv_double(kv, "beta0", -5.6);
  config.threads = threads;
  if (seed_override) config.seed = *seed_override;

  SimResult res = simulate_conditional_t1e(config);
  std::ofstream out(out_path);
  if (!out) throw std::runtime_error("cannot open output file: " + out_path);
  out << "method,replicates,rejections,rate,ci_lower,ci_upper,untestable,fit_failures\n";
  out.precision(12);
  for (const SimMethodResult& mr : res.methods) {
    out << method_name(mr.method) << ',' << res.replicates << ',' << mr.rejections
        << ',' << mr.rate << ',' << mr.ci.lower << ',' << mr.ci.upper << ','
        << res.untestable << ',' << res.fit_failures << '\n';
    std::cout << method_name(mr.method) << ": rate=" << mr.rate << " ci=["
              << mr.ci.lower << "," << mr.ci.upper << "]\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"score-test p-values for imbalanced binary GWAS"};
  app.require_subcommand(1);
  int threads = default_threads();

  // gwas
  auto* gwas = app.add_subcommand("gwas", "two-stage single-variant association scan");
  RunConfig rc;
  std::string methods_csv = "dspa_cc,espa_cc,espa";
  std::string na_policy = "drop";
  gwas->add_option("--pheno", rc.pheno_path, "phenotype/covariate TSV")->required();
  gwas->add_option("--geno", rc.geno_path, "variant-major genotype TSV")->required();
  gwas->add_option("--out", rc.out_path, "output TSV")->required();
  gwas->add_option("--methods", methods_csv, "refined methods, comma separated");
  gwas->add_option("--alpha-screen", rc.alpha_screen, "normal-screen threshold");
  gwas->add_option("--alpha-report", rc.alpha_report, "reporting threshold");
  gwas->add_option("--min-mac", rc.min_mac, "minimum minor allele count");
  gwas->add_option("--min-maf", rc.min_maf, "minimum minor allele frequency");
  gwas->add_option("--na-policy", na_policy, "drop | impute")
      ->check(CLI::IsMember({"drop", "impute"}));
  gwas->add_option("--threads", threads, "worker threads (env LATSCORE_THREADS)");
  gwas->add_flag("--no-screen", rc.no_screen, "run refined methods on every variant");

  // exact-pmf
  auto* pmf = app.add_subcommand("exact-pmf", "exact intercept-model lattice pmf");
  int n0 = 0, n1 = 0, n2 = 0, v = 0;
  double mark_value = 0.0;
  pmf->add_option("--n0", n0, "count of genotype 0")->required();
  pmf->add_option("--n1", n1, "count of genotype 1")->required();
  pmf->add_option("--n2", n2, "count of genotype 2");
  pmf->add_option("--v", v, "number of cases")->required();
  auto* mark_opt = pmf->add_option("--mark", mark_value, "observed u to highlight");
  std::string pmf_out;
  pmf->add_option("--out", pmf_out, "output CSV")->required();

  // error-profile
  auto* prof = app.add_subcommand("error-profile",
                                  "conditional/overall type-I-error profile");
  std::string prof_config, prof_out;
  prof->add_option("--config", prof_config, "key=value config file")->required();
  prof->add_option("--out", prof_out, "output prefix")->required();
  prof->add_option("--threads", threads, "worker threads");

  // simulate
  auto* sim = app.add_subcommand("simulate", "conditional type-I-error simulation");
  std::string sim_config, sim_out;
  std::uint64_t sim_seed = 0;
  sim->add_option("--config", sim_config, "key=value config file")->required();
  sim->add_option("--out", sim_out, "output CSV")->required();
  auto* seed_opt = sim->add_option("--seed", sim_seed, "override config seed");
  sim->add_option("--threads", threads, "worker threads");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gwas->parsed()) {
      rc.methods = parse_method_list(methods_csv);
      rc.na_policy = na_policy == "impute" ? NaPolicy::impute : NaPolicy::drop;
      rc.threads = threads;
      return run_gwas_cmd(rc);
    }
    if (pmf->parsed()) {
      std::optional<double> mark;
      if (mark_opt->count() > 0) mark = mark_value;
      return run_exact_pmf_cmd(n0, n1, n2, v, mark, pmf_out);
    }
    if (prof->parsed()) return run_error_profile_cmd(prof_config, prof_out, threads);
    if (sim->parsed()) {
      std::optional<std::uint64_t> seed;
      if (seed_opt->count() > 0) seed = sim_seed;
      return run_simulate_cmd(sim_config, sim_out, threads, seed);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
