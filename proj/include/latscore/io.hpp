#ifndef LATSCORE_IO_HPP
#define LATSCORE_IO_HPP

#include <cstdint>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace latscore {

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& path, long line, const std::string& what)
      : std::runtime_error(path + ":" + std::to_string(line) + ": " + what) {}
};

/// Phenotype/covariate table: header-bearing TSV with columns
/// id, phenotype (0/1), then numeric covariates. The design matrix gets a
/// leading intercept column.
struct PhenoData {
  std::vector<std::string> ids;
  Eigen::VectorXd y;
  Eigen::MatrixXd X;
  std::vector<std::string> covariate_names;
};

PhenoData read_pheno(const std::string& path);

/// One variant row of the genotype matrix; genotypes aligned to the
/// phenotype sample order, -1 for missing.
struct GenotypeRecord {
  std::string variant_id;
  std::string chrom;
  long long pos = 0;
  std::vector<std::int8_t> genotypes;
};

/// Streaming reader for the variant-major genotype TSV:
/// header "variant_id<TAB>chrom<TAB>pos<TAB><sample>..." then one row per
/// variant with {0,1,2,NA} per sample.
class GenotypeReader {
 public:
  explicit GenotypeReader(const std::string& path);

  const std::vector<std::string>& sample_ids() const { return sample_ids_; }
  /// Reorder subsequent records to the given sample order; throws with the
  /// offending ids when the sets differ.
  void align_to(const std::vector<std::string>& ids);
  bool next(GenotypeRecord& rec);

 private:
  std::string path_;
  std::ifstream in_;
  long line_ = 0;
  std::vector<std::string> sample_ids_;
  std::vector<int> perm_;  // output slot for each file column
};

std::vector<std::string> split_tsv(const std::string& line);

/// key = value configuration file ('#' comments, blank lines allowed).
std::map<std::string, std::string> read_kv_config(const std::string& path);

}  // namespace latscore

#endif
