#include "latscore/io.hpp"

#include <algorithm>
#include <sstream>
#include <unordered_map>

namespace latscore {

std::vector<std::string> split_tsv(const std::string& line) {
  std::vector<std::string> out;
  size_t start = 0;
  for (;;) {
    size_t tab = line.find('\t', start);
    std::string field = line.substr(start, tab == std::string::npos ? tab : tab - start);
    if (!field.empty() && field.back() == '\r') field.pop_back();
    out.push_back(field);
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  return out;
}

PhenoData read_pheno(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open phenotype file: " + path);
  std::string line;
  long lineno = 0;
  if (!std::getline(in, line)) throw ParseError(path, 1, "empty phenotype file");
  ++lineno;
  std::vector<std::string> header = split_tsv(line);
  if (header.size() < 2)
    throw ParseError(path, lineno, "expected at least id and phenotype columns");

  PhenoData data;
  for (size_t c = 2; c < header.size(); ++c) data.covariate_names.push_back(header[c]);
  std::vector<double> ys;
  std::vector<std::vector<double>> covs;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> f = split_tsv(line);
    if (f.size() != header.size())
      throw ParseError(path, lineno, "expected " + std::to_string(header.size()) +
                                         " columns, got " + std::to_string(f.size()));
    data.ids.push_back(f[0]);
    if (f[1] != "0" && f[1] != "1")
      throw ParseError(path, lineno, "phenotype must be 0 or 1, got '" + f[1] + "'");
    ys.push_back(f[1] == "1" ? 1.0 : 0.0);
    std::vector<double> row;
    for (size_t c = 2; c < f.size(); ++c) {
      try {
        size_t used = 0;
        double x = std::stod(f[c], &used);
        if (used != f[c].size()) throw std::invalid_argument("trailing junk");
        row.push_back(x);
      } catch (const std::exception&) {
        throw ParseError(path, lineno, "non-numeric covariate '" + f[c] + "'");
      }
    }
    covs.push_back(std::move(row));
  }
  const Eigen::Index n = static_cast<Eigen::Index>(ys.size());
  if (n == 0) throw ParseError(path, lineno, "no samples in phenotype file");
  const Eigen::Index d = static_cast<Eigen::Index>(data.covariate_names.size()) + 1;
  data.y.resize(n);
  data.X.resize(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    data.y[i] = ys[static_cast<size_t>(i)];
    data.X(i, 0) = 1.0;
    for (Eigen::Index c = 1; c < d; ++c)
      data.X(i, c) = covs[static_cast<size_t>(i)][static_cast<size_t>(c - 1)];
  }
  return data;
}

GenotypeReader::GenotypeReader(const std::string& path) : path_(path), in_(path) {
  if (!in_) throw std::runtime_error("cannot open genotype file: " + path);
  std::string line;
  if (!std::getline(in_, line)) throw ParseError(path_, 1, "empty genotype file");
  ++line_;
  std::vector<std::string> header = split_tsv(line);
  if (header.size() < 4)
    throw ParseError(path_, line_, "expected variant_id, chrom, pos and sample columns");
  sample_ids_.assign(header.begin() + 3, header.end());
  perm_.resize(sample_ids_.size());
  for (size_t i = 0; i < perm_.size(); ++i) perm_[i] = static_cast<int>(i);
}

void GenotypeReader::align_to(const std::vector<std::string>& ids) {
  std::unordered_map<std::string, int> slot;
  for (size_t i = 0; i < ids.size(); ++i) slot[ids[i]] = static_cast<int>(i);
  std::string missing_in_pheno, missing_in_geno;
  std::vector<char> seen(ids.size(), 0);
  perm_.assign(sample_ids_.size(), -1);
  for (size_t c = 0; c < sample_ids_.size(); ++c) {
    auto it = slot.find(sample_ids_[c]);
    if (it == slot.end()) {
      missing_in_pheno += (missing_in_pheno.empty() ? "" : ",") + sample_ids_[c];
      continue;
    }
    perm_[c] = it->second;
    seen[static_cast<size_t>(it->second)] = 1;
  }
  for (size_t i = 0; i < ids.size(); ++i)
    if (!seen[i]) missing_in_geno += (missing_in_geno.empty() ? "" : ",") + ids[i];
  if (!missing_in_pheno.empty() || !missing_in_geno.empty()) {
    std::string msg = "sample id mismatch";
    if (!missing_in_geno.empty()) msg += "; absent from genotype file: " + missing_in_geno;
    if (!missing_in_pheno.empty())
      msg += "; absent from phenotype file: " + missing_in_pheno;
    throw std::runtime_error(msg);
  }
}

bool GenotypeReader::next(GenotypeRecord& rec) {
  std::string line;
  for (;;) {
    if (!std::getline(in_, line)) return false;
    ++line_;
    if (!line.empty()) break;
  }
  std::vector<std::string> f = split_tsv(line);
  if (f.size() != sample_ids_.size() + 3)
    throw ParseError(path_, line_, "expected " + std::to_string(sample_ids_.size() + 3) +
                                       " columns, got " + std::to_string(f.size()));
  rec.variant_id = f[0];
  rec.chrom = f[1];
  try {
    rec.pos = std::stoll(f[2]);
  } catch (const std::exception&) {
    throw ParseError(path_, line_, "non-integer position '" + f[2] + "'");
  }
  rec.genotypes.assign(sample_ids_.size(), -1);
  for (size_t c = 0; c < sample_ids_.size(); ++c) {
    const std::string& tok = f[c + 3];
    std::int8_t val;
    if (tok == "NA") val = -1;
    else if (tok == "0") val = 0;
    else if (tok == "1") val = 1;
    else if (tok == "2") val = 2;
    else
      throw ParseError(path_, line_,
                       "genotype must be 0, 1, 2 or NA, got '" + tok + "'");
    int out_slot = perm_[c];
    if (out_slot >= 0) rec.genotypes[static_cast<size_t>(out_slot)] = val;
  }
  return true;
}

std::map<std::string, std::string> read_kv_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  std::map<std::string, std::string> kv;
  std::string line;
  long lineno = 0;
  auto trim = [](std::string s) {
    size_t b = s.find_first_not_of(" \t\r");
    size_t e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++lineno;
    size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ParseError(path, lineno, "expected key = value");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty())
      throw ParseError(path, lineno, "expected key = value");
    kv[key] = value;
  }
  return kv;
}

}  // namespace latscore
