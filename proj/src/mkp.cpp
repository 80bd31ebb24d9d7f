#include "rilo/mkp.hpp"

#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "rilo/errors.hpp"

namespace rilo {

void MKPSet::validate() const {
  if (pairs.cols() != 6 && pairs.size() != 0)
    throw std::invalid_argument("MKPSet: pairs must have 6 columns");
  if (!pairs.allFinite()) throw std::invalid_argument("MKPSet: non-finite pair entry");
  if (weights) {
    if (weights->size() != pairs.rows())
      throw std::invalid_argument("MKPSet: weight count does not match pair count");
    if ((weights->array() < 0.0).any() || (weights->array() > 1.0).any())
      throw std::invalid_argument("MKPSet: weights must lie in [0,1]");
  }
  if (labels) {
    if (labels->size() != pairs.rows())
      throw std::invalid_argument("MKPSet: label count does not match pair count");
    if (((labels->array() != 0) && (labels->array() != 1)).any())
      throw std::invalid_argument("MKPSet: labels must be 0 or 1");
  }
}

void save_mkps(const MKPSet& set, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open MKP file for writing: " + path.string());
  out.precision(std::numeric_limits<double>::max_digits10);

  out << "xi,yi,zi,xj,yj,zj";
  if (set.weights) out << ",weight";
  if (set.labels) out << ",label";
  out << "\n";
  for (Eigen::Index k = 0; k < set.size(); ++k) {
    for (int c = 0; c < 6; ++c) out << (c ? "," : "") << set.pairs(k, c);
    if (set.weights) out << "," << (*set.weights)(k);
    if (set.labels) out << "," << (*set.labels)(k);
    out << "\n";
  }
  if (!out) throw IoError("write failed: " + path.string());
}

MKPSet load_mkps(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open MKP file: " + path.string());

  std::string line;
  if (!std::getline(in, line)) throw FormatError(path.string() + ": missing header line");
  std::vector<std::string> cols;
  {
    std::istringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ',')) cols.push_back(tok);
  }
  const std::vector<std::string> base = {"xi", "yi", "zi", "xj", "yj", "zj"};
  if (cols.size() < 6) throw FormatError(path.string() + ": expected at least 6 columns");
  for (int i = 0; i < 6; ++i)
    if (cols[i] != base[i])
      throw FormatError(path.string() + ": unexpected header column \"" + cols[i] + "\"");
  bool has_weight = false, has_label = false;
  for (std::size_t i = 6; i < cols.size(); ++i) {
    if (cols[i] == "weight")
      has_weight = true;
    else if (cols[i] == "label")
      has_label = true;
    else
      throw FormatError(path.string() + ": unexpected header column \"" + cols[i] + "\"");
  }

  std::vector<double> values;
  std::size_t rows = 0;
  const std::size_t ncol = cols.size();
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string tok;
    std::size_t got = 0;
    while (std::getline(ss, tok, ',')) {
      try {
        values.push_back(std::stod(tok));
      } catch (const std::exception&) {
        throw FormatError(path.string() + ":" + std::to_string(lineno) +
                          ": not a number: \"" + tok + "\"");
      }
      ++got;
    }
    if (got != ncol)
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": expected " +
                        std::to_string(ncol) + " values, got " + std::to_string(got));
    ++rows;
  }

  MKPSet set;
  set.pairs.resize(static_cast<Eigen::Index>(rows), 6);
  if (has_weight) set.weights = Eigen::VectorXd(rows);
  if (has_label) set.labels = Eigen::VectorXi(rows);
  for (std::size_t k = 0; k < rows; ++k) {
    const double* row = &values[k * ncol];
    for (int c = 0; c < 6; ++c) set.pairs(static_cast<Eigen::Index>(k), c) = row[c];
    std::size_t next = 6;
    if (has_weight) (*set.weights)(static_cast<Eigen::Index>(k)) = row[next++];
    if (has_label)
      (*set.labels)(static_cast<Eigen::Index>(k)) = static_cast<int>(std::lround(row[next]));
  }
  set.validate();
  return set;
}

}  // namespace rilo
