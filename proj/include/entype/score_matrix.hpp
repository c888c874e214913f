#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "entype/corpus.hpp"
#include "entype/tensor.hpp"

namespace entype {

// Dense entity x type score table, the interchange format between predict,
// joint, and evaluate. Scores are doubles regardless of training precision.
struct TypeScoreMatrix {
  std::vector<std::string> entities;
  std::vector<std::string> types;
  std::unordered_map<std::string, std::size_t> entity_index;
  Mat<double> scores;

  TypeScoreMatrix() = default;
  TypeScoreMatrix(std::vector<std::string> ents, std::vector<std::string> tys);

  std::size_t row_of(const std::string& entity) const;
};

// TSV rows entity<TAB>type<TAB>score under a `# config_hash=` header. Every
// cell is written; absent cells read back as 0 (sparse files are legal).
void save_scores(const TypeScoreMatrix& m, const std::string& path, const std::string& config_hash);

struct LoadedScores {
  TypeScoreMatrix matrix;
  std::string config_hash;  // empty when the file has no header
};

LoadedScores load_scores(const std::string& path, const TypeInventory& inv);

}  // namespace entype
