#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "entype/tensor.hpp"

namespace entype {

// Pretrained vectors keyed by token. Loaded as doubles; models narrow to
// their working precision on construction. Frozen tables never change.
struct EmbeddingTable {
  std::vector<std::string> tokens;
  std::unordered_map<std::string, std::size_t> index;
  Mat<double> vecs;

  std::size_t dim() const { return vecs.cols; }
  std::size_t size() const { return tokens.size(); }

  const double* find(const std::string& tok) const {
    auto it = index.find(tok);
    return it == index.end() ? nullptr : vecs.row(it->second);
  }

  void add(const std::string& tok, const std::vector<double>& v);
};

// Format: header "count dim", then "token v1 ... vdim" per line.
EmbeddingTable load_embeddings(const std::string& path);
void save_embeddings(const EmbeddingTable& t, const std::string& path);

}  // namespace entype
