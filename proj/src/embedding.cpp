#include "entype/embedding.hpp"

#include <cstring>
#include <fstream>

#include "entype/errors.hpp"
#include "entype/text.hpp"

namespace entype {

void EmbeddingTable::add(const std::string& tok, const std::vector<double>& v) {
  if (vecs.cols == 0 && vecs.rows == 0) vecs.cols = v.size();
  if (v.size() != vecs.cols)
    throw ShapeError("embedding add: dim " + std::to_string(v.size()) + " vs table dim " +
                     std::to_string(vecs.cols));
  if (!index.emplace(tok, tokens.size()).second)
    throw FormatError("duplicate embedding token: " + tok);
  tokens.push_back(tok);
  vecs.a.insert(vecs.a.end(), v.begin(), v.end());
  ++vecs.rows;
}

EmbeddingTable load_embeddings(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open embedding file: " + path);
  std::string line;
  std::size_t lineno = 0;
  auto where = [&] { return path + ":" + std::to_string(lineno); };

  if (!std::getline(in, line)) throw FormatError(path + ": empty embedding file");
  ++lineno;
  auto header = split_ws(line);
  if (header.size() != 2) throw FormatError(where() + ": header must be 'count dim'");
  std::size_t count = static_cast<std::size_t>(parse_int(header[0], "embedding count"));
  std::size_t dim = static_cast<std::size_t>(parse_int(header[1], "embedding dim"));
  if (dim == 0) throw FormatError(where() + ": dim must be positive");

  EmbeddingTable t;
  t.tokens.reserve(count);
  t.vecs = Mat<double>(0, dim);
  t.vecs.a.reserve(count * dim);
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto parts = split_ws(line);
    if (parts.size() != dim + 1)
      throw FormatError(where() + ": expected token plus " + std::to_string(dim) + " values, got " +
                        std::to_string(parts.size() ? parts.size() - 1 : 0));
    if (!t.index.emplace(parts[0], t.tokens.size()).second)
      throw FormatError(where() + ": duplicate token '" + parts[0] + "'");
    t.tokens.push_back(parts[0]);
    for (std::size_t j = 0; j < dim; ++j)
      t.vecs.a.push_back(parse_double(parts[j + 1], where()));
    ++t.vecs.rows;
  }
  if (t.tokens.size() != count)
    throw FormatError(path + ": header declares " + std::to_string(count) + " rows, file has " +
                      std::to_string(t.tokens.size()));
  return t;
}

void save_embeddings(const EmbeddingTable& t, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write embedding file: " + path);
  out << t.size() << ' ' << t.dim() << '\n';
  for (std::size_t i = 0; i < t.size(); ++i) {
    out << t.tokens[i];
    for (std::size_t j = 0; j < t.dim(); ++j) out << ' ' << format_g17(t.vecs.at(i, j));
    out << '\n';
  }
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace entype
