#include "entype/score_matrix.hpp"

#include <fstream>

#include "entype/errors.hpp"
#include "entype/text.hpp"

namespace entype {

TypeScoreMatrix::TypeScoreMatrix(std::vector<std::string> ents, std::vector<std::string> tys)
    : entities(std::move(ents)), types(std::move(tys)) {
  for (std::size_t i = 0; i < entities.size(); ++i) entity_index[entities[i]] = i;
  if (entity_index.size() != entities.size())
    throw FormatError("score matrix: duplicate entity ids");
  scores = Mat<double>(entities.size(), types.size());
}

std::size_t TypeScoreMatrix::row_of(const std::string& entity) const {
  auto it = entity_index.find(entity);
  if (it == entity_index.end()) throw IndexError("entity '" + entity + "' not in score matrix");
  return it->second;
}

void save_scores(const TypeScoreMatrix& m, const std::string& path, const std::string& config_hash) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write: " + path);
  out << "# config_hash=" << config_hash << '\n';
  for (std::size_t i = 0; i < m.entities.size(); ++i)
    for (std::size_t j = 0; j < m.types.size(); ++j)
      out << m.entities[i] << '\t' << m.types[j] << '\t' << format_g17(m.scores.at(i, j)) << '\n';
  if (!out) throw IoError("write failed: " + path);
}

LoadedScores load_scores(const std::string& path, const TypeInventory& inv) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open: " + path);
  LoadedScores out;
  std::vector<std::string> entities;
  std::unordered_map<std::string, std::size_t> row_of;
  // (row, col) -> value collected first; matrix built once ids are known
  std::vector<std::pair<std::size_t, std::size_t>> cells;
  std::vector<double> values;

  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (line[0] == '#') {
      const std::string tag = "# config_hash=";
      if (line.rfind(tag, 0) == 0) out.config_hash = std::string(trim(line.substr(tag.size())));
      continue;
    }
    auto cols = split(line, '\t');
    if (cols.size() != 3)
      throw FormatError(path + ":" + std::to_string(lineno) + ": expected entity<TAB>type<TAB>score");
    auto [it, fresh] = row_of.emplace(cols[0], entities.size());
    if (fresh) entities.push_back(cols[0]);
    std::size_t col = inv.at(cols[1]);
    cells.emplace_back(it->second, col);
    values.push_back(parse_double(cols[2], path + ":" + std::to_string(lineno)));
  }
  out.matrix = TypeScoreMatrix(std::move(entities), inv.types);
  for (std::size_t k = 0; k < cells.size(); ++k)
    out.matrix.scores.at(cells[k].first, cells[k].second) = values[k];
  return out;
}

}  // namespace entype
