#include "entype/global_model.hpp"

#include "entype/errors.hpp"

namespace entype {

TypeScoreMatrix mft_baseline(const Catalog& catalog, const std::vector<std::string>& train_ids,
                             const std::vector<std::string>& eval_ids, const TypeInventory& inv) {
  if (train_ids.empty()) throw ConfigError("mft_baseline: empty train set");
  std::vector<std::size_t> counts(inv.size(), 0);
  for (const auto& id : train_ids) {
    const EntityRecord* rec = catalog.find(id);
    if (!rec) throw IndexError("train id '" + id + "' not in catalog");
    for (const auto& t : rec->types) ++counts[inv.at(t)];
  }
  std::size_t top = 0;
  for (std::size_t t = 1; t < counts.size(); ++t)
    if (counts[t] > counts[top]) top = t;  // ties keep the lower index
  TypeScoreMatrix out(eval_ids, inv.types);
  for (std::size_t i = 0; i < eval_ids.size(); ++i) out.scores.at(i, top) = 1.0;
  return out;
}

}  // namespace entype
