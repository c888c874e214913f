#include "entype/context_model.hpp"

namespace entype {

CmVocab build_cm_vocab(const ContextDump& train) {
  CmVocab v;
  v.tokens = {kPadToken, "<unk>"};
  v.index[kPadToken] = CmVocab::kPad;
  v.index["<unk>"] = CmVocab::kUnk;
  for (const auto& ctx : train.contexts)
    for (const auto& tok : ctx.tokens)
      if (v.index.emplace(tok, v.tokens.size()).second) v.tokens.push_back(tok);
  return v;
}

CmDataset encode_cm_dataset(const ContextDump& dump, const CmVocab& vocab,
                            const TypeInventory& inv) {
  CmDataset ds;
  ds.contexts.reserve(dump.contexts.size());
  ds.ctx_gold = Mat<std::uint8_t>(dump.contexts.size(), inv.size());
  for (std::size_t i = 0; i < dump.contexts.size(); ++i) {
    std::vector<std::uint32_t> ids;
    ids.reserve(dump.contexts[i].tokens.size());
    for (const auto& tok : dump.contexts[i].tokens) ids.push_back(vocab.id(tok));
    ds.contexts.push_back(std::move(ids));
    for (const auto& t : dump.labels[i]) ds.ctx_gold.at(i, inv.at(t)) = 1;
  }
  ds.bags = group_bags(dump);
  ds.gold = Mat<std::uint8_t>(ds.bags.size(), inv.size());
  for (std::size_t b = 0; b < ds.bags.size(); ++b) {
    ds.entities.push_back(ds.bags[b].entity);
    for (const auto& t : ds.bags[b].labels) ds.gold.at(b, inv.at(t)) = 1;
  }
  return ds;
}

}  // namespace entype
