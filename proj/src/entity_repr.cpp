#include "entype/entity_repr.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>

#include "entype/errors.hpp"
#include "entype/text.hpp"

namespace entype {

CharVocab build_char_vocab(const Catalog& catalog, const std::vector<std::string>& train_ids) {
  CharVocab v;
  for (const auto& id : train_ids) {
    const EntityRecord* rec = catalog.find(id);
    if (!rec) throw IndexError("train id '" + id + "' not in catalog");
    for (char c : rec->name) v.add(c);
  }
  return v;
}

std::vector<std::uint32_t> encode_name(const std::string& name, const CharVocab& vocab,
                                       std::size_t len) {
  if (len < 3) throw ConfigError("name_len must be at least 3");
  std::vector<std::uint32_t> out;
  out.reserve(len);
  out.push_back(CharVocab::kStart);
  const std::size_t keep = std::min(name.size(), len - 2);
  for (std::size_t i = 0; i < keep; ++i) out.push_back(vocab.id(name[i]));
  out.push_back(CharVocab::kEnd);
  out.resize(len, CharVocab::kCpad);
  return out;
}

std::vector<double> word_level_repr(const std::vector<std::string>& words,
                                    const EmbeddingTable& table, bool* all_oov) {
  std::vector<double> out(table.dim(), 0.0);
  std::size_t n = 0;
  for (const auto& w : words) {
    if (const double* v = table.find(w)) {
      for (std::size_t i = 0; i < out.size(); ++i) out[i] += v[i];
      ++n;
    }
  }
  if (all_oov) *all_oov = n == 0;
  if (n)
    for (auto& x : out) x /= static_cast<double>(n);
  return out;
}

namespace {

char shape_class(unsigned char c) {
  if (std::isupper(c)) return 'X';
  if (std::islower(c)) return 'x';
  if (std::isdigit(c)) return '7';
  return '.';
}

std::string token_shape(const std::string& tok) {
  std::string s;
  for (unsigned char c : tok) {
    char k = shape_class(c);
    if (s.empty() || s.back() != k) s.push_back(k);  // runs collapse
  }
  return s;
}

void add_ngrams(const std::string& body, const char* ns, std::vector<std::string>& out) {
  std::string b = "^" + body + "$";
  for (std::size_t n = 1; n <= 5; ++n)
    for (std::size_t i = 0; i + n <= b.size(); ++i) out.push_back(ns + b.substr(i, n));
}

}  // namespace

std::vector<std::string> nsl_feature_strings(const std::string& name) {
  std::vector<std::string> out;
  out.push_back("len=" + std::to_string(name.size()));
  if (name.empty()) return out;
  std::string shape;
  for (const auto& tok : split_ws(name)) {
    if (!shape.empty()) shape.push_back('-');
    shape += token_shape(tok);
  }
  out.push_back("shape=" + shape);
  add_ngrams(name, "ng=", out);
  std::string norm;
  for (unsigned char c : name) {
    if (std::isdigit(c)) norm.push_back('7');
    else if (std::isalpha(c)) norm.push_back(static_cast<char>(std::tolower(c)));
    else norm.push_back('.');
  }
  add_ngrams(norm, "nng=", out);
  return out;
}

std::vector<std::string> bow_feature_strings(const std::string& name) {
  std::vector<std::string> out;
  for (const auto& w : split_ws(name)) {
    out.push_back(w);
    std::string lo = w;
    for (auto& c : lo) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (lo != w) out.push_back(lo);
  }
  return out;
}

FeatureDict build_feature_dict(const Catalog& catalog, const std::vector<std::string>& train_ids,
                               Level kind) {
  if (kind != Level::nsl && kind != Level::bow)
    throw ConfigError("feature dictionary exists only for the sparse levels");
  FeatureDict d;
  for (const auto& id : train_ids) {
    const EntityRecord* rec = catalog.find(id);
    if (!rec) throw IndexError("train id '" + id + "' not in catalog");
    auto feats = kind == Level::nsl ? nsl_feature_strings(rec->name) : bow_feature_strings(rec->name);
    for (const auto& f : feats) d.add(f);
  }
  return d;
}

std::vector<std::uint32_t> encode_features(const std::vector<std::string>& feats,
                                           const FeatureDict& dict) {
  std::vector<std::uint32_t> ids;
  for (const auto& f : feats) {
    auto it = dict.index.find(f);
    if (it != dict.index.end()) ids.push_back(it->second);
  }
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  return ids;
}

Descriptions load_descriptions(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open descriptions file: " + path);
  Descriptions des;
  std::string line;
  std::size_t ln = 0;
  while (std::getline(in, line)) {
    ++ln;
    if (line.empty()) continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos)
      throw FormatError(path + ":" + std::to_string(ln) + ": expected id<TAB>text");
    std::string id = line.substr(0, tab);
    if (des.by_id.count(id))
      throw FormatError(path + ":" + std::to_string(ln) + ": duplicate description for '" + id + "'");
    des.by_id[id] = des.docs.size();
    des.docs.emplace_back(std::move(id), split_ws(line.substr(tab + 1)));
  }
  return des;
}

DescStats desc_stats(const Descriptions& des) {
  DescStats s;
  s.n_docs = des.docs.size();
  for (const auto& [id, toks] : des.docs) {
    std::vector<std::string> u = toks;
    std::sort(u.begin(), u.end());
    u.erase(std::unique(u.begin(), u.end()), u.end());
    for (const auto& t : u) ++s.df[t];
  }
  return s;
}

bool avg_des(const std::vector<std::string>& tokens, const EmbeddingTable& words,
             const DescStats& stats, std::size_t top_k, double* out) {
  if (top_k == 0) throw ConfigError("avg_des: top_k must be positive");
  std::unordered_map<std::string, std::size_t> tf;
  for (const auto& t : tokens)
    if (words.find(t)) ++tf[t];
  if (tf.empty()) return false;

  struct Scored {
    double score;
    const std::string* tok;
  };
  std::vector<Scored> ranked;
  ranked.reserve(tf.size());
  const double n = static_cast<double>(stats.n_docs);
  for (const auto& [tok, c] : tf) {
    auto it = stats.df.find(tok);
    const double df = it == stats.df.end() ? 0.0 : static_cast<double>(it->second);
    ranked.push_back({static_cast<double>(c) * std::log(n / (df + 1.0)), &tok});
  }
  std::sort(ranked.begin(), ranked.end(), [](const Scored& a, const Scored& b) {
    if (a.score != b.score) return a.score > b.score;
    return *a.tok < *b.tok;
  });
  const std::size_t m = std::min(top_k, ranked.size());
  std::fill(out, out + words.dim(), 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    const double* v = words.find(*ranked[i].tok);
    for (std::size_t j = 0; j < words.dim(); ++j) out[j] += v[j];
  }
  for (std::size_t j = 0; j < words.dim(); ++j) out[j] /= static_cast<double>(m);
  return true;
}

bool level_enabled(const std::vector<Level>& levels, Level lv) {
  return std::find(levels.begin(), levels.end(), lv) != levels.end();
}

namespace {

const EmbeddingTable* need(const EmbeddingTable* t, const char* what) {
  if (!t) throw ConfigError(std::string("level requires the ") + what + " table");
  return t;
}

}  // namespace

std::size_t frozen_dim(const ReprSpec& spec, const ReprTables& tabs) {
  std::size_t d = 0;
  if (level_enabled(spec.levels, Level::elr)) d += need(tabs.entity, "entity embedding")->dim();
  if (level_enabled(spec.levels, Level::wwlr)) d += need(tabs.word, "word embedding")->dim();
  if (level_enabled(spec.levels, Level::swlr)) d += need(tabs.subword, "subword embedding")->dim();
  if (level_enabled(spec.levels, Level::avg_des)) d += need(tabs.word, "word embedding")->dim();
  return d;
}

GmDataset build_gm_dataset(const ReprSpec& spec, const ReprTables& tabs, const Catalog& catalog,
                           const std::vector<std::string>& ids, const TypeInventory& inv,
                           const CharVocab* cvocab, const FeatureDict* fdict, ReprStats* stats) {
  const bool use_elr = level_enabled(spec.levels, Level::elr);
  const bool use_wwlr = level_enabled(spec.levels, Level::wwlr);
  const bool use_swlr = level_enabled(spec.levels, Level::swlr);
  const bool use_des = level_enabled(spec.levels, Level::avg_des);
  const bool use_clr =
      level_enabled(spec.levels, Level::clr_ff) || level_enabled(spec.levels, Level::clr_cnn);
  const bool use_sparse =
      level_enabled(spec.levels, Level::nsl) || level_enabled(spec.levels, Level::bow);
  if (spec.levels.empty()) throw ConfigError("no representation level enabled");
  if (use_clr && !cvocab) throw ConfigError("character levels need a char vocabulary");
  if (use_sparse && !fdict) throw ConfigError("sparse levels need a feature dictionary");
  if (use_des && (!tabs.descriptions || !tabs.dstats))
    throw ConfigError("description level needs the descriptions file");

  const std::size_t fd = frozen_dim(spec, tabs);
  GmDataset ds;
  ds.head_dim = fd - (use_des ? tabs.word->dim() : 0);

  // first pass decides which entities stay
  std::vector<const EntityRecord*> recs;
  std::vector<std::vector<double>> des_rows;
  for (const auto& id : ids) {
    const EntityRecord* rec = catalog.find(id);
    if (!rec) throw IndexError("entity '" + id + "' not in catalog");
    std::vector<double> dvec;
    if (use_des) {
      const std::vector<std::string>* toks = tabs.descriptions->find(id);
      dvec.assign(tabs.word->dim(), 0.0);
      if (!toks || !avg_des(*toks, *tabs.word, *tabs.dstats, spec.desc_top_k, dvec.data())) {
        if (stats) ++stats->dropped_no_description;
        continue;
      }
    }
    recs.push_back(rec);
    if (use_des) des_rows.push_back(std::move(dvec));
    ds.ids.push_back(id);
  }

  ds.frozen = Mat<double>(recs.size(), fd);
  ds.gold = Mat<std::uint8_t>(recs.size(), inv.size());
  if (use_clr) ds.char_ids.resize(recs.size());
  if (use_sparse) ds.sparse.resize(recs.size());

  for (std::size_t i = 0; i < recs.size(); ++i) {
    const EntityRecord* rec = recs[i];
    double* row = ds.frozen.row(i);
    if (use_elr) {
      const double* v = tabs.entity->find(rec->id);
      if (v) std::copy(v, v + tabs.entity->dim(), row);
      else if (spec.missing_entity_zero) {
        if (stats) ++stats->missing_elr;
      } else {
        throw IndexError("entity '" + rec->id + "' has no entity embedding");
      }
      row += tabs.entity->dim();
    }
    const auto words = split_ws(rec->name);
    if (use_wwlr) {
      bool oov = false;
      auto v = word_level_repr(words, *tabs.word, &oov);
      if (oov && stats) ++stats->all_oov_wwlr;
      row = std::copy(v.begin(), v.end(), row);
    }
    if (use_swlr) {
      bool oov = false;
      auto v = word_level_repr(words, *tabs.subword, &oov);
      if (oov && stats) ++stats->all_oov_swlr;
      row = std::copy(v.begin(), v.end(), row);
    }
    if (use_des) std::copy(des_rows[i].begin(), des_rows[i].end(), row);

    if (use_clr) ds.char_ids[i] = encode_name(rec->name, *cvocab, spec.name_len);
    if (use_sparse) {
      std::vector<std::string> feats;
      if (level_enabled(spec.levels, Level::nsl)) feats = nsl_feature_strings(rec->name);
      else feats = bow_feature_strings(rec->name);
      ds.sparse[i] = encode_features(feats, *fdict);
    }
    for (const auto& t : rec->types) ds.gold.at(i, inv.at(t)) = 1;
  }
  return ds;
}

}  // namespace entype
