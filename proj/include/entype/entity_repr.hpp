#pragma once

#include <cstdint>
#include <string>
#include <type_traits>
#include <unordered_map>
#include <vector>

#include "entype/config.hpp"
#include "entype/corpus.hpp"
#include "entype/embedding.hpp"
#include "entype/ops.hpp"
#include "entype/tensor.hpp"

namespace entype {

// Character inventory for the name-level models. Reserved ids first, then the
// bytes of the train entity names in first-appearance order. Bytes never seen
// in training collapse to kUnk.
struct CharVocab {
  static constexpr std::uint32_t kCpad = 0, kStart = 1, kEnd = 2, kUnk = 3;
  std::string alphabet;  // byte for id i+4
  std::unordered_map<char, std::uint32_t> index;

  std::size_t size() const { return alphabet.size() + 4; }
  std::uint32_t id(char c) const {
    auto it = index.find(c);
    return it == index.end() ? kUnk : it->second;
  }
  void add(char c) {
    if (index.emplace(c, static_cast<std::uint32_t>(alphabet.size() + 4)).second)
      alphabet.push_back(c);
  }
};

CharVocab build_char_vocab(const Catalog& catalog, const std::vector<std::string>& train_ids);

// START + name bytes + END, truncated keeping END, padded with CPAD to len.
std::vector<std::uint32_t> encode_name(const std::string& name, const CharVocab& vocab,
                                       std::size_t len);

// Mean of the in-vocabulary word vectors; words without a vector shrink the
// denominator. A fully out-of-vocabulary name yields zero and sets the flag.
std::vector<double> word_level_repr(const std::vector<std::string>& words,
                                    const EmbeddingTable& table, bool* all_oov = nullptr);

// Name-character feedforward representation: the char rows concatenated.
template <class T>
void clr_ff_forward(const std::vector<std::uint32_t>& ids, const Mat<T>& chars, T* out) {
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] >= chars.rows)
      throw IndexError("clr_ff: char id " + std::to_string(ids[i]) + " out of range");
    std::copy(chars.row(ids[i]), chars.row(ids[i]) + chars.cols, out + i * chars.cols);
  }
}

template <class T>
void clr_ff_backward(const std::vector<std::uint32_t>& ids, const T* dout, Mat<T>& dchars) {
  for (std::size_t i = 0; i < ids.size(); ++i)
    kern::axpy(T(1), dout + i * dchars.cols, dchars.row(ids[i]), dchars.cols);
}

// Name-character convolutional representation. Filter bank per width, shared
// bias per filter, rectifier, max pooling over positions. Output layout is
// width-major: out[wi * n_filters + f].
template <class T> struct ClrCnnCache {
  Mat<T> E;                                    // name chars gathered, len x d_c
  std::vector<Mat<T>> pre;                     // per width: n_filters x (len-w+1)
  std::vector<std::vector<std::size_t>> arg;   // per width: pooled position per filter
};

template <class T>
void clr_cnn_forward(const std::vector<std::uint32_t>& ids, const Mat<T>& chars,
                     const std::vector<std::size_t>& widths, const std::vector<Mat<T>>& filt,
                     const std::vector<Mat<T>>& bias, T* out,
                     std::type_identity_t<ClrCnnCache<T>*> cache) {
  ClrCnnCache<T> local;
  ClrCnnCache<T>& c = cache ? *cache : local;
  lookup_forward(chars, ids, c.E);
  c.pre.assign(widths.size(), Mat<T>());
  c.arg.assign(widths.size(), {});
  std::vector<T> map;
  std::size_t off = 0;
  for (std::size_t wi = 0; wi < widths.size(); ++wi) {
    const std::size_t w = widths[wi], n = filt[wi].rows;
    if (filt[wi].cols != w * chars.cols)
      throw ShapeError("clr_cnn: filter bank for width " + std::to_string(w) + " has row length " +
                       std::to_string(filt[wi].cols) + ", want " + std::to_string(w * chars.cols));
    const std::size_t span = ids.size() - w + 1;
    c.pre[wi] = Mat<T>(n, span);
    c.arg[wi].assign(n, 0);
    map.assign(span, T(0));
    for (std::size_t f = 0; f < n; ++f) {
      conv1d_narrow(c.E, filt[wi].row(f), bias[wi].a[f], w, map.data(), c.pre[wi].row(f));
      auto [v, j] = maxpool(map.data(), span);
      c.arg[wi][f] = j;
      out[off + f] = v;
    }
    off += n;
  }
}

template <class T>
void clr_cnn_backward(const std::vector<std::uint32_t>& ids, const std::vector<std::size_t>& widths,
                      const std::vector<Mat<T>>& filt, const ClrCnnCache<T>& cache, const T* dout,
                      Mat<T>& dchars, const std::vector<Mat<T>*>& dfilt,
                      const std::vector<Mat<T>*>& dbias) {
  Mat<T> dE(cache.E.rows, cache.E.cols);
  std::size_t off = 0;
  for (std::size_t wi = 0; wi < widths.size(); ++wi) {
    const std::size_t w = widths[wi], n = filt[wi].rows, d = cache.E.cols;
    for (std::size_t f = 0; f < n; ++f) {
      const std::size_t j = cache.arg[wi][f];
      if (cache.pre[wi].at(f, j) <= 0) continue;  // pooled a dead position
      const T g = dout[off + f];
      if (g == T(0)) continue;
      kern::axpy(g, cache.E.row(j), dfilt[wi]->row(f), w * d);
      dbias[wi]->a[f] += g;
      kern::axpy(g, filt[wi].row(f), dE.row(j), w * d);
    }
    off += n;
  }
  lookup_backward(dchars, ids, dE);
}

// Sparse name features. Strings are namespaced except bag-of-words tokens.
std::vector<std::string> nsl_feature_strings(const std::string& name);
std::vector<std::string> bow_feature_strings(const std::string& name);

// Feature dictionary built over train names only; ids in first-appearance order.
struct FeatureDict {
  std::vector<std::string> names;
  std::unordered_map<std::string, std::uint32_t> index;
  std::size_t size() const { return names.size(); }
  void add(const std::string& f) {
    if (index.emplace(f, static_cast<std::uint32_t>(names.size())).second) names.push_back(f);
  }
};

FeatureDict build_feature_dict(const Catalog& catalog, const std::vector<std::string>& train_ids,
                               Level kind);

// Sorted unique ids; features outside the dictionary are dropped.
std::vector<std::uint32_t> encode_features(const std::vector<std::string>& feats,
                                           const FeatureDict& dict);

// Entity descriptions: token lists keyed by entity id, file order retained.
struct Descriptions {
  std::vector<std::pair<std::string, std::vector<std::string>>> docs;
  std::unordered_map<std::string, std::size_t> by_id;
  const std::vector<std::string>* find(const std::string& id) const {
    auto it = by_id.find(id);
    return it == by_id.end() ? nullptr : &docs[it->second].second;
  }
};

Descriptions load_descriptions(const std::string& path);

struct DescStats {
  std::unordered_map<std::string, std::size_t> df;
  std::size_t n_docs = 0;
};

DescStats desc_stats(const Descriptions& des);

// Mean word vector of the top_k in-vocabulary description words ranked by
// tf-idf (tf raw, idf = log(N / (df + 1)), score ties broken by token).
// Returns false when no in-vocabulary word exists; out is untouched then.
bool avg_des(const std::vector<std::string>& tokens, const EmbeddingTable& words,
             const DescStats& stats, std::size_t top_k, double* out);

// Frozen input block per entity plus the trainable-feature inputs. The model
// input is frozen.row[0..head_dim) | CLR block | frozen.row[head_dim..), so the
// description part sits after the name-character part.
struct GmDataset {
  std::vector<std::string> ids;
  Mat<double> frozen;                              // n x frozen_dim, fixed level order
  std::size_t head_dim = 0;                        // frozen width before the CLR insertion point
  std::vector<std::vector<std::uint32_t>> char_ids;  // present iff a CLR level is on
  std::vector<std::vector<std::uint32_t>> sparse;    // present iff nsl or bow
  Mat<std::uint8_t> gold;
};

struct ReprSpec {
  std::vector<Level> levels;
  std::size_t name_len = 30;
  std::size_t desc_top_k = 20;
  bool missing_entity_zero = true;
};

struct ReprTables {
  const EmbeddingTable* entity = nullptr;
  const EmbeddingTable* word = nullptr;
  const EmbeddingTable* subword = nullptr;  // SWLR table; word-level fallback is the caller's call
  const Descriptions* descriptions = nullptr;
  const DescStats* dstats = nullptr;
};

struct ReprStats {
  std::size_t missing_elr = 0;
  std::size_t all_oov_wwlr = 0;
  std::size_t all_oov_swlr = 0;
  std::size_t dropped_no_description = 0;
};

bool level_enabled(const std::vector<Level>& levels, Level lv);

// Width of the frozen block for this spec.
std::size_t frozen_dim(const ReprSpec& spec, const ReprTables& tabs);

// Assembles the per-entity inputs for the global model. Entities without a
// usable description are dropped when the description level is enabled.
GmDataset build_gm_dataset(const ReprSpec& spec, const ReprTables& tabs, const Catalog& catalog,
                           const std::vector<std::string>& ids, const TypeInventory& inv,
                           const CharVocab* cvocab, const FeatureDict* fdict, ReprStats* stats);

}  // namespace entype
