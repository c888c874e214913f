#pragma once

#include <cstring>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "entype/context_model.hpp"
#include "entype/entity_repr.hpp"
#include "entype/global_model.hpp"
#include "entype/tensor.hpp"

namespace entype {

template <class T> constexpr std::uint8_t precision_tag();
template <> constexpr std::uint8_t precision_tag<double>() { return 0; }
template <> constexpr std::uint8_t precision_tag<float>() { return 1; }

struct CkTensor {
  std::string name;
  std::size_t rows = 0, cols = 0;
  std::vector<unsigned char> bytes;  // rows*cols elements at the file precision
};

// Binary model container: magic ENTYPCK1, version, precision tag, config
// hash, ordered meta pairs, named string lists, named tensors. Byte-for-byte
// stable for identical contents.
struct Checkpoint {
  std::uint8_t precision = 0;
  std::string config_hash;
  std::vector<std::pair<std::string, std::string>> meta;
  std::vector<std::pair<std::string, std::vector<std::string>>> lists;
  std::vector<CkTensor> tensors;

  const std::string& meta_at(const std::string& key) const;
  std::size_t meta_num(const std::string& key) const;
  const std::vector<std::string>& list_at(const std::string& name) const;
  const CkTensor& tensor_at(const std::string& name) const;

  void put_meta(const std::string& key, const std::string& value) { meta.emplace_back(key, value); }
  void put_meta(const std::string& key, std::size_t value) {
    meta.emplace_back(key, std::to_string(value));
  }

  template <class U> void put_tensor(const std::string& name, const Mat<U>& m) {
    if (precision_tag<U>() != precision)
      throw FormatError("checkpoint precision tag does not match tensor '" + name + "'");
    CkTensor t;
    t.name = name;
    t.rows = m.rows;
    t.cols = m.cols;
    t.bytes.resize(m.size() * sizeof(U));
    std::memcpy(t.bytes.data(), m.data(), t.bytes.size());
    tensors.push_back(std::move(t));
  }

  template <class U> Mat<U> get_tensor(const std::string& name) const {
    if (precision_tag<U>() != precision)
      throw FormatError("checkpoint precision tag does not match the requested type");
    const CkTensor& t = tensor_at(name);
    if (t.bytes.size() != t.rows * t.cols * sizeof(U))
      throw FormatError("checkpoint tensor '" + name + "' payload size is inconsistent");
    Mat<U> m(t.rows, t.cols);
    std::memcpy(m.data(), t.bytes.data(), t.bytes.size());
    return m;
  }
};

void save_checkpoint(const Checkpoint& ck, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

namespace detail {

template <class T> void param_from_tensor(Param<T>& p, Mat<T> m) {
  p = Param<T>(m.rows, m.cols);
  p.v = std::move(m);
}

inline std::string join_widths(const std::vector<std::size_t>& w) {
  std::string s;
  for (std::size_t i = 0; i < w.size(); ++i) s += (i ? " " : "") + std::to_string(w[i]);
  return s;
}

inline std::vector<std::size_t> split_widths(const std::string& s) {
  std::vector<std::size_t> w;
  std::istringstream in(s);
  std::size_t x;
  while (in >> x) w.push_back(x);
  return w;
}

}  // namespace detail

template <class T>
Checkpoint gm_to_checkpoint(GmModel<T>& m, const CharVocab* chars, const FeatureDict* feats,
                            const TypeInventory& inv, const std::string& config_hash) {
  Checkpoint ck;
  ck.precision = precision_tag<T>();
  ck.config_hash = config_hash;
  ck.put_meta("kind", "gm");
  ck.put_meta("hidden", m.hidden);
  ck.put_meta("n_types", m.n_types);
  ck.put_meta("in_dim", m.in_dim);
  ck.put_meta("head_dim", m.head_dim);
  ck.put_meta("clr_dim", m.clr_dim);
  ck.put_meta("sparse", std::size_t(m.sparse ? 1 : 0));
  ck.put_meta("clr", m.clr_cnn ? "cnn" : (m.clr_ff ? "ff" : "none"));
  if (m.clr_cnn) ck.put_meta("clr_widths", detail::join_widths(m.clr_widths));
  if (chars) ck.put_meta("alphabet", chars->alphabet);
  ck.lists.emplace_back("types", inv.types);
  if (feats) ck.lists.emplace_back("features", feats->names);
  for (auto& [name, p] : m.params()) ck.put_tensor(name, p->v);
  return ck;
}

template <class T> struct GmLoad {
  GmModel<T> model;
  CharVocab chars;        // populated when a character level is present
  FeatureDict features;   // populated for sparse models
  std::vector<std::string> types;
};

template <class T> GmLoad<T> gm_from_checkpoint(const Checkpoint& ck) {
  if (ck.meta_at("kind") != "gm") throw FormatError("checkpoint holds a " + ck.meta_at("kind") +
                                                    " model, global model expected");
  GmLoad<T> out;
  GmModel<T>& m = out.model;
  m.hidden = ck.meta_num("hidden");
  m.n_types = ck.meta_num("n_types");
  m.in_dim = ck.meta_num("in_dim");
  m.head_dim = ck.meta_num("head_dim");
  m.clr_dim = ck.meta_num("clr_dim");
  m.sparse = ck.meta_num("sparse") != 0;
  const std::string clr = ck.meta_at("clr");
  m.clr_ff = clr == "ff";
  m.clr_cnn = clr == "cnn";

  detail::param_from_tensor(m.w_in, ck.get_tensor<T>("w_in"));
  detail::param_from_tensor(m.b_in, ck.get_tensor<T>("b_in"));
  detail::param_from_tensor(m.w_out, ck.get_tensor<T>("w_out"));
  detail::param_from_tensor(m.b_out, ck.get_tensor<T>("b_out"));
  if (m.clr_ff || m.clr_cnn) {
    detail::param_from_tensor(m.chars, ck.get_tensor<T>("chars"));
    out.chars.alphabet = ck.meta_at("alphabet");
    for (std::size_t i = 0; i < out.chars.alphabet.size(); ++i)
      out.chars.index[out.chars.alphabet[i]] = static_cast<std::uint32_t>(i + 4);
  }
  if (m.clr_cnn) {
    m.clr_widths = detail::split_widths(ck.meta_at("clr_widths"));
    for (auto w : m.clr_widths) {
      Param<T> f, b;
      detail::param_from_tensor(f, ck.get_tensor<T>("clr_filt_w" + std::to_string(w)));
      detail::param_from_tensor(b, ck.get_tensor<T>("clr_bias_w" + std::to_string(w)));
      m.clr_filt.push_back(std::move(f));
      m.clr_bias.push_back(std::move(b));
    }
  }
  out.types = ck.list_at("types");
  if (m.sparse)
    for (const auto& f : ck.list_at("features")) out.features.add(f);

  if (out.types.size() != m.n_types || m.w_out.v.rows != m.n_types ||
      m.w_out.v.cols != m.hidden || m.b_in.v.cols != m.hidden ||
      (!m.sparse && m.w_in.v.cols != m.in_dim) || (!m.sparse && m.w_in.v.rows != m.hidden) ||
      (m.sparse && m.w_in.v.cols != m.hidden))
    throw FormatError("checkpoint tensor shapes do not match its metadata");
  return out;
}

template <class T>
Checkpoint cm_to_checkpoint(CmModel<T>& m, const CmVocab& vocab, const TypeInventory& inv,
                            const std::string& config_hash) {
  Checkpoint ck;
  ck.precision = precision_tag<T>();
  ck.config_hash = config_hash;
  ck.put_meta("kind", "cm");
  ck.put_meta("encoder", to_string(m.encoder));
  ck.put_meta("miml", to_string(m.mode));
  ck.put_meta("hidden", m.hidden);
  ck.put_meta("n_types", m.n_types);
  ck.put_meta("emb_dim", m.emb_dim);
  ck.put_meta("window", m.window);
  ck.put_meta("n_filters", m.n_filters);
  ck.put_meta("type_dim", m.type_dim);
  if (m.encoder == CmEncoder::cnn) ck.put_meta("cm_widths", detail::join_widths(m.widths));
  ck.lists.emplace_back("types", inv.types);
  ck.lists.emplace_back("vocab", vocab.tokens);
  for (auto& [name, p] : m.params()) ck.put_tensor(name, p->v);
  return ck;
}

template <class T> struct CmLoad {
  CmModel<T> model;
  CmVocab vocab;
  std::vector<std::string> types;
};

template <class T> CmLoad<T> cm_from_checkpoint(const Checkpoint& ck) {
  if (ck.meta_at("kind") != "cm") throw FormatError("checkpoint holds a " + ck.meta_at("kind") +
                                                    " model, context model expected");
  CmLoad<T> out;
  CmModel<T>& m = out.model;
  const std::string enc = ck.meta_at("encoder");
  if (enc != "ff" && enc != "cnn") throw FormatError("unknown context encoder '" + enc + "'");
  m.encoder = enc == "ff" ? CmEncoder::ff : CmEncoder::cnn;
  const std::string mode = ck.meta_at("miml");
  if (mode == "ds") m.mode = MimlMode::ds;
  else if (mode == "max") m.mode = MimlMode::max;
  else if (mode == "avg") m.mode = MimlMode::avg;
  else if (mode == "max_avg") m.mode = MimlMode::max_avg;
  else if (mode == "att") m.mode = MimlMode::att;
  else throw FormatError("unknown miml mode '" + mode + "'");
  m.hidden = ck.meta_num("hidden");
  m.n_types = ck.meta_num("n_types");
  m.emb_dim = ck.meta_num("emb_dim");
  m.window = ck.meta_num("window");
  m.n_filters = ck.meta_num("n_filters");
  m.type_dim = ck.meta_num("type_dim");

  detail::param_from_tensor(m.emb, ck.get_tensor<T>("emb"));
  detail::param_from_tensor(m.w_h, ck.get_tensor<T>("w_h"));
  if (m.encoder == CmEncoder::cnn) {
    m.widths = detail::split_widths(ck.meta_at("cm_widths"));
    for (auto w : m.widths) {
      Param<T> f, b;
      detail::param_from_tensor(f, ck.get_tensor<T>("cm_filt_w" + std::to_string(w)));
      detail::param_from_tensor(b, ck.get_tensor<T>("cm_bias_w" + std::to_string(w)));
      m.filt.push_back(std::move(f));
      m.fbias.push_back(std::move(b));
    }
  }
  detail::param_from_tensor(m.w_out, ck.get_tensor<T>("w_out"));
  detail::param_from_tensor(m.b_out, ck.get_tensor<T>("b_out"));
  if (m.mode == MimlMode::att) {
    detail::param_from_tensor(m.att_m, ck.get_tensor<T>("att_m"));
    detail::param_from_tensor(m.t_emb, ck.get_tensor<T>("t_emb"));
  }

  out.types = ck.list_at("types");
  out.vocab.tokens = ck.list_at("vocab");
  for (std::size_t i = 0; i < out.vocab.tokens.size(); ++i)
    out.vocab.index[out.vocab.tokens[i]] = static_cast<std::uint32_t>(i);

  if (out.types.size() != m.n_types || m.w_out.v.rows != m.n_types ||
      m.w_out.v.cols != m.hidden || m.w_h.v.rows != m.hidden ||
      m.emb.v.rows != out.vocab.size() || m.emb.v.cols != m.emb_dim)
    throw FormatError("checkpoint tensor shapes do not match its metadata");
  return out;
}

}  // namespace entype
