#pragma once

#include <algorithm>
#include <string>
#include <utility>
#include <vector>

#include "entype/config.hpp"
#include "entype/corpus.hpp"
#include "entype/embedding.hpp"
#include "entype/entity_repr.hpp"
#include "entype/metrics.hpp"
#include "entype/ops.hpp"
#include "entype/rng.hpp"
#include "entype/score_matrix.hpp"
#include "entype/tensor.hpp"
#include "entype/trainer.hpp"

namespace entype {

// Context vocabulary. PAD is pinned to id 0 so its embedding row can start at
// zero; UNK absorbs tokens never seen in training. Everything else keeps the
// first-occurrence order of the train dump.
struct CmVocab {
  static constexpr std::uint32_t kPad = 0, kUnk = 1;
  std::vector<std::string> tokens;
  std::unordered_map<std::string, std::uint32_t> index;

  std::size_t size() const { return tokens.size(); }
  std::uint32_t id(const std::string& t) const {
    auto it = index.find(t);
    return it == index.end() ? kUnk : it->second;
  }
};

CmVocab build_cm_vocab(const ContextDump& train);

// Encoded contexts plus bag structure. ctx_gold carries the distant labels per
// context (what context-level training iterates); gold carries them per bag.
struct CmDataset {
  std::vector<std::vector<std::uint32_t>> contexts;
  Mat<std::uint8_t> ctx_gold;
  std::vector<Bag> bags;
  std::vector<std::string> entities;  // one per bag
  Mat<std::uint8_t> gold;             // one row per bag
};

CmDataset encode_cm_dataset(const ContextDump& dump, const CmVocab& vocab,
                            const TypeInventory& inv);

template <class T> struct CmModel {
  CmEncoder encoder = CmEncoder::ff;
  MimlMode mode = MimlMode::ds;
  std::size_t n_types = 0, hidden = 0, emb_dim = 0, window = 0;

  Param<T> emb;  // vocab x d, trainable
  Param<T> w_h;  // ff: hidden x window*d; cnn: hidden x 2*k*n (no bias, tanh output)

  std::vector<std::size_t> widths;  // cnn banks, shared between the two halves
  std::size_t n_filters = 0;
  std::vector<Param<T>> filt;   // per width: n x w*d
  std::vector<Param<T>> fbias;  // per width: 1 x n

  Param<T> w_out;  // n_types x hidden
  Param<T> b_out;  // 1 x n_types

  std::size_t type_dim = 0;  // attention only
  Param<T> att_m;            // hidden x type_dim
  Param<T> t_emb;            // n_types x type_dim

  std::vector<std::pair<std::string, Param<T>*>> params() {
    std::vector<std::pair<std::string, Param<T>*>> ps = {{"emb", &emb}, {"w_h", &w_h}};
    for (std::size_t i = 0; i < filt.size(); ++i) {
      ps.emplace_back("cm_filt_w" + std::to_string(widths[i]), &filt[i]);
      ps.emplace_back("cm_bias_w" + std::to_string(widths[i]), &fbias[i]);
    }
    ps.emplace_back("w_out", &w_out);
    ps.emplace_back("b_out", &b_out);
    if (mode == MimlMode::att) {
      ps.emplace_back("att_m", &att_m);
      ps.emplace_back("t_emb", &t_emb);
    }
    return ps;
  }
};

template <class T>
CmModel<T> make_cm_model(const RunConfig& cfg, const CmVocab& vocab, const TypeInventory& inv,
                         const EmbeddingTable* word_init, const EmbeddingTable* type_init,
                         Rng& rng) {
  CmModel<T> m;
  m.encoder = cfg.encoder;
  m.mode = cfg.miml;
  m.n_types = inv.size();
  m.hidden = cfg.hidden;
  m.window = cfg.context_size + 1;
  m.emb_dim = word_init ? word_init->dim() : cfg.cm_emb_dim;

  Rng r = rng.derive("cm-init");
  m.emb = Param<T>(vocab.size(), m.emb_dim);
  m.emb.init_uniform(r, 0.05);
  for (std::size_t j = 0; j < m.emb_dim; ++j) m.emb.v.at(CmVocab::kPad, j) = T(0);
  if (word_init) {
    for (std::size_t i = 0; i < vocab.size(); ++i) {
      if (i == CmVocab::kPad) continue;
      if (const double* v = word_init->find(vocab.tokens[i]))
        for (std::size_t j = 0; j < m.emb_dim; ++j) m.emb.v.at(i, j) = static_cast<T>(v[j]);
    }
  }

  std::size_t phi = 0;
  if (m.encoder == CmEncoder::ff) {
    phi = m.window * m.emb_dim;
  } else {
    m.widths = cfg.cm_widths;
    m.n_filters = cfg.cm_filters;
    for (auto w : m.widths) {
      Param<T> f(m.n_filters, w * m.emb_dim);
      f.init_glorot(r, w * m.emb_dim, m.n_filters);
      m.filt.push_back(std::move(f));
      m.fbias.emplace_back(1, m.n_filters);
    }
    phi = 2 * m.widths.size() * m.n_filters;
  }
  m.w_h = Param<T>(m.hidden, phi);
  m.w_h.init_glorot(r, phi, m.hidden);
  m.w_out = Param<T>(m.n_types, m.hidden);
  m.w_out.init_glorot(r, m.hidden, m.n_types);
  m.b_out = Param<T>(1, m.n_types);

  if (m.mode == MimlMode::att) {
    m.type_dim = type_init ? type_init->dim() : cfg.type_dim;
    m.att_m = Param<T>(m.hidden, m.type_dim);
    m.att_m.init_glorot(r, m.type_dim, m.hidden);
    m.t_emb = Param<T>(m.n_types, m.type_dim);
    m.t_emb.init_uniform(r, 0.05);
    if (type_init) {
      for (std::size_t t = 0; t < inv.size(); ++t)
        if (const double* v = type_init->find(inv.types[t]))
          for (std::size_t j = 0; j < m.type_dim; ++j) m.t_emb.v.at(t, j) = static_cast<T>(v[j]);
    }
  }
  return m;
}

// Per-context forward cache.
template <class T> struct CtxCache {
  std::vector<std::uint32_t> ids;          // ff tokens
  std::vector<std::uint32_t> lids, rids;   // cnn halves, pad-extended
  Mat<T> E;                                // ff lookup
  ClrCnnCache<T> lc, rc;
  std::vector<T> phi;
  std::vector<T> c;  // tanh encoder output
};

namespace detail {

// Splits a window into its two halves around the central slot and pad-extends
// a half at its outer edge when the largest filter overruns it.
template <class T>
void cm_split_halves(const CmModel<T>& m, const std::vector<std::uint32_t>& ctx,
                     std::vector<std::uint32_t>& lids, std::vector<std::uint32_t>& rids) {
  const std::size_t half = (m.window - 1) / 2;
  const std::size_t need = *std::max_element(m.widths.begin(), m.widths.end());
  lids.assign(ctx.begin(), ctx.begin() + half);
  rids.assign(ctx.begin() + half + 1, ctx.end());
  while (lids.size() < need) lids.insert(lids.begin(), CmVocab::kPad);
  while (rids.size() < need) rids.push_back(CmVocab::kPad);
}

}  // namespace detail

template <class T>
void cm_encode(const CmModel<T>& m, const std::vector<std::uint32_t>& ctx, CtxCache<T>& cache) {
  if (ctx.size() != m.window)
    throw ShapeError("context has " + std::to_string(ctx.size()) + " tokens, model window is " +
                     std::to_string(m.window));
  if (m.encoder == CmEncoder::ff) {
    cache.ids = ctx;
    lookup_forward(m.emb.v, cache.ids, cache.E);
    cache.phi.assign(cache.E.a.begin(), cache.E.a.end());
  } else {
    detail::cm_split_halves(m, ctx, cache.lids, cache.rids);
    const std::size_t block = m.widths.size() * m.n_filters;
    cache.phi.assign(2 * block, T(0));
    std::vector<Mat<T>> filt, bias;
    filt.reserve(m.filt.size());
    for (const auto& f : m.filt) filt.push_back(f.v);
    for (const auto& b : m.fbias) bias.push_back(b.v);
    clr_cnn_forward(cache.lids, m.emb.v, m.widths, filt, bias, cache.phi.data(), &cache.lc);
    clr_cnn_forward(cache.rids, m.emb.v, m.widths, filt, bias, cache.phi.data() + block,
                    &cache.rc);
  }
  cache.c.assign(m.hidden, T(0));
  matvec(m.w_h.v, cache.phi.data(), static_cast<const T*>(nullptr), cache.c.data());
  for (auto& x : cache.c) x = std::tanh(x);
}

// Backward from dc into every encoder parameter.
template <class T>
void cm_encode_backward(CmModel<T>& m, const CtxCache<T>& cache, const T* dc) {
  std::vector<T> dpre(m.hidden);
  for (std::size_t j = 0; j < m.hidden; ++j)
    dpre[j] = dc[j] * (T(1) - cache.c[j] * cache.c[j]);
  std::vector<T> dphi(cache.phi.size(), T(0));
  matvec_bwd(m.w_h.v, cache.phi.data(), dpre.data(), m.w_h.g, static_cast<T*>(nullptr),
             dphi.data());
  if (m.encoder == CmEncoder::ff) {
    Mat<T> dE(cache.ids.size(), m.emb_dim);
    std::copy(dphi.begin(), dphi.end(), dE.a.begin());
    lookup_backward(m.emb.g, cache.ids, dE);
  } else {
    const std::size_t block = m.widths.size() * m.n_filters;
    std::vector<Mat<T>> filt;
    std::vector<Mat<T>*> dfilt, dbias;
    for (auto& f : m.filt) {
      filt.push_back(f.v);
      dfilt.push_back(&f.g);
    }
    for (auto& b : m.fbias) dbias.push_back(&b.g);
    clr_cnn_backward(cache.lids, m.widths, filt, cache.lc, dphi.data(), m.emb.g, dfilt, dbias);
    clr_cnn_backward(cache.rids, m.widths, filt, cache.rc, dphi.data() + block, m.emb.g, dfilt,
                     dbias);
  }
}

// Head scores for one encoded context.
template <class T>
void cm_head_scores(const CmModel<T>& m, const T* c, T* z) {
  matvec(m.w_out.v, c, m.b_out.v.data(), z);
}

// Attention probabilities for a bag of encoded contexts (rows of C). Fills
// probs (n_types) and, when alphas is nonnull, the per-type attention rows
// (n_types x q).
template <class T>
void cm_att_forward(const CmModel<T>& m, const Mat<T>& C, T* probs,
                    std::type_identity_t<Mat<T>*> alphas) {
  const std::size_t q = C.rows;
  std::vector<T> v(m.hidden), u(q), a(m.hidden);
  for (std::size_t t = 0; t < m.n_types; ++t) {
    // v = M t_t, u_i = c_i . v
    matvec(m.att_m.v, m.t_emb.v.row(t), static_cast<const T*>(nullptr), v.data());
    for (std::size_t i = 0; i < q; ++i) u[i] = kern::dot(C.row(i), v.data(), m.hidden);
    softmax(u.data(), q);
    std::fill(a.begin(), a.end(), T(0));
    for (std::size_t i = 0; i < q; ++i) kern::axpy(u[i], C.row(i), a.data(), m.hidden);
    probs[t] = sigmoid(kern::dot(m.w_out.v.row(t), a.data(), m.hidden) + m.b_out.v.a[t]);
    if (alphas) std::copy(u.begin(), u.end(), alphas->row(t));
  }
}

// Bag probabilities under the mode's prediction aggregation.
template <class T>
void cm_bag_predict(const CmModel<T>& m, const CmDataset& ds, const Bag& bag, double* out) {
  const std::size_t q = bag.context_idx.size();
  if (q == 0) throw ShapeError("empty bag for entity '" + bag.entity + "'");
  CtxCache<T> cache;
  if (m.mode == MimlMode::att) {
    Mat<T> C(q, m.hidden);
    for (std::size_t i = 0; i < q; ++i) {
      cm_encode(m, ds.contexts[bag.context_idx[i]], cache);
      std::copy(cache.c.begin(), cache.c.end(), C.row(i));
    }
    std::vector<T> p(m.n_types);
    cm_att_forward(m, C, p.data(), nullptr);
    for (std::size_t t = 0; t < m.n_types; ++t) out[t] = static_cast<double>(p[t]);
    return;
  }
  const bool use_max = m.mode == MimlMode::max;
  std::vector<T> z(m.n_types);
  std::fill(out, out + m.n_types, 0.0);  // probabilities are positive, so 0 seeds the max
  for (std::size_t i = 0; i < q; ++i) {
    cm_encode(m, ds.contexts[bag.context_idx[i]], cache);
    cm_head_scores(m, cache.c.data(), z.data());
    for (std::size_t t = 0; t < m.n_types; ++t) {
      const double p = static_cast<double>(sigmoid(z[t]));
      if (use_max) out[t] = std::max(out[t], p);
      else out[t] += p;
    }
  }
  if (!use_max)
    for (std::size_t t = 0; t < m.n_types; ++t) out[t] /= static_cast<double>(q);
}

template <class T>
TypeScoreMatrix cm_predict(const CmModel<T>& m, const CmDataset& ds, const TypeInventory& inv) {
  if (m.n_types != inv.size()) throw ShapeError("model types do not match the inventory");
  TypeScoreMatrix out(ds.entities, inv.types);
  for (std::size_t b = 0; b < ds.bags.size(); ++b)
    cm_bag_predict(m, ds, ds.bags[b], out.scores.row(b));
  return out;
}

// Context-level training unit: loss and gradients for one context with its
// distant label set.
template <class T>
double cm_context_loss_backward(CmModel<T>& m, const std::vector<std::uint32_t>& ctx,
                                const std::uint8_t* gold, CtxCache<T>& cache) {
  cm_encode(m, ctx, cache);
  std::vector<T> z(m.n_types), dz(m.n_types);
  cm_head_scores(m, cache.c.data(), z.data());
  double loss = 0;
  for (std::size_t t = 0; t < m.n_types; ++t) {
    const T p = sigmoid(z[t]);
    const T y = static_cast<T>(gold[t]);
    loss += static_cast<double>(bce(y, p));
    dz[t] = bce_grad(y, p) * sigmoid_grad(z[t], p);
  }
  std::vector<T> dc(m.hidden, T(0));
  matvec_bwd(m.w_out.v, cache.c.data(), dz.data(), m.w_out.g, m.b_out.g.data(), dc.data());
  cm_encode_backward(m, cache, dc.data());
  return loss;
}

// Bag-level training unit under MAX, AVG, MAX_AVG, or ATT.
template <class T>
double cm_bag_loss_backward(CmModel<T>& m, const CmDataset& ds,
                            const std::vector<std::size_t>& ctx_indices, const std::uint8_t* gold) {
  const std::size_t q = ctx_indices.size();
  if (q == 0) throw ShapeError("empty training bag");
  std::vector<CtxCache<T>> caches(q);
  Mat<T> C(q, m.hidden);
  for (std::size_t i = 0; i < q; ++i) {
    cm_encode(m, ds.contexts[ctx_indices[i]], caches[i]);
    std::copy(caches[i].c.begin(), caches[i].c.end(), C.row(i));
  }
  Mat<T> dC(q, m.hidden);
  double loss = 0;

  if (m.mode == MimlMode::att) {
    std::vector<T> v(m.hidden), u(q), du(q), dalpha(q), a(m.hidden), da(m.hidden), dv(m.hidden);
    for (std::size_t t = 0; t < m.n_types; ++t) {
      matvec(m.att_m.v, m.t_emb.v.row(t), static_cast<const T*>(nullptr), v.data());
      for (std::size_t i = 0; i < q; ++i) u[i] = kern::dot(C.row(i), v.data(), m.hidden);
      softmax(u.data(), q);  // u now holds alpha
      std::fill(a.begin(), a.end(), T(0));
      for (std::size_t i = 0; i < q; ++i) kern::axpy(u[i], C.row(i), a.data(), m.hidden);
      const T z = kern::dot(m.w_out.v.row(t), a.data(), m.hidden) + m.b_out.v.a[t];
      const T p = sigmoid(z);
      const T y = static_cast<T>(gold[t]);
      loss += static_cast<double>(bce(y, p));
      const T dz = bce_grad(y, p) * sigmoid_grad(z, p);
      if (dz == T(0)) continue;
      kern::axpy(dz, a.data(), m.w_out.g.row(t), m.hidden);
      m.b_out.g.a[t] += dz;
      std::fill(da.begin(), da.end(), T(0));
      kern::axpy(dz, m.w_out.v.row(t), da.data(), m.hidden);
      // a = sum_i alpha_i c_i
      T dot_sum = 0;
      for (std::size_t i = 0; i < q; ++i) {
        dalpha[i] = kern::dot(da.data(), C.row(i), m.hidden);
        kern::axpy(u[i], da.data(), dC.row(i), m.hidden);
        dot_sum += u[i] * dalpha[i];
      }
      std::fill(dv.begin(), dv.end(), T(0));
      for (std::size_t i = 0; i < q; ++i) {
        du[i] = u[i] * (dalpha[i] - dot_sum);  // softmax backward
        kern::axpy(du[i], C.row(i), dv.data(), m.hidden);
        kern::axpy(du[i], v.data(), dC.row(i), m.hidden);
      }
      // v = M t_t
      for (std::size_t r = 0; r < m.hidden; ++r)
        kern::axpy(dv[r], m.t_emb.v.row(t), m.att_m.g.row(r), m.type_dim);
      for (std::size_t r = 0; r < m.hidden; ++r)
        kern::axpy(dv[r], m.att_m.v.row(r), m.t_emb.g.row(t), m.type_dim);
    }
  } else {
    Mat<T> Z(q, m.n_types);
    for (std::size_t i = 0; i < q; ++i) cm_head_scores(m, C.row(i), Z.row(i));
    Mat<T> dZ(q, m.n_types);
    const bool train_max = m.mode == MimlMode::max || m.mode == MimlMode::max_avg;
    for (std::size_t t = 0; t < m.n_types; ++t) {
      const T y = static_cast<T>(gold[t]);
      if (train_max) {
        std::size_t best = 0;
        for (std::size_t i = 1; i < q; ++i)
          if (Z.at(i, t) > Z.at(best, t)) best = i;  // first occurrence on ties
        const T p = sigmoid(Z.at(best, t));
        loss += static_cast<double>(bce(y, p));
        dZ.at(best, t) = bce_grad(y, p) * sigmoid_grad(Z.at(best, t), p);
      } else {  // avg
        T pbar = 0;
        for (std::size_t i = 0; i < q; ++i) pbar += sigmoid(Z.at(i, t));
        pbar /= static_cast<T>(q);
        loss += static_cast<double>(bce(y, pbar));
        const T dpbar = bce_grad(y, pbar) / static_cast<T>(q);
        for (std::size_t i = 0; i < q; ++i) {
          const T pi = sigmoid(Z.at(i, t));
          dZ.at(i, t) = dpbar * sigmoid_grad(Z.at(i, t), pi);
        }
      }
    }
    for (std::size_t i = 0; i < q; ++i)
      matvec_bwd(m.w_out.v, C.row(i), dZ.row(i), m.w_out.g, m.b_out.g.data(), dC.row(i));
  }

  for (std::size_t i = 0; i < q; ++i) cm_encode_backward(m, caches[i], dC.row(i));
  return loss;
}

// Minibatch AdaGrad. DS iterates contexts; the MIML modes iterate bags, with
// oversized bags subsampled per epoch. Dev selection mirrors the global model.
template <class T>
TrainLog cm_train(CmModel<T>& m, const CmDataset& train, const CmDataset& dev,
                  const TypeInventory& inv, const RunConfig& cfg, Rng& rng) {
  const bool per_context = m.mode == MimlMode::ds;
  const std::size_t n_units = per_context ? train.contexts.size() : train.bags.size();
  if (n_units == 0) throw ConfigError("cm_train: empty train set");
  if (dev.bags.empty()) throw ConfigError("cm_train: empty dev set");

  TrainLog log;
  auto ps = m.params();
  std::vector<Mat<T>> best = snapshot_values(ps);
  std::vector<std::size_t> order(n_units);
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  CtxCache<T> scratch;
  const T lr = static_cast<T>(cfg.lr), eps = static_cast<T>(cfg.adagrad_eps);
  std::size_t since_best = 0;
  std::vector<std::size_t> bag_ctx;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng er = rng.derive("cm-epoch", epoch);
    er.shuffle(order);
    double loss_sum = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch);
      for (std::size_t k = start; k < stop; ++k) {
        if (per_context) {
          loss_sum += cm_context_loss_backward(m, train.contexts[order[k]],
                                               train.ctx_gold.row(order[k]), scratch);
        } else {
          const Bag& bag = train.bags[order[k]];
          bag_ctx = bag.context_idx;
          if (bag_ctx.size() > cfg.bag_cap) {
            for (std::size_t i = 0; i < cfg.bag_cap; ++i) {
              const std::size_t j = i + er.below(bag_ctx.size() - i);
              std::swap(bag_ctx[i], bag_ctx[j]);
            }
            bag_ctx.resize(cfg.bag_cap);
          }
          loss_sum += cm_bag_loss_backward(m, train, bag_ctx, train.gold.row(order[k]));
        }
        ++log.loss_units;
      }
      const T inv_b = T(1) / static_cast<T>(stop - start);
      for (auto& [name, p] : ps) {
        kern::scale(inv_b, p->g.data(), p->g.size());
        adagrad_step(*p, lr, eps);
      }
      ++log.update_events;
    }
    log.epoch_loss.push_back(loss_sum / static_cast<double>(order.size()));

    TypeScoreMatrix scores = cm_predict(m, dev, inv);
    auto tuned = tune_thresholds(scores.scores, dev.gold);
    const double f1 = micro_f1(assign(scores.scores, tuned.thresholds), dev.gold);
    log.dev_micro.push_back(f1);
    if (f1 > log.best_dev) {
      log.best_dev = f1;
      log.best_epoch = epoch;
      log.dev_thresholds = tuned.thresholds;
      best = snapshot_values(ps);
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      log.stopped_early = true;
      break;
    }
  }
  restore_values(ps, best);
  return log;
}

}  // namespace entype
