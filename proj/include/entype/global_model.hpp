#pragma once

#include <algorithm>
#include <string>
#include <utility>
#include <vector>

#include "entype/config.hpp"
#include "entype/entity_repr.hpp"
#include "entype/metrics.hpp"
#include "entype/ops.hpp"
#include "entype/rng.hpp"
#include "entype/score_matrix.hpp"
#include "entype/tensor.hpp"
#include "entype/trainer.hpp"

namespace entype {

// One-hidden-layer scorer over an entity representation:
//   p = sigmoid(W_out relu(W_in x + b_in) + b_out).
// Dense inputs are frozen-head | CLR | frozen-tail; the CLR block is the only
// input section that backpropagates further. Sparse models replace W_in with a
// feature-major table so each active feature contributes one row.
template <class T> struct GmModel {
  std::size_t in_dim = 0;  // dense input width; 0 for sparse models
  std::size_t hidden = 0;
  std::size_t n_types = 0;

  bool sparse = false;
  Param<T> w_in;  // dense: hidden x in_dim; sparse: n_features x hidden
  Param<T> b_in;  // 1 x hidden
  Param<T> w_out; // n_types x hidden
  Param<T> b_out; // 1 x n_types

  // optional name-character block, inserted at head_dim
  bool clr_ff = false, clr_cnn = false;
  std::size_t head_dim = 0;
  std::size_t clr_dim = 0;
  Param<T> chars;  // n_chars x char_dim
  std::vector<std::size_t> clr_widths;
  std::vector<Param<T>> clr_filt;  // per width: clr_filters x (w * char_dim)
  std::vector<Param<T>> clr_bias;  // per width: 1 x clr_filters

  std::vector<std::pair<std::string, Param<T>*>> params() {
    std::vector<std::pair<std::string, Param<T>*>> ps = {
        {"w_in", &w_in}, {"b_in", &b_in}, {"w_out", &w_out}, {"b_out", &b_out}};
    if (clr_ff || clr_cnn) ps.emplace_back("chars", &chars);
    for (std::size_t i = 0; i < clr_filt.size(); ++i) {
      ps.emplace_back("clr_filt_w" + std::to_string(clr_widths[i]), &clr_filt[i]);
      ps.emplace_back("clr_bias_w" + std::to_string(clr_widths[i]), &clr_bias[i]);
    }
    return ps;
  }
};

struct GmDims {
  std::size_t frozen = 0;    // dataset frozen width
  std::size_t head = 0;      // frozen columns ahead of the CLR insertion point
  std::size_t n_types = 0;
  std::size_t n_chars = 0;   // char vocab size; 0 when no CLR level
  std::size_t sparse_dim = 0;  // feature dictionary size; nonzero selects sparse
};

template <class T>
GmModel<T> make_gm_model(const RunConfig& cfg, const GmDims& dims, Rng& rng) {
  GmModel<T> m;
  m.hidden = cfg.hidden;
  m.n_types = dims.n_types;
  m.clr_ff = level_enabled(cfg.levels, Level::clr_ff);
  m.clr_cnn = level_enabled(cfg.levels, Level::clr_cnn);
  m.sparse = dims.sparse_dim > 0;
  if (m.sparse && (m.clr_ff || m.clr_cnn))
    throw ConfigError("sparse levels do not combine with character levels");

  if (m.clr_ff) m.clr_dim = cfg.name_len * cfg.char_dim;
  if (m.clr_cnn) m.clr_dim = cfg.clr_widths.size() * cfg.clr_filters;
  m.head_dim = dims.head;
  m.in_dim = m.sparse ? 0 : dims.frozen + m.clr_dim;
  if (!m.sparse && m.in_dim == 0) throw ConfigError("global model input width is zero");

  Rng r = rng.derive("gm-init");
  if (m.sparse) {
    m.w_in = Param<T>(dims.sparse_dim, m.hidden);
    m.w_in.init_glorot(r, dims.sparse_dim, m.hidden);
  } else {
    m.w_in = Param<T>(m.hidden, m.in_dim);
    m.w_in.init_glorot(r, m.in_dim, m.hidden);
  }
  m.b_in = Param<T>(1, m.hidden);
  m.w_out = Param<T>(m.n_types, m.hidden);
  m.w_out.init_glorot(r, m.hidden, m.n_types);
  m.b_out = Param<T>(1, m.n_types);

  if (m.clr_ff || m.clr_cnn) {
    if (dims.n_chars == 0) throw ConfigError("character level enabled but char vocab is empty");
    m.chars = Param<T>(dims.n_chars, cfg.char_dim);
    m.chars.init_uniform(r, 0.05);  // embedding-style init, tuned during training
  }
  if (m.clr_cnn) {
    m.clr_widths = cfg.clr_widths;
    const std::size_t maxw = *std::max_element(m.clr_widths.begin(), m.clr_widths.end());
    if (maxw > cfg.name_len)
      throw ConfigError("clr filter width " + std::to_string(maxw) + " exceeds name_len");
    for (auto w : m.clr_widths) {
      Param<T> f(cfg.clr_filters, w * cfg.char_dim);
      f.init_glorot(r, w * cfg.char_dim, cfg.clr_filters);
      m.clr_filt.push_back(std::move(f));
      m.clr_bias.emplace_back(1, cfg.clr_filters);
    }
  }
  return m;
}

// Scratch for one entity pass.
template <class T> struct GmWork {
  std::vector<T> x, hpre, h, dh, z, p, dz;
  ClrCnnCache<T> cache;
};

namespace detail {

template <class T>
void gm_assemble_input(const GmModel<T>& m, const GmDataset& ds, std::size_t i, GmWork<T>& w) {
  w.x.assign(m.in_dim, T(0));
  const double* fr = ds.frozen.row(i);
  for (std::size_t j = 0; j < m.head_dim; ++j) w.x[j] = static_cast<T>(fr[j]);
  if (m.clr_ff) {
    clr_ff_forward(ds.char_ids[i], m.chars.v, w.x.data() + m.head_dim);
  } else if (m.clr_cnn) {
    std::vector<Mat<T>> filt, bias;
    filt.reserve(m.clr_filt.size());
    for (const auto& f : m.clr_filt) filt.push_back(f.v);
    for (const auto& b : m.clr_bias) bias.push_back(b.v);
    clr_cnn_forward(ds.char_ids[i], m.chars.v, m.clr_widths, filt, bias,
                    w.x.data() + m.head_dim, &w.cache);
  }
  for (std::size_t j = m.head_dim; j < ds.frozen.cols; ++j)
    w.x[m.clr_dim + j] = static_cast<T>(fr[j]);
}

template <class T>
void gm_hidden_forward(const GmModel<T>& m, const GmDataset& ds, std::size_t i, GmWork<T>& w) {
  w.hpre.assign(m.hidden, T(0));
  if (m.sparse) {
    std::copy(m.b_in.v.a.begin(), m.b_in.v.a.end(), w.hpre.begin());
    for (auto f : ds.sparse[i]) {
      if (f >= m.w_in.v.rows)
        throw IndexError("sparse feature id " + std::to_string(f) + " out of range");
      kern::axpy(T(1), m.w_in.v.row(f), w.hpre.data(), m.hidden);
    }
  } else {
    gm_assemble_input(m, ds, i, w);
    matvec(m.w_in.v, w.x.data(), m.b_in.v.data(), w.hpre.data());
  }
  w.h.assign(m.hidden, T(0));
  kern::relu(w.hpre.data(), w.h.data(), m.hidden);
}

}  // namespace detail

// Probabilities for one dense representation; mirrors the batched path.
template <class T>
std::vector<T> gm_forward(const GmModel<T>& m, const std::vector<T>& e) {
  if (m.sparse) throw ConfigError("gm_forward needs a dense model");
  if (e.size() != m.in_dim)
    throw ShapeError("gm_forward: input has " + std::to_string(e.size()) + ", model wants " +
                     std::to_string(m.in_dim));
  std::vector<T> hpre(m.hidden, T(0)), h(m.hidden, T(0)), z(m.n_types, T(0)), p(m.n_types);
  matvec(m.w_in.v, e.data(), m.b_in.v.data(), hpre.data());
  kern::relu(hpre.data(), h.data(), m.hidden);
  matvec(m.w_out.v, h.data(), m.b_out.v.data(), z.data());
  for (std::size_t t = 0; t < m.n_types; ++t) p[t] = sigmoid(z[t]);
  return p;
}

// Forward for dataset row i; fills w.p.
template <class T>
void gm_entity_forward(const GmModel<T>& m, const GmDataset& ds, std::size_t i, GmWork<T>& w) {
  detail::gm_hidden_forward(m, ds, i, w);
  w.z.assign(m.n_types, T(0));
  matvec(m.w_out.v, w.h.data(), m.b_out.v.data(), w.z.data());
  w.p.resize(m.n_types);
  for (std::size_t t = 0; t < m.n_types; ++t) w.p[t] = sigmoid(w.z[t]);
}

// Forward + loss + gradient accumulation for dataset row i.
template <class T>
double gm_entity_loss_backward(GmModel<T>& m, const GmDataset& ds, std::size_t i, GmWork<T>& w) {
  gm_entity_forward(m, ds, i, w);
  double loss = 0;
  w.dz.assign(m.n_types, T(0));
  for (std::size_t t = 0; t < m.n_types; ++t) {
    const T y = static_cast<T>(ds.gold.at(i, t));
    loss += static_cast<double>(bce(y, w.p[t]));
    w.dz[t] = bce_grad(y, w.p[t]) * sigmoid_grad(w.z[t], w.p[t]);
  }
  w.dh.assign(m.hidden, T(0));
  matvec_bwd(m.w_out.v, w.h.data(), w.dz.data(), m.w_out.g, m.b_out.g.data(), w.dh.data());
  std::vector<T> dhpre(m.hidden, T(0));
  kern::relu_backward(w.hpre.data(), w.dh.data(), dhpre.data(), m.hidden);
  if (m.sparse) {
    kern::axpy(T(1), dhpre.data(), m.b_in.g.data(), m.hidden);
    for (auto f : ds.sparse[i]) kern::axpy(T(1), dhpre.data(), m.w_in.g.row(f), m.hidden);
    return loss;
  }
  std::vector<T> dx(m.in_dim, T(0));
  matvec_bwd(m.w_in.v, w.x.data(), dhpre.data(), m.w_in.g, m.b_in.g.data(),
             m.clr_dim ? dx.data() : nullptr);
  if (m.clr_ff) {
    clr_ff_backward(ds.char_ids[i], dx.data() + m.head_dim, m.chars.g);
  } else if (m.clr_cnn) {
    std::vector<Mat<T>> filt;
    std::vector<Mat<T>*> dfilt, dbias;
    filt.reserve(m.clr_filt.size());
    for (auto& f : m.clr_filt) {
      filt.push_back(f.v);
      dfilt.push_back(&f.g);
    }
    for (auto& b : m.clr_bias) dbias.push_back(&b.g);
    clr_cnn_backward(ds.char_ids[i], m.clr_widths, filt, w.cache, dx.data() + m.head_dim,
                     m.chars.g, dfilt, dbias);
  }
  return loss;
}

template <class T>
TypeScoreMatrix gm_predict(const GmModel<T>& m, const GmDataset& ds, const TypeInventory& inv) {
  if (m.n_types != inv.size()) throw ShapeError("model types do not match the inventory");
  TypeScoreMatrix out(ds.ids, inv.types);
  GmWork<T> w;
  for (std::size_t i = 0; i < ds.ids.size(); ++i) {
    gm_entity_forward(m, ds, i, w);
    for (std::size_t t = 0; t < m.n_types; ++t)
      out.scores.at(i, t) = static_cast<double>(w.p[t]);
  }
  return out;
}

// Minibatch AdaGrad with gradients averaged over the batch, dev micro-F1
// checkpointing with per-epoch threshold tuning, early stop on patience.
template <class T>
TrainLog gm_train(GmModel<T>& m, const GmDataset& train, const GmDataset& dev,
                  const TypeInventory& inv, const RunConfig& cfg, Rng& rng) {
  if (train.ids.empty()) throw ConfigError("gm_train: empty train set");
  if (dev.ids.empty()) throw ConfigError("gm_train: empty dev set");
  TrainLog log;
  auto ps = m.params();
  std::vector<Mat<T>> best = snapshot_values(ps);
  std::vector<std::size_t> order(train.ids.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  GmWork<T> w;
  const T lr = static_cast<T>(cfg.lr), eps = static_cast<T>(cfg.adagrad_eps);
  std::size_t since_best = 0;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng er = rng.derive("gm-epoch", epoch);
    er.shuffle(order);
    double loss_sum = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch);
      for (std::size_t k = start; k < stop; ++k) {
        loss_sum += gm_entity_loss_backward(m, train, order[k], w);
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

    TypeScoreMatrix scores = gm_predict(m, dev, inv);
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

// Most-frequent-type baseline: indicator row for the type carried by the most
// train entities, ties to the lowest type index.
TypeScoreMatrix mft_baseline(const Catalog& catalog, const std::vector<std::string>& train_ids,
                             const std::vector<std::string>& eval_ids, const TypeInventory& inv);

}  // namespace entype
