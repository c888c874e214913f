#include <doctest.h>

#include <cmath>

#include "entype/context_model.hpp"
#include "entype/rng.hpp"

using namespace entype;

namespace {

TypeInventory inv_n(std::size_t n) {
  TypeInventory inv;
  for (std::size_t i = 0; i < n; ++i) {
    inv.index["t" + std::to_string(i)] = i;
    inv.types.push_back("t" + std::to_string(i));
  }
  return inv;
}

RunConfig cm_cfg(CmEncoder enc, MimlMode mode) {
  RunConfig cfg;
  cfg.kind = ModelKind::cm;
  cfg.encoder = enc;
  cfg.miml = mode;
  cfg.context_size = 4;
  cfg.cm_emb_dim = 3;
  cfg.hidden = 4;
  cfg.cm_widths = {1, 2};
  cfg.cm_filters = 2;
  cfg.type_dim = 3;
  return cfg;
}

// random dataset built directly in id space; every bag owns a consecutive
// run of contexts and both label granularities agree
CmDataset toy_cm_dataset(Rng& rng, std::size_t n_bags, std::size_t ctx_per_bag,
                         std::size_t window, std::size_t vocab, std::size_t n_types) {
  CmDataset ds;
  const std::size_t n_ctx = n_bags * ctx_per_bag;
  ds.ctx_gold = Mat<std::uint8_t>(n_ctx, n_types);
  ds.gold = Mat<std::uint8_t>(n_bags, n_types);
  for (std::size_t b = 0; b < n_bags; ++b) {
    Bag bag;
    bag.entity = "e" + std::to_string(b);
    std::vector<std::uint8_t> y(n_types, 0);
    y[rng.below(n_types)] = 1;
    if (rng.uniform() < 0.5) y[rng.below(n_types)] = 1;
    for (std::size_t c = 0; c < ctx_per_bag; ++c) {
      std::vector<std::uint32_t> ids(window);
      for (auto& id : ids) id = static_cast<std::uint32_t>(rng.below(vocab));
      bag.context_idx.push_back(ds.contexts.size());
      for (std::size_t t = 0; t < n_types; ++t) ds.ctx_gold.at(ds.contexts.size(), t) = y[t];
      ds.contexts.push_back(std::move(ids));
    }
    for (std::size_t t = 0; t < n_types; ++t) ds.gold.at(b, t) = y[t];
    ds.entities.push_back(bag.entity);
    ds.bags.push_back(std::move(bag));
  }
  return ds;
}

// forward-only dataset loss matching the mode's training granularity
double pure_loss(CmModel<double>& m, const CmDataset& ds) {
  CtxCache<double> cache;
  double s = 0;
  if (m.mode == MimlMode::ds) {
    std::vector<double> z(m.n_types);
    for (std::size_t i = 0; i < ds.contexts.size(); ++i) {
      cm_encode(m, ds.contexts[i], cache);
      cm_head_scores(m, cache.c.data(), z.data());
      for (std::size_t t = 0; t < m.n_types; ++t)
        s += bce(double(ds.ctx_gold.at(i, t)), sigmoid(z[t]));
    }
    return s;
  }
  for (std::size_t b = 0; b < ds.bags.size(); ++b) {
    const auto& bag = ds.bags[b];
    const std::size_t q = bag.context_idx.size();
    Mat<double> C(q, m.hidden);
    for (std::size_t i = 0; i < q; ++i) {
      cm_encode(m, ds.contexts[bag.context_idx[i]], cache);
      std::copy(cache.c.begin(), cache.c.end(), C.row(i));
    }
    if (m.mode == MimlMode::att) {
      std::vector<double> p(m.n_types);
      cm_att_forward(m, C, p.data(), nullptr);
      for (std::size_t t = 0; t < m.n_types; ++t) s += bce(double(ds.gold.at(b, t)), p[t]);
      continue;
    }
    Mat<double> Z(q, m.n_types);
    for (std::size_t i = 0; i < q; ++i) cm_head_scores(m, C.row(i), Z.row(i));
    const bool train_max = m.mode == MimlMode::max || m.mode == MimlMode::max_avg;
    for (std::size_t t = 0; t < m.n_types; ++t) {
      double agg;
      if (train_max) {
        double zmax = Z.at(0, t);
        for (std::size_t i = 1; i < q; ++i) zmax = std::max(zmax, Z.at(i, t));
        agg = sigmoid(zmax);
      } else {
        agg = 0;
        for (std::size_t i = 0; i < q; ++i) agg += sigmoid(Z.at(i, t));
        agg /= double(q);
      }
      s += bce(double(ds.gold.at(b, t)), agg);
    }
  }
  return s;
}

ContextDump two_entity_dump() {
  ContextDump d;
  d.contexts.push_back({"A", {"PAD", "the", "SLOT", "fox", "ran"}});
  d.contexts.push_back({"A", {"fox", "den", "SLOT", "the", "PAD"}});
  d.contexts.push_back({"B", {"the", "the", "SLOT", "ran", "ran"}});
  d.labels = {{"t0", "t1"}, {"t0", "t1"}, {"t1"}};
  return d;
}

}  // namespace

TEST_CASE("context vocab pins pad and unk then keeps first appearance order") {
  auto dump = two_entity_dump();
  auto v = build_cm_vocab(dump);
  REQUIRE(v.tokens.size() == 7);
  CHECK(v.tokens[0] == "PAD");
  CHECK(v.tokens[1] == "<unk>");
  CHECK(v.tokens[2] == "the");
  CHECK(v.tokens[3] == "SLOT");
  CHECK(v.tokens[4] == "fox");
  CHECK(v.tokens[5] == "ran");
  CHECK(v.tokens[6] == "den");
  CHECK(v.id("PAD") == CmVocab::kPad);
  CHECK(v.id("fox") == 4);
  CHECK(v.id("never-seen") == CmVocab::kUnk);
}

TEST_CASE("datasets encode tokens, both label granularities, and bag structure") {
  auto dump = two_entity_dump();
  auto v = build_cm_vocab(dump);
  auto inv = inv_n(3);
  auto ds = encode_cm_dataset(dump, v, inv);

  REQUIRE(ds.contexts.size() == 3);
  CHECK(ds.contexts[0] == std::vector<std::uint32_t>{0, 2, 3, 4, 5});
  CHECK(ds.contexts[1] == std::vector<std::uint32_t>{4, 6, 3, 2, 0});
  CHECK(ds.ctx_gold.at(0, 0) == 1);
  CHECK(ds.ctx_gold.at(0, 1) == 1);
  CHECK(ds.ctx_gold.at(0, 2) == 0);
  CHECK(ds.ctx_gold.at(2, 0) == 0);
  CHECK(ds.ctx_gold.at(2, 1) == 1);

  REQUIRE(ds.bags.size() == 2);
  CHECK(ds.entities == std::vector<std::string>{"A", "B"});
  CHECK(ds.bags[0].context_idx == std::vector<std::size_t>{0, 1});
  CHECK(ds.bags[1].context_idx == std::vector<std::size_t>{2});
  CHECK(ds.gold.at(0, 0) == 1);
  CHECK(ds.gold.at(1, 0) == 0);
  CHECK(ds.gold.at(1, 1) == 1);

  // tokens outside the training vocab fall to UNK
  ContextDump dev;
  dev.contexts.push_back({"C", {"the", "wolf", "SLOT", "fox", "PAD"}});
  dev.labels = {{"t2"}};
  auto dd = encode_cm_dataset(dev, v, inv);
  CHECK(dd.contexts[0] == std::vector<std::uint32_t>{2, 1, 3, 4, 0});

  dev.labels = {{"no-such-type"}};
  CHECK_THROWS_AS(encode_cm_dataset(dev, v, inv), IndexError);
}

TEST_CASE("ff encoder matches a hand oracle and rejects wrong windows") {
  auto cfg = cm_cfg(CmEncoder::ff, MimlMode::ds);
  cfg.context_size = 2;
  Rng rng(31);
  CmVocab v;
  v.tokens = {"PAD", "<unk>", "a", "b"};
  for (std::size_t i = 0; i < v.tokens.size(); ++i) v.index[v.tokens[i]] = i;
  auto m = make_cm_model<double>(cfg, v, inv_n(2), nullptr, nullptr, rng);
  REQUIRE(m.window == 3);
  REQUIRE(m.emb_dim == 3);
  for (auto& x : m.emb.v.a) x = rng.uniform(-1, 1);
  for (auto& x : m.w_h.v.a) x = rng.uniform(-1, 1);

  std::vector<std::uint32_t> ctx = {2, 1, 3};
  CtxCache<double> cache;
  cm_encode(m, ctx, cache);
  REQUIRE(cache.c.size() == m.hidden);
  for (std::size_t j = 0; j < m.hidden; ++j) {
    double pre = 0;
    for (std::size_t p = 0; p < 3; ++p)
      for (std::size_t k = 0; k < m.emb_dim; ++k)
        pre += m.w_h.v.at(j, p * m.emb_dim + k) * m.emb.v.at(ctx[p], k);
    CHECK(cache.c[j] == doctest::Approx(std::tanh(pre)).epsilon(1e-12));
  }

  m.w_h.v.zero();
  cm_encode(m, ctx, cache);
  for (double x : cache.c) CHECK(x == 0.0);

  CHECK_THROWS_AS(cm_encode(m, std::vector<std::uint32_t>{2, 3}, cache), ShapeError);
}

TEST_CASE("cnn encoder pools each half with shared banks and pad-extends outer edges") {
  auto cfg = cm_cfg(CmEncoder::cnn, MimlMode::ds);
  cfg.cm_widths = {1};
  cfg.cm_filters = 1;
  cfg.cm_emb_dim = 2;
  cfg.hidden = 2;
  Rng rng(37);
  CmVocab v;
  v.tokens = {"PAD", "<unk>", "a", "b", "c", "d", "SLOT"};
  for (std::size_t i = 0; i < v.tokens.size(); ++i) v.index[v.tokens[i]] = i;
  auto m = make_cm_model<double>(cfg, v, inv_n(2), nullptr, nullptr, rng);
  REQUIRE(m.window == 5);

  // emb rows picked so each position scores differently under filter (1, -1)
  m.emb.v.zero();
  m.emb.v.at(2, 0) = 1.0;               // a -> 1
  m.emb.v.at(3, 0) = 3.0;               // b -> 3
  m.emb.v.at(4, 1) = 2.0;               // c -> -2, rectified away
  m.emb.v.at(5, 0) = 0.5;               // d -> 0.5
  m.filt[0].v.at(0, 0) = 1.0;
  m.filt[0].v.at(0, 1) = -1.0;
  m.fbias[0].v.zero();
  for (auto& x : m.w_h.v.a) x = rng.uniform(-1, 1);

  std::vector<std::uint32_t> ctx = {2, 3, 6, 4, 5};  // a b SLOT c d
  CtxCache<double> cache;
  cm_encode(m, ctx, cache);
  REQUIRE(cache.phi.size() == 2);
  CHECK(cache.phi[0] == doctest::Approx(3.0).epsilon(1e-15));  // max(relu 1, relu 3)
  CHECK(cache.phi[1] == doctest::Approx(0.5).epsilon(1e-15));  // max(relu -2, relu 0.5)
  for (std::size_t j = 0; j < m.hidden; ++j) {
    double pre = m.w_h.v.at(j, 0) * 3.0 + m.w_h.v.at(j, 1) * 0.5;
    CHECK(cache.c[j] == doctest::Approx(std::tanh(pre)).epsilon(1e-12));
  }

  // a width equal to half+1 forces one pad at each outer edge; the pad row is
  // zero so the window sums telescope to adjacent pairs
  cfg.cm_widths = {3};
  Rng rng2(37);
  auto m3 = make_cm_model<double>(cfg, v, inv_n(2), nullptr, nullptr, rng2);
  m3.emb.v = m.emb.v;
  m3.filt[0].v.zero();
  m3.filt[0].v.at(0, 0) = 1.0;   // position 0, dim 0
  m3.filt[0].v.at(0, 2) = 1.0;   // position 1, dim 0
  m3.filt[0].v.at(0, 4) = 1.0;   // position 2, dim 0
  m3.fbias[0].v.zero();
  cm_encode(m3, ctx, cache);
  // left ids pad a b: windows [pad a b] -> 4; right c d pad: [c d pad] -> 0.5
  CHECK(cache.phi[0] == doctest::Approx(4.0).epsilon(1e-15));
  CHECK(cache.phi[1] == doctest::Approx(0.5).epsilon(1e-15));

  // mirrored halves produce identical blocks
  auto msym = make_cm_model<double>(cm_cfg(CmEncoder::cnn, MimlMode::ds), v, inv_n(2), nullptr,
                                    nullptr, rng);
  for (auto& x : msym.emb.v.a) x = rng.uniform(-1, 1);
  std::vector<std::uint32_t> sym = {2, 3, 6, 2, 3};
  cm_encode(msym, sym, cache);
  const std::size_t block = msym.widths.size() * msym.n_filters;
  REQUIRE(cache.phi.size() == 2 * block);
  for (std::size_t k = 0; k < block; ++k) CHECK(cache.phi[k] == cache.phi[block + k]);
}

TEST_CASE("attention weights form a distribution for any bag size") {
  auto cfg = cm_cfg(CmEncoder::ff, MimlMode::att);
  Rng rng(41);
  CmVocab v;
  v.tokens = {"PAD", "<unk>", "x"};
  v.index = {{"PAD", 0}, {"<unk>", 1}, {"x", 2}};
  auto m = make_cm_model<double>(cfg, v, inv_n(3), nullptr, nullptr, rng);

  for (std::size_t q : {std::size_t(1), std::size_t(7), std::size_t(1000)}) {
    Mat<double> C(q, m.hidden);
    for (auto& x : C.a) x = rng.uniform(-3, 3);
    if (q > 1) {
      C.at(0, 0) = 50;  // large logits must not break normalization
      C.at(1, 0) = -50;
    }
    std::vector<double> p(m.n_types);
    Mat<double> alphas(m.n_types, q);
    cm_att_forward(m, C, p.data(), &alphas);
    for (std::size_t t = 0; t < m.n_types; ++t) {
      double s = 0;
      for (std::size_t i = 0; i < q; ++i) {
        CHECK(alphas.at(t, i) >= 0.0);
        s += alphas.at(t, i);
      }
      CHECK(s == doctest::Approx(1.0).epsilon(1e-9));
      CHECK(p[t] > 0.0);
      CHECK(p[t] < 1.0);
    }
  }

  // zero mixing matrix: uniform attention, so the bag scores its mean context
  m.att_m.v.zero();
  Mat<double> C(4, m.hidden);
  for (auto& x : C.a) x = rng.uniform(-2, 2);
  std::vector<double> p(m.n_types);
  Mat<double> alphas(m.n_types, 4);
  cm_att_forward(m, C, p.data(), &alphas);
  std::vector<double> mean(m.hidden, 0);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < m.hidden; ++j) mean[j] += C.at(i, j) / 4.0;
  for (std::size_t t = 0; t < m.n_types; ++t) {
    for (std::size_t i = 0; i < 4; ++i)
      CHECK(alphas.at(t, i) == doctest::Approx(0.25).epsilon(1e-12));
    double z = m.b_out.v.a[t];
    for (std::size_t j = 0; j < m.hidden; ++j) z += m.w_out.v.at(t, j) * mean[j];
    CHECK(p[t] == doctest::Approx(sigmoid(z)).epsilon(1e-12));
  }
}

TEST_CASE("bag prediction aggregates per context probabilities by mode") {
  // window of one token makes each context's encoding directly controllable
  auto cfg = cm_cfg(CmEncoder::ff, MimlMode::ds);
  cfg.context_size = 0;
  cfg.cm_emb_dim = 1;
  cfg.hidden = 1;
  Rng rng(43);
  CmVocab v;
  v.tokens = {"PAD", "<unk>", "lo", "hi", "mid"};
  for (std::size_t i = 0; i < v.tokens.size(); ++i) v.index[v.tokens[i]] = i;
  auto inv = inv_n(1);
  auto m = make_cm_model<double>(cfg, v, inv, nullptr, nullptr, rng);
  m.emb.v.zero();
  m.emb.v.at(2, 0) = -1.0;
  m.emb.v.at(3, 0) = 2.0;
  m.emb.v.at(4, 0) = 0.5;
  m.w_h.v.at(0, 0) = 1.0;
  m.w_out.v.at(0, 0) = 1.0;
  m.b_out.v.zero();

  CmDataset ds;
  ds.contexts = {{2}, {3}, {4}};
  ds.ctx_gold = Mat<std::uint8_t>(3, 1);
  ds.gold = Mat<std::uint8_t>(1, 1);
  ds.gold.at(0, 0) = 1;
  Bag bag;
  bag.entity = "e";
  bag.context_idx = {0, 1, 2};
  ds.bags.push_back(bag);
  ds.entities = {"e"};

  const double p_lo = sigmoid(std::tanh(-1.0));
  const double p_hi = sigmoid(std::tanh(2.0));
  const double p_mid = sigmoid(std::tanh(0.5));

  double out = 0;
  m.mode = MimlMode::max;
  cm_bag_predict(m, ds, ds.bags[0], &out);
  CHECK(out == doctest::Approx(p_hi).epsilon(1e-14));

  m.mode = MimlMode::avg;
  cm_bag_predict(m, ds, ds.bags[0], &out);
  CHECK(out == doctest::Approx((p_lo + p_hi + p_mid) / 3.0).epsilon(1e-14));

  m.mode = MimlMode::max_avg;  // trains on max, predicts with avg
  cm_bag_predict(m, ds, ds.bags[0], &out);
  CHECK(out == doctest::Approx((p_lo + p_hi + p_mid) / 3.0).epsilon(1e-14));

  m.mode = MimlMode::ds;  // distant supervision also averages at prediction
  cm_bag_predict(m, ds, ds.bags[0], &out);
  CHECK(out == doctest::Approx((p_lo + p_hi + p_mid) / 3.0).epsilon(1e-14));

  Bag empty;
  empty.entity = "none";
  CHECK_THROWS_AS(cm_bag_predict(m, ds, empty, &out), ShapeError);
}

TEST_CASE("max predictions dominate avg predictions cell by cell") {
  auto cfg = cm_cfg(CmEncoder::ff, MimlMode::max);
  Rng rng(47);
  auto ds = toy_cm_dataset(rng, 6, 4, 5, 9, 3);
  CmVocab v;
  v.tokens = {"PAD", "<unk>", "a", "b", "c", "d", "e", "f", "g"};
  for (std::size_t i = 0; i < v.tokens.size(); ++i) v.index[v.tokens[i]] = i;
  auto inv = inv_n(3);
  auto m = make_cm_model<double>(cfg, v, inv, nullptr, nullptr, rng);

  auto mavg = m;
  mavg.mode = MimlMode::avg;
  auto smax = cm_predict(m, ds, inv);
  auto savg = cm_predict(mavg, ds, inv);
  auto sds = [&] {
    auto mds = m;
    mds.mode = MimlMode::ds;
    return cm_predict(mds, ds, inv);
  }();
  for (std::size_t i = 0; i < ds.bags.size(); ++i)
    for (std::size_t t = 0; t < 3; ++t) {
      CHECK(smax.scores.at(i, t) >= savg.scores.at(i, t));
      CHECK(sds.scores.at(i, t) == savg.scores.at(i, t));
    }
}

TEST_CASE("single context bags collapse every mode to the same prediction") {
  auto cfg = cm_cfg(CmEncoder::ff, MimlMode::att);
  Rng rng(53);
  auto ds = toy_cm_dataset(rng, 8, 1, 5, 9, 3);
  CmVocab v;
  v.tokens = {"PAD", "<unk>", "a", "b", "c", "d", "e", "f", "g"};
  for (std::size_t i = 0; i < v.tokens.size(); ++i) v.index[v.tokens[i]] = i;
  auto inv = inv_n(3);
  auto base = make_cm_model<double>(cfg, v, inv, nullptr, nullptr, rng);

  auto ref = cm_predict(base, ds, inv);
  for (auto mode : {MimlMode::ds, MimlMode::max, MimlMode::avg, MimlMode::max_avg}) {
    auto m = base;
    m.mode = mode;
    auto got = cm_predict(m, ds, inv);
    for (std::size_t i = 0; i < ds.bags.size(); ++i)
      for (std::size_t t = 0; t < 3; ++t) CHECK(got.scores.at(i, t) == ref.scores.at(i, t));
  }
}

TEST_CASE("max training ties break to the first context in the bag") {
  auto cfg = cm_cfg(CmEncoder::ff, MimlMode::max);
  Rng rng(59);
  CmVocab v;
  v.tokens = {"PAD", "<unk>", "a", "b", "c"};
  for (std::size_t i = 0; i < v.tokens.size(); ++i) v.index[v.tokens[i]] = i;
  auto inv = inv_n(2);
  auto m1 = make_cm_model<double>(cfg, v, inv, nullptr, nullptr, rng);
  auto m2 = m1;

  CmDataset ds;
  ds.contexts = {{2, 3, 4, 3, 2}, {2, 3, 4, 3, 2}};  // identical twins
  ds.ctx_gold = Mat<std::uint8_t>(2, 2);
  ds.gold = Mat<std::uint8_t>(1, 2);
  ds.gold.at(0, 0) = 1;

  std::vector<std::uint8_t> y = {1, 0};
  double l2 = cm_bag_loss_backward(m1, ds, {0, 1}, y.data());
  double l1 = cm_bag_loss_backward(m2, ds, {0}, y.data());
  CHECK(l2 == l1);
  auto p1 = m1.params(), p2 = m2.params();
  for (std::size_t k = 0; k < p1.size(); ++k)
    for (std::size_t i = 0; i < p1[k].second->size(); ++i)
      CHECK(p1[k].second->g.a[i] == p2[k].second->g.a[i]);

  CHECK_THROWS_AS(cm_bag_loss_backward(m1, ds, {}, y.data()), ShapeError);
}

namespace {

// Default init puts pad embeddings and biases exactly on relu kinks and packs
// pool scores into a 0.05 band where finite differences straddle argmax flips;
// wide random values move every unit off those singular points.
void spread_params(CmModel<double>& m, Rng& rng) {
  for (auto& [name, p] : m.params())
    for (auto& x : p->v.a) x = rng.uniform(-0.8, 0.8);
}

}  // namespace

TEST_CASE("context level gradients pass finite differences with both encoders") {
  for (auto enc : {CmEncoder::ff, CmEncoder::cnn}) {
    auto cfg = cm_cfg(enc, MimlMode::ds);
    Rng rng(61);
    auto ds = toy_cm_dataset(rng, 3, 2, 5, 7, 3);
    CmVocab v;
    v.tokens = {"PAD", "<unk>", "a", "b", "c", "d", "e"};
    for (std::size_t i = 0; i < v.tokens.size(); ++i) v.index[v.tokens[i]] = i;
    auto m = make_cm_model<double>(cfg, v, inv_n(3), nullptr, nullptr, rng);
    spread_params(m, rng);
    CtxCache<double> cache;
    for (std::size_t i = 0; i < ds.contexts.size(); ++i)
      cm_context_loss_backward(m, ds.contexts[i], ds.ctx_gold.row(i), cache);
    auto rep = grad_check<double>(m.params(), [&]() { return pure_loss(m, ds); }, 1e-4);
    CAPTURE(int(enc));
    CAPTURE(rep.worst);
    CHECK(rep.max_rel_err < 1e-6);
  }
}

TEST_CASE("bag gradients pass finite differences in every miml mode") {
  for (auto mode : {MimlMode::max, MimlMode::avg, MimlMode::max_avg, MimlMode::att}) {
    auto cfg = cm_cfg(CmEncoder::ff, mode);
    Rng rng(67);
    auto ds = toy_cm_dataset(rng, 3, 3, 5, 7, 3);
    CmVocab v;
    v.tokens = {"PAD", "<unk>", "a", "b", "c", "d", "e"};
    for (std::size_t i = 0; i < v.tokens.size(); ++i) v.index[v.tokens[i]] = i;
    auto m = make_cm_model<double>(cfg, v, inv_n(3), nullptr, nullptr, rng);
    spread_params(m, rng);
    for (std::size_t b = 0; b < ds.bags.size(); ++b)
      cm_bag_loss_backward(m, ds, ds.bags[b].context_idx, ds.gold.row(b));
    auto rep = grad_check<double>(m.params(), [&]() { return pure_loss(m, ds); }, 1e-4);
    CAPTURE(to_string(mode));
    CAPTURE(rep.worst);
    // coordinates near the finite difference floor saturate the relative
    // metric; absolute agreement there is ~1e-11, and attention has the
    // smallest surviving coordinates
    CHECK(rep.max_rel_err < (mode == MimlMode::att ? 1e-4 : 1e-5));
  }
}

TEST_CASE("attention gradients also pass with the cnn encoder") {
  auto cfg = cm_cfg(CmEncoder::cnn, MimlMode::att);
  Rng rng(71);
  auto ds = toy_cm_dataset(rng, 2, 3, 5, 7, 3);
  CmVocab v;
  v.tokens = {"PAD", "<unk>", "a", "b", "c", "d", "e"};
  for (std::size_t i = 0; i < v.tokens.size(); ++i) v.index[v.tokens[i]] = i;
  auto m = make_cm_model<double>(cfg, v, inv_n(3), nullptr, nullptr, rng);
  spread_params(m, rng);
  for (std::size_t b = 0; b < ds.bags.size(); ++b)
    cm_bag_loss_backward(m, ds, ds.bags[b].context_idx, ds.gold.row(b));
  auto rep = grad_check<double>(m.params(), [&]() { return pure_loss(m, ds); }, 1e-4);
  CAPTURE(rep.worst);
  CHECK(rep.max_rel_err < 1e-4);
}

TEST_CASE("training is deterministic and the logged best reproduces on re-eval") {
  auto cfg = cm_cfg(CmEncoder::ff, MimlMode::avg);
  cfg.epochs = 6;
  cfg.patience = 6;
  cfg.batch = 4;
  cfg.lr = 0.05;
  Rng rd(73);
  auto train = toy_cm_dataset(rd, 10, 3, 5, 9, 3);
  auto dev = toy_cm_dataset(rd, 6, 2, 5, 9, 3);
  CmVocab v;
  v.tokens = {"PAD", "<unk>", "a", "b", "c", "d", "e", "f", "g"};
  for (std::size_t i = 0; i < v.tokens.size(); ++i) v.index[v.tokens[i]] = i;
  auto inv = inv_n(3);

  Rng r1(7), r2(7);
  auto m1 = make_cm_model<double>(cfg, v, inv, nullptr, nullptr, r1);
  auto m2 = make_cm_model<double>(cfg, v, inv, nullptr, nullptr, r2);
  auto log1 = cm_train(m1, train, dev, inv, cfg, r1);
  auto log2 = cm_train(m2, train, dev, inv, cfg, r2);

  CHECK(log1.best_epoch == log2.best_epoch);
  CHECK(log1.dev_micro == log2.dev_micro);
  auto p1 = m1.params(), p2 = m2.params();
  for (std::size_t k = 0; k < p1.size(); ++k)
    for (std::size_t i = 0; i < p1[k].second->size(); ++i)
      CHECK(p1[k].second->v.a[i] == p2[k].second->v.a[i]);

  double best = -1;
  for (double f : log1.dev_micro) best = std::max(best, f);
  CHECK(log1.best_dev == best);
  auto scores = cm_predict(m1, dev, inv);
  double re = micro_f1(assign(scores.scores, log1.dev_thresholds), dev.gold);
  CHECK(re == doctest::Approx(log1.best_dev).epsilon(1e-15));
}

TEST_CASE("loss units count contexts for ds and bags for miml") {
  auto cfg = cm_cfg(CmEncoder::ff, MimlMode::ds);
  cfg.epochs = 3;
  cfg.patience = 100;
  cfg.batch = 4;
  Rng rd(79);
  auto train = toy_cm_dataset(rd, 6, 3, 5, 9, 3);  // 18 contexts
  auto dev = toy_cm_dataset(rd, 4, 2, 5, 9, 3);
  CmVocab v;
  v.tokens = {"PAD", "<unk>", "a", "b", "c", "d", "e", "f", "g"};
  for (std::size_t i = 0; i < v.tokens.size(); ++i) v.index[v.tokens[i]] = i;
  auto inv = inv_n(3);

  Rng r1(3);
  auto m = make_cm_model<double>(cfg, v, inv, nullptr, nullptr, r1);
  auto log = cm_train(m, train, dev, inv, cfg, r1);
  const std::size_t epochs_run = log.dev_micro.size();
  CHECK(log.loss_units == epochs_run * 18);
  CHECK(log.update_events == epochs_run * 5);  // ceil(18 / 4)

  cfg.miml = MimlMode::max;
  Rng r2(3);
  auto mb = make_cm_model<double>(cfg, v, inv, nullptr, nullptr, r2);
  auto logb = cm_train(mb, train, dev, inv, cfg, r2);
  const std::size_t eb = logb.dev_micro.size();
  CHECK(logb.loss_units == eb * 6);
  CHECK(logb.update_events == eb * 2);  // ceil(6 / 4)

  CmDataset empty;
  CHECK_THROWS_AS(cm_train(mb, empty, dev, inv, cfg, r2), ConfigError);
  CHECK_THROWS_AS(cm_train(mb, train, empty, inv, cfg, r2), ConfigError);
}

TEST_CASE("oversized bags are subsampled for training but predicted in full") {
  auto cfg = cm_cfg(CmEncoder::ff, MimlMode::avg);
  cfg.bag_cap = 2;
  cfg.epochs = 2;
  cfg.patience = 100;
  Rng rd(83);
  auto train = toy_cm_dataset(rd, 4, 5, 5, 9, 3);  // every bag over the cap
  auto dev = toy_cm_dataset(rd, 3, 5, 5, 9, 3);
  CmVocab v;
  v.tokens = {"PAD", "<unk>", "a", "b", "c", "d", "e", "f", "g"};
  for (std::size_t i = 0; i < v.tokens.size(); ++i) v.index[v.tokens[i]] = i;
  auto inv = inv_n(3);
  Rng r1(5), r2(5);
  auto m1 = make_cm_model<double>(cfg, v, inv, nullptr, nullptr, r1);
  auto m2 = make_cm_model<double>(cfg, v, inv, nullptr, nullptr, r2);
  auto log1 = cm_train(m1, train, dev, inv, cfg, r1);
  cm_train(m2, train, dev, inv, cfg, r2);
  auto pa = m1.params(), pb = m2.params();
  for (std::size_t k = 0; k < pa.size(); ++k)
    for (std::size_t i = 0; i < pa[k].second->size(); ++i)
      CHECK(pa[k].second->v.a[i] == pb[k].second->v.a[i]);
  CHECK(log1.loss_units == log1.dev_micro.size() * 4);

  // prediction touches all five contexts: it must match the component oracle
  auto scores = cm_predict(m1, dev, inv);
  CtxCache<double> cache;
  std::vector<double> z(3);
  for (std::size_t t = 0; t < 3; ++t) {
    double s = 0;
    for (auto ci : dev.bags[0].context_idx) {
      cm_encode(m1, dev.contexts[ci], cache);
      cm_head_scores(m1, cache.c.data(), z.data());
      s += sigmoid(z[t]);
    }
    CHECK(scores.scores.at(0, t) == doctest::Approx(s / 5.0).epsilon(1e-14));
  }
}

TEST_CASE("indicative context tokens are learnable from distant labels") {
  const std::size_t n_types = 4;
  CmVocab v;
  v.tokens = {"PAD", "<unk>", "SLOT", "f0", "f1", "f2", "f3", "f4", "f5",
              "ind0", "ind1", "ind2", "ind3"};
  for (std::size_t i = 0; i < v.tokens.size(); ++i) v.index[v.tokens[i]] = i;
  const std::uint32_t ind0 = 9, filler0 = 3, slot = 2;

  Rng gen(89);
  auto build = [&](std::size_t n_bags, std::size_t signal_per_bag, std::size_t ctx_per_bag) {
    CmDataset ds;
    ds.ctx_gold = Mat<std::uint8_t>(n_bags * ctx_per_bag, n_types);
    ds.gold = Mat<std::uint8_t>(n_bags, n_types);
    for (std::size_t b = 0; b < n_bags; ++b) {
      std::vector<std::size_t> gold = {gen.below(n_types)};
      if (gen.uniform() < 0.4) {
        std::size_t extra = gen.below(n_types);
        if (extra != gold[0]) gold.push_back(extra);
      }
      Bag bag;
      bag.entity = "e" + std::to_string(ds.bags.size());
      for (std::size_t c = 0; c < ctx_per_bag; ++c) {
        std::vector<std::uint32_t> ctx(5);
        for (auto& id : ctx) id = filler0 + static_cast<std::uint32_t>(gen.below(6));
        ctx[2] = slot;
        if (c < signal_per_bag) {
          ctx[1] = ind0 + static_cast<std::uint32_t>(gold[0]);
          ctx[3] = ind0 + static_cast<std::uint32_t>(gold.back());
        }
        bag.context_idx.push_back(ds.contexts.size());
        for (auto t : gold) ds.ctx_gold.at(ds.contexts.size(), t) = 1;
        ds.contexts.push_back(std::move(ctx));
      }
      for (auto t : gold) ds.gold.at(b, t) = 1;
      ds.entities.push_back(bag.entity);
      ds.bags.push_back(std::move(bag));
    }
    return ds;
  };

  auto inv = inv_n(n_types);
  auto cfg = cm_cfg(CmEncoder::ff, MimlMode::ds);
  cfg.cm_emb_dim = 8;
  cfg.hidden = 16;
  cfg.lr = 0.1;
  cfg.batch = 16;
  cfg.epochs = 60;
  cfg.patience = 60;

  // every context carries the signal: plain distant supervision suffices
  auto train = build(48, 3, 3);
  auto dev = build(16, 3, 3);
  auto test = build(16, 3, 3);
  Rng rng(97);
  auto m = make_cm_model<double>(cfg, v, inv, nullptr, nullptr, rng);
  auto log = cm_train(m, train, dev, inv, cfg, rng);
  auto scores = cm_predict(m, test, inv);
  double f1 = micro_f1(assign(scores.scores, log.dev_thresholds), test.gold);
  CHECK(f1 >= 0.9);

  // only one context in three carries the signal: max pooling still learns
  cfg.miml = MimlMode::max;
  cfg.epochs = 80;
  cfg.patience = 80;
  auto train2 = build(48, 1, 3);
  auto dev2 = build(16, 1, 3);
  auto test2 = build(16, 1, 3);
  Rng rng2(101);
  auto m2 = make_cm_model<double>(cfg, v, inv, nullptr, nullptr, rng2);
  auto log2 = cm_train(m2, train2, dev2, inv, cfg, rng2);
  auto scores2 = cm_predict(m2, test2, inv);
  double f2 = micro_f1(assign(scores2.scores, log2.dev_thresholds), test2.gold);
  CHECK(f2 >= 0.8);
}

TEST_CASE("lookup seeds from word vectors, pad stays zero, type vectors seed attention") {
  EmbeddingTable words;
  words.add("fox", {0.5, -0.25});
  words.add("PAD", {9.0, 9.0});  // must not unseat the zero pad row
  EmbeddingTable types;
  types.add("t1", {1.5, -1.5, 0.5});

  CmVocab v;
  v.tokens = {"PAD", "<unk>", "fox", "ran"};
  for (std::size_t i = 0; i < v.tokens.size(); ++i) v.index[v.tokens[i]] = i;
  auto cfg = cm_cfg(CmEncoder::ff, MimlMode::att);
  cfg.cm_emb_dim = 7;  // ignored when a word file is present
  Rng rng(103);
  auto m = make_cm_model<double>(cfg, v, inv_n(2), &words, &types, rng);

  REQUIRE(m.emb_dim == 2);
  CHECK(m.emb.v.at(0, 0) == 0.0);
  CHECK(m.emb.v.at(0, 1) == 0.0);
  CHECK(m.emb.v.at(2, 0) == 0.5);
  CHECK(m.emb.v.at(2, 1) == -0.25);
  bool ran_random = false;
  for (std::size_t j = 0; j < 2; ++j) {
    CHECK(std::abs(m.emb.v.at(3, j)) <= 0.05);
    ran_random |= m.emb.v.at(3, j) != 0.0;
  }
  CHECK(ran_random);

  REQUIRE(m.type_dim == 3);
  CHECK(m.t_emb.v.at(1, 0) == 1.5);
  CHECK(m.t_emb.v.at(1, 1) == -1.5);
  CHECK(m.t_emb.v.at(1, 2) == 0.5);
  for (std::size_t j = 0; j < 3; ++j) CHECK(std::abs(m.t_emb.v.at(0, j)) <= 0.05);
}

TEST_CASE("float context model stays finite end to end") {
  auto cfg = cm_cfg(CmEncoder::cnn, MimlMode::att);
  Rng rng(107);
  auto ds = toy_cm_dataset(rng, 3, 2, 5, 7, 3);
  CmVocab v;
  v.tokens = {"PAD", "<unk>", "a", "b", "c", "d", "e"};
  for (std::size_t i = 0; i < v.tokens.size(); ++i) v.index[v.tokens[i]] = i;
  auto inv = inv_n(3);
  auto m = make_cm_model<float>(cfg, v, inv, nullptr, nullptr, rng);
  auto scores = cm_predict(m, ds, inv);
  CHECK(all_finite(scores.scores));
  for (std::size_t b = 0; b < ds.bags.size(); ++b) {
    double l = cm_bag_loss_backward(m, ds, ds.bags[b].context_idx, ds.gold.row(b));
    CHECK(std::isfinite(l));
  }
}
