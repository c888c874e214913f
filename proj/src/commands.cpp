#include "entype/commands.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numeric>
#include <unordered_set>

#include <CLI11.hpp>
#include <json.hpp>

#include "entype/checkpoint.hpp"
#include "entype/context_model.hpp"
#include "entype/corpus.hpp"
#include "entype/embedding.hpp"
#include "entype/entity_repr.hpp"
#include "entype/errors.hpp"
#include "entype/global_model.hpp"
#include "entype/joint.hpp"
#include "entype/metrics.hpp"
#include "entype/score_matrix.hpp"
#include "entype/synth.hpp"
#include "entype/text.hpp"

namespace entype {
namespace {

using json = nlohmann::ordered_json;

std::string join_path(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir + ": " + ec.message());
}

std::unordered_set<std::string> id_set(const std::vector<std::string>& ids) {
  return std::unordered_set<std::string>(ids.begin(), ids.end());
}

void report_train(const TrainLog& log) {
  std::cout << std::fixed << std::setprecision(4) << "trained " << log.dev_micro.size()
            << " epochs" << (log.stopped_early ? " (early stop)" : "") << ", best dev micro "
            << log.best_dev << " at epoch " << (log.best_epoch + 1) << ", " << log.loss_units
            << " loss units, " << log.update_events << " updates\n";
  std::cout.unsetf(std::ios::fixed);
  std::cout << std::setprecision(6);
}

void write_train_log(const TrainLog& log, const std::string& path, const std::string& hash) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path + " for writing");
  f << "# config_hash=" << hash << "\n";
  for (std::size_t e = 0; e < log.dev_micro.size(); ++e)
    f << "epoch " << (e + 1) << " loss " << format_g17(log.epoch_loss[e]) << " dev_micro "
      << format_g17(log.dev_micro[e]) << "\n";
  f << "best_epoch " << (log.best_epoch + 1) << "\n";
  f << "stopped_early " << (log.stopped_early ? 1 : 0) << "\n";
  if (!f) throw IoError("short write to " + path);
}

// Tables the enabled levels reference. ReprTables holds raw pointers, so the
// owning storage lives here and table_view builds the pointer view afterwards.
struct GmTables {
  ReprSpec spec;
  EmbeddingTable entity, word, subword;
  Descriptions des;
  DescStats dstats;
  bool has_entity = false, has_word = false, has_subword = false, has_des = false;
  bool subword_from_word = false;
};

GmTables load_gm_tables(const RunConfig& cfg) {
  GmTables t;
  t.spec.levels = cfg.levels;
  t.spec.name_len = cfg.name_len;
  t.spec.desc_top_k = cfg.desc_top_k;
  t.spec.missing_entity_zero = cfg.missing_entity_zero;

  const bool elr = level_enabled(cfg.levels, Level::elr);
  const bool wwlr = level_enabled(cfg.levels, Level::wwlr);
  const bool swlr = level_enabled(cfg.levels, Level::swlr);
  const bool des = level_enabled(cfg.levels, Level::avg_des);

  if (elr) {
    if (cfg.entity_embeddings.empty())
      throw ConfigError("level elr needs paths.entity_embeddings");
    t.entity = load_embeddings(cfg.entity_embeddings);
    t.has_entity = true;
  }
  const bool swlr_fallback = swlr && cfg.subword_embeddings.empty();
  if (wwlr || des || swlr_fallback) {
    if (cfg.word_embeddings.empty())
      throw ConfigError("the enabled levels need paths.word_embeddings");
    t.word = load_embeddings(cfg.word_embeddings);
    t.has_word = true;
  }
  if (swlr && !swlr_fallback) {
    t.subword = load_embeddings(cfg.subword_embeddings);
    t.has_subword = true;
  }
  t.subword_from_word = swlr_fallback;
  if (des) {
    if (cfg.descriptions.empty()) throw ConfigError("level avg_des needs paths.descriptions");
    t.des = load_descriptions(cfg.descriptions);
    t.dstats = desc_stats(t.des);
    t.has_des = true;
  }
  return t;
}

ReprTables table_view(const GmTables& t) {
  ReprTables v;
  if (t.has_entity) v.entity = &t.entity;
  if (t.has_word) v.word = &t.word;
  if (t.has_subword) v.subword = &t.subword;
  else if (t.subword_from_word) v.subword = &t.word;
  if (t.has_des) {
    v.descriptions = &t.des;
    v.dstats = &t.dstats;
  }
  return v;
}

void report_repr(const ReprStats& s) {
  if (s.missing_elr) std::cout << "entities without an entity embedding: " << s.missing_elr << "\n";
  if (s.all_oov_wwlr) std::cout << "entities with all name words OOV: " << s.all_oov_wwlr << "\n";
  if (s.all_oov_swlr)
    std::cout << "entities with all subwords OOV: " << s.all_oov_swlr << "\n";
  if (s.dropped_no_description)
    std::cout << "entities dropped for missing descriptions: " << s.dropped_no_description << "\n";
}

template <class T>
int train_gm(const RunConfig& cfg, const std::string& data, const std::string& out) {
  Catalog catalog = load_catalog(cfg.catalog);
  TypeInventory inv = load_inventory(cfg.inventory);
  std::vector<std::string> train_ids = load_split(join_path(data, "split.train.txt"));
  std::vector<std::string> dev_ids = load_split(join_path(data, "split.dev.txt"));

  GmTables tabs = load_gm_tables(cfg);
  ReprTables view = table_view(tabs);

  const bool use_clr =
      level_enabled(cfg.levels, Level::clr_ff) || level_enabled(cfg.levels, Level::clr_cnn);
  const bool use_nsl = level_enabled(cfg.levels, Level::nsl);
  const bool use_sparse = use_nsl || level_enabled(cfg.levels, Level::bow);

  CharVocab cvocab;
  if (use_clr) cvocab = build_char_vocab(catalog, train_ids);
  FeatureDict fdict;
  if (use_sparse) fdict = build_feature_dict(catalog, train_ids, use_nsl ? Level::nsl : Level::bow);

  ReprStats rstats;
  GmDataset train_ds = build_gm_dataset(tabs.spec, view, catalog, train_ids, inv,
                                        use_clr ? &cvocab : nullptr,
                                        use_sparse ? &fdict : nullptr, &rstats);
  GmDataset dev_ds = build_gm_dataset(tabs.spec, view, catalog, dev_ids, inv,
                                      use_clr ? &cvocab : nullptr,
                                      use_sparse ? &fdict : nullptr, &rstats);
  report_repr(rstats);
  std::cout << "train entities " << train_ds.ids.size() << ", dev entities " << dev_ds.ids.size()
            << ", frozen width " << train_ds.frozen.cols << "\n";

  GmDims dims;
  dims.frozen = train_ds.frozen.cols;
  dims.head = train_ds.head_dim;
  dims.n_types = inv.size();
  dims.n_chars = use_clr ? cvocab.size() : 0;
  dims.sparse_dim = use_sparse ? fdict.size() : 0;

  Rng rng(cfg.seed);
  GmModel<T> m = make_gm_model<T>(cfg, dims, rng);
  TrainLog log = gm_train(m, train_ds, dev_ds, inv, cfg, rng);
  report_train(log);

  Checkpoint ck = gm_to_checkpoint(m, use_clr ? &cvocab : nullptr,
                                   use_sparse ? &fdict : nullptr, inv, cfg.hash());
  save_checkpoint(ck, out);
  write_train_log(log, out + ".log", cfg.hash());
  std::cout << "wrote " << out << " and " << out << ".log\n";
  return 0;
}

template <class T>
int train_cm(const RunConfig& cfg, const std::string& data, const std::string& out) {
  TypeInventory inv = load_inventory(cfg.inventory);
  ContextDump tr = load_context_dump(join_path(data, "train.ctx.tsv"));
  ContextDump dv = load_context_dump(join_path(data, "dev.ctx.tsv"));
  CmVocab vocab = build_cm_vocab(tr);
  CmDataset train_ds = encode_cm_dataset(tr, vocab, inv);
  CmDataset dev_ds = encode_cm_dataset(dv, vocab, inv);
  std::cout << "train contexts " << train_ds.contexts.size() << " in " << train_ds.bags.size()
            << " bags, dev contexts " << dev_ds.contexts.size() << " in " << dev_ds.bags.size()
            << " bags, vocab " << vocab.tokens.size() << "\n";

  EmbeddingTable word_init, type_init;
  const bool has_word = !cfg.word_embeddings.empty();
  if (has_word) word_init = load_embeddings(cfg.word_embeddings);
  const bool has_type = cfg.miml == MimlMode::att && !cfg.type_embeddings.empty();
  if (has_type) type_init = load_embeddings(cfg.type_embeddings);

  Rng rng(cfg.seed);
  CmModel<T> m = make_cm_model<T>(cfg, vocab, inv, has_word ? &word_init : nullptr,
                                  has_type ? &type_init : nullptr, rng);
  TrainLog log = cm_train(m, train_ds, dev_ds, inv, cfg, rng);
  report_train(log);

  save_checkpoint(cm_to_checkpoint(m, vocab, inv, cfg.hash()), out);
  write_train_log(log, out + ".log", cfg.hash());
  std::cout << "wrote " << out << " and " << out << ".log\n";
  return 0;
}

template <class T>
TypeScoreMatrix predict_gm(const RunConfig& cfg, const Checkpoint& ck, const Catalog& catalog,
                           const TypeInventory& inv, const std::vector<std::string>& ids) {
  GmLoad<T> load = gm_from_checkpoint<T>(ck);
  if (load.types != inv.types)
    throw ConfigError("model type list does not match the current inventory");
  GmModel<T>& m = load.model;

  GmTables tabs = load_gm_tables(cfg);
  ReprTables view = table_view(tabs);
  if (m.clr_ff && tabs.spec.name_len * m.chars.v.cols != m.clr_dim)
    throw ShapeError("model.name_len does not match the character block the model was trained with");
  if (m.clr_cnn && !m.clr_widths.empty() &&
      tabs.spec.name_len < *std::max_element(m.clr_widths.begin(), m.clr_widths.end()))
    throw ShapeError("model.name_len is shorter than the widest trained character filter");

  ReprStats rstats;
  GmDataset ds = build_gm_dataset(tabs.spec, view, catalog, ids, inv,
                                  (m.clr_ff || m.clr_cnn) ? &load.chars : nullptr,
                                  m.sparse ? &load.features : nullptr, &rstats);
  report_repr(rstats);
  if (!m.sparse && (ds.frozen.cols + m.clr_dim != m.in_dim || ds.head_dim != m.head_dim))
    throw ShapeError("frozen inputs are " + std::to_string(ds.frozen.cols) +
                     " wide but the model was trained on " +
                     std::to_string(m.in_dim - m.clr_dim) +
                     "; representation settings differ from training");
  return gm_predict(m, ds, inv);
}

template <class T>
TypeScoreMatrix predict_cm(const Checkpoint& ck, const TypeInventory& inv,
                           const std::string& data, const std::string& split,
                           const std::vector<std::string>& ids) {
  CmLoad<T> load = cm_from_checkpoint<T>(ck);
  if (load.types != inv.types)
    throw ConfigError("model type list does not match the current inventory");
  ContextDump dump = load_context_dump(join_path(data, split + ".ctx.tsv"));
  CmDataset ds = encode_cm_dataset(dump, load.vocab, inv);

  // The dump may omit entities that lost every context at sampling; score
  // rows follow the dump, so warn when the split list and the dump disagree.
  std::unordered_set<std::string> in_dump;
  for (const auto& b : ds.bags) in_dump.insert(ds.entities[&b - ds.bags.data()]);
  std::size_t missing = 0;
  for (const auto& id : ids)
    if (!in_dump.count(id)) ++missing;
  if (missing)
    std::cerr << "warning: " << missing << " split entities have no contexts in " << split
              << ".ctx.tsv and get no scores\n";
  return cm_predict(load.model, ds, inv);
}

json bundle_json(const MetricBundle& b) {
  json j = json::object();
  j["n_entities"] = b.n_entities;
  j["p_at_1"] = b.p_at_1;
  j["bep"] = b.bep;
  j["strict_accuracy"] = b.strict_accuracy;
  j["micro_f1"] = b.micro_f1;
  j["entity_macro_f1"] = b.entity_macro_f1;
  j["map"] = b.map;
  j["p_at_k"] = b.p_at_k;
  j["type_macro_f1"] = b.type_macro_f1;
  return j;
}

json label_json(const LabelBundle& b) {
  json j = json::object();
  j["n_types"] = b.n_types;
  j["map"] = b.map;
  j["p_at_k"] = b.p_at_k;
  j["type_macro_f1"] = b.type_macro_f1;
  return j;
}

}  // namespace

int cmd_synth(const RunConfig& cfg, const std::string& out_dir) {
  SynthResult r = generate_synth(cfg.synth);
  ensure_dir(out_dir);
  write_synth(r, out_dir);
  std::cout << "synth: " << r.catalog.entities.size() << " entities, "
            << r.inventory.types.size() << " types, " << r.corpus.size() << " sentences ("
            << r.signal_sentences << " signal, " << r.noise_sentences << " noise), vocab "
            << r.word_vecs.tokens.size() << ", zeroed tail " << r.zeroed_entities.size() << "\n";
  std::cout << "wrote " << out_dir << "\n";
  return 0;
}

int cmd_preprocess(const RunConfig& cfg, const std::string& out_dir) {
  Catalog catalog = load_catalog(cfg.catalog);
  TypeInventory inv = load_inventory(cfg.inventory);
  std::vector<Sentence> corpus = load_corpus(cfg.corpus);

  PreprocessStats pstats;
  corpus = preprocess_corpus(corpus, &pstats);
  std::cout << "preprocess: " << pstats.sentences_in << " sentences in, " << pstats.dropped_short
            << " dropped short, " << pstats.mentions_kept << " mentions kept\n";

  Rng root(cfg.seed);
  SplitIds split = split_entities(catalog, cfg.train_ratio, cfg.dev_ratio, cfg.test_ratio,
                                  root.derive("split"));
  std::cout << "split: " << split.train.size() << " train / " << split.dev.size() << " dev / "
            << split.test.size() << " test entities\n";

  ExtractStats xstats;
  std::vector<Context> contexts =
      extract_contexts(corpus, catalog, id_set(split.train), cfg.context_size, &xstats);
  std::vector<std::vector<std::string>> labels = distant_labels(contexts, catalog);
  std::cout << "contexts: " << xstats.contexts << " from " << xstats.mentions_seen
            << " mentions, " << xstats.unknown_entity << " unknown-entity mentions skipped\n";

  auto part_of = [&](const std::vector<std::string>& ids) {
    std::unordered_set<std::string> in = id_set(ids);
    std::pair<std::vector<Context>, std::vector<std::vector<std::string>>> out;
    for (std::size_t i = 0; i < contexts.size(); ++i) {
      if (!in.count(contexts[i].entity)) continue;
      out.first.push_back(contexts[i]);
      out.second.push_back(labels[i]);
    }
    return out;
  };
  auto [train_ctx, train_lab] = part_of(split.train);
  auto [dev_ctx, dev_lab] = part_of(split.dev);
  auto [test_ctx, test_lab] = part_of(split.test);

  SampleStats sstats;
  std::vector<std::size_t> tr_keep =
      sample_train_contexts(train_ctx, catalog, inv, cfg.min_per_type, cfg.cap_per_type,
                            root.derive("sample-train"), &sstats);
  for (const auto& w : sstats.warnings) std::cerr << "warning: " << w << "\n";
  std::vector<std::size_t> dv_keep =
      sample_eval_contexts(dev_ctx, cfg.dev_bag, root.derive("sample-dev"));
  std::vector<std::size_t> te_keep =
      sample_eval_contexts(test_ctx, cfg.test_bag, root.derive("sample-test"));

  auto take = [](const std::vector<Context>& cs, const std::vector<std::vector<std::string>>& ls,
                 const std::vector<std::size_t>& keep) {
    std::pair<std::vector<Context>, std::vector<std::vector<std::string>>> out;
    out.first.reserve(keep.size());
    out.second.reserve(keep.size());
    for (std::size_t i : keep) {
      out.first.push_back(cs[i]);
      out.second.push_back(ls[i]);
    }
    return out;
  };
  auto [tr_c, tr_l] = take(train_ctx, train_lab, tr_keep);
  auto [dv_c, dv_l] = take(dev_ctx, dev_lab, dv_keep);
  auto [te_c, te_l] = take(test_ctx, test_lab, te_keep);

  ensure_dir(out_dir);
  const std::string h = cfg.hash();
  save_split(join_path(out_dir, "split.train.txt"), split.train, h);
  save_split(join_path(out_dir, "split.dev.txt"), split.dev, h);
  save_split(join_path(out_dir, "split.test.txt"), split.test, h);
  save_context_dump(join_path(out_dir, "train.ctx.tsv"), tr_c, tr_l, h);
  save_context_dump(join_path(out_dir, "dev.ctx.tsv"), dv_c, dv_l, h);
  save_context_dump(join_path(out_dir, "test.ctx.tsv"), te_c, te_l, h);
  std::cout << "sampled contexts: train " << tr_c.size() << ", dev " << dv_c.size() << ", test "
            << te_c.size() << "\n";
  std::cout << "wrote " << out_dir << "\n";
  return 0;
}

int cmd_train(const RunConfig& cfg, const std::string& data_dir, const std::string& out_path) {
  switch (cfg.kind) {
    case ModelKind::gm:
      return cfg.precision == Precision::f64 ? train_gm<double>(cfg, data_dir, out_path)
                                             : train_gm<float>(cfg, data_dir, out_path);
    case ModelKind::cm:
      return cfg.precision == Precision::f64 ? train_cm<double>(cfg, data_dir, out_path)
                                             : train_cm<float>(cfg, data_dir, out_path);
    case ModelKind::mft:
      throw ConfigError("the frequency baseline has nothing to train; run predict directly");
  }
  return 1;
}

int cmd_predict(const RunConfig& cfg, const std::string& data_dir, const std::string& model_path,
                const std::string& split, const std::string& out_path) {
  if (split != "dev" && split != "test")
    throw ConfigError("predict --split must be dev or test, got " + split);
  Catalog catalog = load_catalog(cfg.catalog);
  TypeInventory inv = load_inventory(cfg.inventory);
  std::vector<std::string> ids = load_split(join_path(data_dir, "split." + split + ".txt"));

  TypeScoreMatrix scores;
  if (cfg.kind == ModelKind::mft) {
    std::vector<std::string> train_ids = load_split(join_path(data_dir, "split.train.txt"));
    scores = mft_baseline(catalog, train_ids, ids, inv);
  } else {
    if (model_path.empty()) throw ConfigError("predict needs --model unless model.kind is mft");
    Checkpoint ck = load_checkpoint(model_path);
    if (ck.config_hash != cfg.hash())
      std::cerr << "warning: " << model_path << " was trained under config hash "
                << ck.config_hash << " but the current config hashes to " << cfg.hash() << "\n";
    const std::string kind = ck.meta_at("kind");
    if (kind != to_string(cfg.kind))
      throw ConfigError("model.kind is " + to_string(cfg.kind) + " but " + model_path +
                        " holds a " + kind + " model");
    if (kind == "gm") {
      scores = ck.precision == 0 ? predict_gm<double>(cfg, ck, catalog, inv, ids)
                                 : predict_gm<float>(cfg, ck, catalog, inv, ids);
    } else {
      scores = ck.precision == 0 ? predict_cm<double>(ck, inv, data_dir, split, ids)
                                 : predict_cm<float>(ck, inv, data_dir, split, ids);
    }
  }
  save_scores(scores, out_path, cfg.hash());
  std::cout << "wrote " << out_path << " (" << scores.entities.size() << " entities x "
            << scores.types.size() << " types)\n";
  return 0;
}

int cmd_joint(const RunConfig& cfg, const std::vector<std::string>& inputs,
              const std::string& out_path) {
  TypeInventory inv = load_inventory(cfg.inventory);
  std::vector<LoadedScores> loads;
  loads.reserve(inputs.size());
  for (const auto& p : inputs) loads.push_back(load_scores(p, inv));
  std::vector<const TypeScoreMatrix*> mats;
  mats.reserve(loads.size());
  for (const auto& l : loads) mats.push_back(&l.matrix);
  TypeScoreMatrix out = joint_scores(mats);
  save_scores(out, out_path, cfg.hash());
  std::cout << "wrote " << out_path << " (mean of " << inputs.size() << " inputs)\n";
  return 0;
}

int cmd_evaluate(const RunConfig& cfg, const std::string& data_dir, const std::string& dev_path,
                 const std::string& test_path, const std::string& out_path, bool force) {
  Catalog catalog = load_catalog(cfg.catalog);
  TypeInventory inv = load_inventory(cfg.inventory);
  std::vector<std::string> train_ids = load_split(join_path(data_dir, "split.train.txt"));

  LoadedScores dev = load_scores(dev_path, inv);
  LoadedScores test = load_scores(test_path, inv);
  const std::string h = cfg.hash();
  for (const auto& [path, got] :
       {std::pair{dev_path, dev.config_hash}, std::pair{test_path, test.config_hash}}) {
    if (got == h) continue;
    const std::string msg =
        path + " carries config hash " + got + " but the current config hashes to " + h;
    if (!force) throw ConfigError(msg + "; pass --force to evaluate anyway");
    std::cerr << "warning: " << msg << "\n";
  }

  Mat<std::uint8_t> dev_gold = build_gold(dev.matrix, catalog, inv);
  Mat<std::uint8_t> test_gold = build_gold(test.matrix, catalog, inv);
  ThresholdResult thr = tune_thresholds(dev.matrix.scores, dev_gold);
  for (const auto& w : thr.warnings) std::cerr << "warning: " << w << "\n";
  Mat<std::uint8_t> assigned = assign(test.matrix.scores, thr.thresholds);

  std::vector<std::size_t> all_rows(test.matrix.entities.size());
  std::iota(all_rows.begin(), all_rows.end(), std::size_t{0});
  EntityPartition ep =
      partition_entities(test.matrix, catalog, cfg.entity_head_above, cfg.entity_tail_below);
  KnownPartition kp = partition_known(test.matrix, catalog, train_ids);

  std::vector<std::size_t> counts = type_train_counts(catalog, train_ids, inv);
  TypePartition tp = partition_types(counts, cfg.type_head_above, cfg.type_tail_below);
  std::vector<std::size_t> all_cols(inv.size());
  std::iota(all_cols.begin(), all_cols.end(), std::size_t{0});

  const auto& S = test.matrix.scores;
  const std::size_t k = cfg.p_at_k;
  json report = json::object();
  report["config_hash"] = h;
  report["n_dev_entities"] = dev.matrix.entities.size();
  report["n_test_entities"] = test.matrix.entities.size();
  report["n_types"] = inv.size();
  json thj = json::object();
  for (std::size_t t = 0; t < inv.size(); ++t) thj[inv.types[t]] = thr.thresholds[t];
  report["thresholds"] = std::move(thj);
  report["threshold_warnings"] = thr.warnings;
  json es = json::object();
  es["all"] = bundle_json(entity_bundle(S, test_gold, assigned, all_rows, k));
  es["head"] = bundle_json(entity_bundle(S, test_gold, assigned, ep.head, k));
  es["tail"] = bundle_json(entity_bundle(S, test_gold, assigned, ep.tail, k));
  es["known"] = bundle_json(entity_bundle(S, test_gold, assigned, kp.known, k));
  es["unknown"] = bundle_json(entity_bundle(S, test_gold, assigned, kp.unknown, k));
  report["entity_slices"] = std::move(es);
  json ts = json::object();
  ts["all"] = label_json(label_bundle(S, test_gold, assigned, all_cols, k));
  ts["head"] = label_json(label_bundle(S, test_gold, assigned, tp.head, k));
  ts["tail"] = label_json(label_bundle(S, test_gold, assigned, tp.tail, k));
  report["type_slices"] = std::move(ts);

  std::ofstream f(out_path, std::ios::binary);
  if (!f) throw IoError("cannot open " + out_path + " for writing");
  f << report.dump(2) << "\n";
  if (!f) throw IoError("short write to " + out_path);
  f.close();

  const json& a = report["entity_slices"]["all"];
  std::cout << std::fixed << std::setprecision(4) << "test micro F1 "
            << a["micro_f1"].get<double>() << ", P@1 " << a["p_at_1"].get<double>()
            << ", strict accuracy " << a["strict_accuracy"].get<double>() << ", MAP "
            << a["map"].get<double>() << " over " << test.matrix.entities.size()
            << " entities\n";
  std::cout.unsetf(std::ios::fixed);
  std::cout << std::setprecision(6);
  std::cout << "wrote " << out_path << "\n";
  return 0;
}

int run_cli(int argc, char** argv) {
  CLI::App app{"corpus-level fine-grained entity typing"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> sets;
  std::string out_path, data_dir, model_path, split = "test";
  std::string dev_scores, test_scores;
  std::vector<std::string> joint_in;
  bool force = false;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "run configuration file")->required();
    sub->add_option("--set", sets, "override, section.key=value");
  };
  auto make_cfg = [&]() {
    RunConfig cfg = load_config(config_path);
    for (const auto& s : sets) apply_override(cfg, s);
    return cfg;
  };

  int rc = 0;
  CLI::App* synth = app.add_subcommand("synth", "generate a synthetic corpus");
  add_common(synth);
  synth->add_option("--out", out_path, "output directory")->required();
  synth->callback([&] { rc = cmd_synth(make_cfg(), out_path); });

  CLI::App* pre = app.add_subcommand("preprocess", "clean, split, extract and sample contexts");
  add_common(pre);
  pre->add_option("--out", out_path, "output directory")->required();
  pre->callback([&] { rc = cmd_preprocess(make_cfg(), out_path); });

  CLI::App* train = app.add_subcommand("train", "train the configured model");
  add_common(train);
  train->add_option("--data", data_dir, "preprocess output directory")->required();
  train->add_option("--out", out_path, "checkpoint file")->required();
  train->callback([&] { rc = cmd_train(make_cfg(), data_dir, out_path); });

  CLI::App* pred = app.add_subcommand("predict", "score a split with a trained model");
  add_common(pred);
  pred->add_option("--data", data_dir, "preprocess output directory")->required();
  pred->add_option("--model", model_path, "checkpoint file; omit for the mft baseline");
  pred->add_option("--split", split, "dev or test")->required();
  pred->add_option("--out", out_path, "score file")->required();
  pred->callback([&] { rc = cmd_predict(make_cfg(), data_dir, model_path, split, out_path); });

  CLI::App* joint = app.add_subcommand("joint", "average score files elementwise");
  add_common(joint);
  joint->add_option("--in", joint_in, "input score files")->required();
  joint->add_option("--out", out_path, "score file")->required();
  joint->callback([&] { rc = cmd_joint(make_cfg(), joint_in, out_path); });

  CLI::App* ev = app.add_subcommand("evaluate", "tune thresholds on dev, report test metrics");
  add_common(ev);
  ev->add_option("--data", data_dir, "preprocess output directory")->required();
  ev->add_option("--dev", dev_scores, "dev score file")->required();
  ev->add_option("--test", test_scores, "test score file")->required();
  ev->add_option("--out", out_path, "report file")->required();
  ev->add_flag("--force", force, "evaluate despite a config hash mismatch");
  ev->callback(
      [&] { rc = cmd_evaluate(make_cfg(), data_dir, dev_scores, test_scores, out_path, force); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return rc;
}

}  // namespace entype
