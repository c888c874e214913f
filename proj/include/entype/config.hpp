#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "entype/errors.hpp"

namespace entype {

enum class ModelKind { gm, cm, mft };
enum class CmEncoder { ff, cnn };
enum class MimlMode { ds, max, avg, max_avg, att };
enum class Precision { f64, f32 };

// Representation levels a global model can concatenate, in this fixed order.
enum class Level { elr, wwlr, swlr, clr_ff, clr_cnn, avg_des, nsl, bow };

std::string to_string(ModelKind k);
std::string to_string(CmEncoder e);
std::string to_string(MimlMode m);
std::string to_string(Level l);

struct RunConfig {
  // [paths]
  std::string corpus, catalog, inventory;
  std::string word_embeddings, entity_embeddings, type_embeddings, descriptions;
  std::string subword_embeddings;

  // [model]
  ModelKind kind = ModelKind::gm;
  std::vector<Level> levels = {Level::elr};
  std::size_t hidden = 400;
  std::size_t char_dim = 10;
  std::vector<std::size_t> clr_widths = {1, 2, 3, 4, 5, 6, 7};
  std::size_t clr_filters = 100;
  std::size_t name_len = 30;
  CmEncoder encoder = CmEncoder::cnn;
  MimlMode miml = MimlMode::ds;
  std::size_t context_size = 10;  // window tokens excluding the slot, even
  std::vector<std::size_t> cm_widths = {1, 2, 3, 4};
  std::size_t cm_filters = 300;
  std::size_t cm_emb_dim = 100;
  std::size_t type_dim = 100;
  bool missing_entity_zero = true;  // absent entity embedding: zeros vs error

  // [train]
  double lr = 0.01;
  double adagrad_eps = 1e-8;
  std::size_t batch = 16;
  std::size_t epochs = 100;
  std::size_t patience = 10;
  std::uint64_t seed = 1;
  std::size_t bag_cap = 100;
  Precision precision = Precision::f64;
  std::string kernels = "auto";  // auto | scalar | avx2

  // [sampling]
  double train_ratio = 0.5, dev_ratio = 0.2, test_ratio = 0.3;
  std::size_t min_per_type = 10000, cap_per_type = 20000;
  std::size_t dev_bag = 200, test_bag = 300;

  // [eval]
  std::size_t p_at_k = 50;
  std::size_t entity_head_above = 100;  // head: freq > this
  std::size_t entity_tail_below = 5;    // tail: freq < this
  std::size_t type_head_above = 3000;
  std::size_t type_tail_below = 200;
  std::size_t desc_top_k = 20;

  // [synth]
  struct Synth {
    std::size_t types = 20;
    std::size_t entities = 2000;
    std::size_t contexts_min = 30, contexts_max = 30;
    double noise = 0.2;        // fraction of contexts that imitate an unrelated topic
    double strength = 0.5;     // per-slot chance of an indicative token
    double name_signal = 0.9;  // per-gold-type chance the name carries a morph token
    std::size_t vocab_fill = 2000;
    std::size_t indicative_per_type = 5;
    std::size_t dim = 100;
    std::uint64_t seed = 13;
    std::size_t gold_min = 1, gold_max = 3;
    std::size_t window = 5;  // context tokens generated on each side
    bool split_signal = false;
    double zero_embedding_tail_fraction = 0.0;
    double sigma = 0.3;  // vector noise norm around the centroid or mix
  } synth;

  // 16-hex FNV-1a of the fully resolved key set; stamps every artifact.
  std::string hash() const;
  // Every known key with its final value, sorted; input to hash().
  std::string canonical_dump() const;
};

// Parse `key = value` lines under [section] headers. Unknown keys, duplicate
// keys, and malformed values all raise ConfigError with the line number.
RunConfig parse_config(const std::string& text, const std::string& origin);
RunConfig load_config(const std::string& path);
// Apply one "section.key=value" override (CLI --set).
void apply_override(RunConfig& cfg, const std::string& spec);

}  // namespace entype
