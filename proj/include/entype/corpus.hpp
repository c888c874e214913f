#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "entype/rng.hpp"

namespace entype {

inline constexpr const char* kPadToken = "PAD";
inline constexpr const char* kSlotToken = "SLOT";
inline constexpr const char* kUrlToken = "HTTP";
inline constexpr const char* kTypeTokenPrefix = "TYPE_";

struct EntityRecord {
  std::string id, name, notable;
  std::vector<std::string> types;  // gold set, notable included
  std::size_t freq = 0;            // corpus mention count; 0 when unknown
};

struct Catalog {
  std::vector<EntityRecord> entities;
  std::unordered_map<std::string, std::size_t> by_id;

  const EntityRecord* find(const std::string& id) const {
    auto it = by_id.find(id);
    return it == by_id.end() ? nullptr : &entities[it->second];
  }
};

struct TypeInventory {
  std::vector<std::string> types;
  std::unordered_map<std::string, std::size_t> index;

  std::size_t at(const std::string& t) const;
  std::size_t size() const { return types.size(); }
};

// Token-index span [start, end) into Sentence::tokens.
struct Mention {
  std::string entity;
  std::size_t start = 0, end = 0;
};

struct Sentence {
  std::vector<std::string> tokens;
  std::vector<Mention> mentions;
};

// One mention window: s/2 tokens, SLOT, s/2 tokens; PAD beyond sentence ends.
struct Context {
  std::string entity;
  std::vector<std::string> tokens;
};

Catalog load_catalog(const std::string& path);
void save_catalog(const Catalog& c, const std::string& path);
TypeInventory load_inventory(const std::string& path);
void save_inventory(const TypeInventory& t, const std::string& path);
std::vector<Sentence> load_corpus(const std::string& path);
void save_corpus(const std::vector<Sentence>& corpus, const std::string& path);

struct PreprocessStats {
  std::size_t sentences_in = 0;
  std::size_t dropped_short = 0;
  std::size_t mentions_kept = 0;
};

// Cleaning: digits to '7' everywhere; URL/email tokens collapse to HTTP;
// leading/trailing punctuation split off as single-char tokens (mention
// tokens are exempt from URL collapse and splitting so spans stay intact);
// sentences whose cleaned text is shorter than 40 chars are dropped.
// Applying it twice equals applying it once.
std::optional<Sentence> preprocess_sentence(const Sentence& s, PreprocessStats* stats = nullptr);
std::vector<Sentence> preprocess_corpus(const std::vector<Sentence>& corpus,
                                        PreprocessStats* stats = nullptr);

struct ExtractStats {
  std::size_t mentions_seen = 0;
  std::size_t unknown_entity = 0;  // mention ids missing from the catalog
  std::size_t contexts = 0;
};

// Window of context_size/2 token units on each side of each mention. Other
// mentions of train entities inside the sentence are collapsed to one
// TYPE_<notable> token before the window is cut; non-train mentions keep
// their surface tokens.
std::vector<Context> extract_contexts(const std::vector<Sentence>& corpus, const Catalog& catalog,
                                      const std::unordered_set<std::string>& train_ids,
                                      std::size_t context_size, ExtractStats* stats = nullptr);

// Distant supervision: a context inherits the full gold set of its source
// entity. Unknown entities were already skipped at extraction.
std::vector<std::vector<std::string>> distant_labels(const std::vector<Context>& contexts,
                                                     const Catalog& catalog);

struct SplitIds {
  std::vector<std::string> train, dev, test;
};

// Shuffle once, cut at rounded cumulative boundaries, emit in catalog order.
SplitIds split_entities(const Catalog& catalog, double train_ratio, double dev_ratio,
                        double test_ratio, Rng rng);

struct SampleStats {
  // type -> (pool size, sampled size); inventory order
  std::vector<std::size_t> pool, sampled;
  std::vector<std::string> warnings;
};

// Per-type pools keyed by the source entity's notable type. Pools at or
// under the cap are taken whole (a warning notes pools under min_per_type);
// larger pools are downsampled without replacement with weight 1/|gold| per
// context, favoring entities with fewer types.
std::vector<std::size_t> sample_train_contexts(const std::vector<Context>& contexts,
                                               const Catalog& catalog, const TypeInventory& inv,
                                               std::size_t min_per_type, std::size_t cap_per_type,
                                               Rng rng, SampleStats* stats = nullptr);

// Uniform without replacement, at most bag_size per entity, original order.
std::vector<std::size_t> sample_eval_contexts(const std::vector<Context>& contexts,
                                              std::size_t bag_size, Rng rng);

// Context dump TSV: entity <TAB> comma-joined labels <TAB> space-joined
// tokens, with a `# config_hash=` header line.
struct ContextDump {
  std::vector<Context> contexts;
  std::vector<std::vector<std::string>> labels;
};

void save_context_dump(const std::string& path, const std::vector<Context>& contexts,
                       const std::vector<std::vector<std::string>>& labels,
                       const std::string& config_hash);
ContextDump load_context_dump(const std::string& path);

void save_split(const std::string& path, const std::vector<std::string>& ids,
                const std::string& config_hash);
std::vector<std::string> load_split(const std::string& path);

// Contexts of one entity, grouped in first-appearance order.
struct Bag {
  std::string entity;
  std::vector<std::size_t> context_idx;
  std::vector<std::string> labels;
};

std::vector<Bag> group_bags(const ContextDump& dump);

}  // namespace entype
