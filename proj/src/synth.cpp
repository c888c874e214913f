#include "entype/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "entype/errors.hpp"
#include "entype/rng.hpp"
#include "entype/text.hpp"

namespace entype {

namespace {

const char* kStems[] = {"bel", "cor", "dun", "fal", "gor"};
constexpr std::size_t kStemCount = 5;

// minimal base 26, letters only
std::string letters(std::size_t i) {
  std::string s;
  do {
    s.push_back(static_cast<char>('a' + i % 26));
    i /= 26;
  } while (i != 0);
  std::reverse(s.begin(), s.end());
  return s;
}

// fixed width base 26; the per-type morph and indicative suffix
std::string suffix3(std::size_t i) {
  std::string s(3, 'a');
  s[2] = static_cast<char>('a' + i % 26);
  s[1] = static_cast<char>('a' + (i / 26) % 26);
  s[0] = static_cast<char>('a' + (i / 676) % 26);
  return s;
}

std::vector<double> unit_gaussian(Rng& rng, std::size_t dim) {
  std::vector<double> v(dim);
  double n2 = 0;
  for (auto& x : v) {
    x = rng.gaussian();
    n2 += x * x;
  }
  double n = std::sqrt(n2);
  if (n < 1e-12) {
    v.assign(dim, 0.0);
    v[0] = 1.0;
    return v;
  }
  for (auto& x : v) x /= n;
  return v;
}

// sigma is the expected noise norm; the per-coordinate spread shrinks with
// dim so the signal-to-noise ratio does not decay in high dimensions
std::vector<double> around(const std::vector<double>& c, double sigma, Rng& rng) {
  std::vector<double> v = c;
  const double per_coord = sigma / std::sqrt(static_cast<double>(c.size()));
  for (auto& x : v) x += per_coord * rng.gaussian();
  return v;
}

void validate(const RunConfig::Synth& s) {
  if (s.types == 0 || s.entities == 0) throw ConfigError("synth: types and entities must be positive");
  if (s.dim == 0) throw ConfigError("synth: dim must be positive");
  if (s.gold_min == 0 || s.gold_min > s.gold_max)
    throw ConfigError("synth: gold_min must be in [1, gold_max]");
  if (s.gold_max > s.types) throw ConfigError("synth: gold_max exceeds the type count");
  if (s.contexts_min == 0 || s.contexts_min > s.contexts_max)
    throw ConfigError("synth: contexts_min must be in [1, contexts_max]");
  if (s.noise < 0 || s.noise > 1) throw ConfigError("synth: noise must be a fraction");
  if (s.strength < 0 || s.strength > 1) throw ConfigError("synth: strength must be a fraction");
  if (s.name_signal < 0 || s.name_signal > 1)
    throw ConfigError("synth: name_signal must be a fraction");
  if (s.zero_embedding_tail_fraction < 0 || s.zero_embedding_tail_fraction > 1)
    throw ConfigError("synth: zero_embedding_tail_fraction must be a fraction");
  if (s.window == 0) throw ConfigError("synth: window must be positive");
  if (s.indicative_per_type == 0) throw ConfigError("synth: indicative_per_type must be positive");
}

}  // namespace

SynthResult generate_synth(const RunConfig::Synth& s) {
  validate(s);
  SynthResult r;
  Rng root(s.seed);
  Rng crng = root.derive("synth-centroids");
  Rng wrng = root.derive("synth-wordvecs");
  Rng grng = root.derive("synth-gold");
  Rng erng = root.derive("synth-entities");
  Rng srng = root.derive("synth-sentences");

  for (std::size_t t = 0; t < s.types; ++t) {
    const std::string name = "ty" + suffix3(t);
    r.inventory.index[name] = t;
    r.inventory.types.push_back(name);
  }
  std::vector<std::vector<double>> centroids;
  centroids.reserve(s.types);
  for (std::size_t t = 0; t < s.types; ++t) centroids.push_back(unit_gaussian(crng, s.dim));

  // context vocabulary: indicative tokens cluster at their type's centroid,
  // morph name words likewise, filler floats free
  std::vector<std::vector<std::string>> indicative(s.types);
  for (std::size_t t = 0; t < s.types; ++t)
    for (std::size_t j = 0; j < s.indicative_per_type; ++j) {
      const std::string tok = "ind" + suffix3(t) + letters(j);
      indicative[t].push_back(tok);
      r.word_vecs.add(tok, around(centroids[t], s.sigma, wrng));
    }
  for (std::size_t t = 0; t < s.types; ++t)
    for (std::size_t k = 0; k < kStemCount; ++k)
      r.word_vecs.add(kStems[k] + suffix3(t), around(centroids[t], s.sigma, wrng));
  for (std::size_t t = 0; t < s.types; ++t)
    r.word_vecs.add(kTypeTokenPrefix + r.inventory.types[t], around(centroids[t], s.sigma, wrng));
  std::vector<std::string> filler;
  filler.reserve(s.vocab_fill);
  for (std::size_t j = 0; j < s.vocab_fill; ++j) {
    filler.push_back("filler" + letters(j));
    r.word_vecs.add(filler.back(), unit_gaussian(wrng, s.dim));
  }

  // entities: gold set, name, frequency
  struct Draft {
    std::vector<std::size_t> gold;
    std::vector<std::size_t> ctx_gold;  // types the contexts advertise
    std::size_t freq = 0;
  };
  std::vector<Draft> drafts(s.entities);
  for (std::size_t i = 0; i < s.entities; ++i) {
    Draft& d = drafts[i];
    const std::size_t k = s.gold_min + grng.below(s.gold_max - s.gold_min + 1);
    while (d.gold.size() < k) {
      std::size_t t = grng.below(s.types);
      if (std::find(d.gold.begin(), d.gold.end(), t) == d.gold.end()) d.gold.push_back(t);
    }
    d.freq = s.contexts_min + grng.below(s.contexts_max - s.contexts_min + 1);

    EntityRecord rec;
    rec.id = "E" + std::to_string(i);
    rec.name = "ent" + letters(i);
    std::vector<std::size_t> name_types;
    if (s.split_signal) {
      // lower half of the inventory is signaled only in names, upper half
      // only in contexts
      for (auto t : d.gold)
        (t < s.types / 2 ? name_types : d.ctx_gold).push_back(t);
    } else {
      d.ctx_gold = d.gold;
      for (auto t : d.gold)
        if (grng.uniform() < s.name_signal) name_types.push_back(t);
    }
    for (auto t : name_types)
      rec.name += " " + (kStems[grng.below(kStemCount)] + suffix3(t));
    rec.notable = r.inventory.types[d.gold[0]];
    for (auto t : d.gold) rec.types.push_back(r.inventory.types[t]);
    rec.freq = d.freq;
    r.catalog.by_id[rec.id] = r.catalog.entities.size();
    r.catalog.entities.push_back(std::move(rec));
  }

  // entity vectors: normalized centroid mix plus noise; the lowest frequency
  // tail can be zeroed to starve the entity level of information
  for (std::size_t i = 0; i < s.entities; ++i) {
    std::vector<double> v(s.dim, 0.0);
    for (auto t : drafts[i].gold)
      for (std::size_t j = 0; j < s.dim; ++j) v[j] += centroids[t][j];
    double n = 0;
    for (double x : v) n += x * x;
    n = std::sqrt(n);
    if (n < 1e-12) v = centroids[drafts[i].gold[0]];
    else
      for (auto& x : v) x /= n;
    r.entity_vecs.add(r.catalog.entities[i].id, around(v, s.sigma, erng));
  }
  if (s.zero_embedding_tail_fraction > 0) {
    std::vector<std::size_t> order(s.entities);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return drafts[a].freq != drafts[b].freq ? drafts[a].freq < drafts[b].freq : a < b;
    });
    const auto n_zero = static_cast<std::size_t>(
        std::floor(s.zero_embedding_tail_fraction * static_cast<double>(s.entities)));
    for (std::size_t k = 0; k < n_zero; ++k) {
      const std::string& id = r.catalog.entities[order[k]].id;
      double* row = r.entity_vecs.vecs.row(r.entity_vecs.index.at(id));
      std::fill(row, row + s.dim, 0.0);
      r.zeroed_entities.push_back(id);
    }
  }

  // one mention per sentence; a signal sentence advertises every context-side
  // gold type, a noise sentence imitates one uniformly random topic with the
  // same token process, so single contexts look alike and only the count of
  // supporting contexts separates true types from stray ones
  for (std::size_t i = 0; i < s.entities; ++i) {
    const Draft& d = drafts[i];
    std::vector<std::string> name_tokens = split_ws(r.catalog.entities[i].name);
    for (std::size_t c = 0; c < d.freq; ++c) {
      const bool noise_draw = srng.uniform() < s.noise;
      const bool signal = !d.ctx_gold.empty() && !noise_draw;
      std::vector<std::size_t> topic;
      if (signal) topic = d.ctx_gold;
      else if (noise_draw) topic = {srng.below(s.types)};
      std::vector<std::string> side(2 * s.window);
      for (auto& tok : side) {
        if (!topic.empty() && srng.uniform() < s.strength) {
          std::size_t t = topic[srng.below(topic.size())];
          tok = indicative[t][srng.below(s.indicative_per_type)];
        } else {
          tok = filler[srng.below(filler.size())];
        }
      }
      if (!topic.empty()) {
        // required tokens land on distinct slots when the window allows
        std::vector<std::size_t> slots(side.size());
        std::iota(slots.begin(), slots.end(), 0);
        srng.shuffle(slots);
        for (std::size_t g = 0; g < topic.size() && g < slots.size(); ++g) {
          std::size_t t = topic[g];
          side[slots[g]] = indicative[t][srng.below(s.indicative_per_type)];
        }
      }
      if (signal) ++r.signal_sentences;
      else ++r.noise_sentences;
      Sentence sent;
      sent.tokens.assign(side.begin(), side.begin() + static_cast<std::ptrdiff_t>(s.window));
      const std::size_t start = sent.tokens.size();
      sent.tokens.insert(sent.tokens.end(), name_tokens.begin(), name_tokens.end());
      const std::size_t end = sent.tokens.size();
      sent.tokens.insert(sent.tokens.end(), side.begin() + static_cast<std::ptrdiff_t>(s.window),
                         side.end());
      sent.mentions.push_back({r.catalog.entities[i].id, start, end});
      r.corpus.push_back(std::move(sent));
    }
  }
  return r;
}

void write_synth(const SynthResult& r, const std::string& dir) {
  save_corpus(r.corpus, dir + "/corpus.tsv");
  save_catalog(r.catalog, dir + "/catalog.tsv");
  save_inventory(r.inventory, dir + "/inventory.txt");
  save_embeddings(r.word_vecs, dir + "/word_vecs.txt");
  save_embeddings(r.entity_vecs, dir + "/entity_vecs.txt");

  nlohmann::ordered_json m;
  m["types"] = r.inventory.size();
  m["entities"] = r.catalog.entities.size();
  m["sentences"] = r.corpus.size();
  m["signal_sentences"] = r.signal_sentences;
  m["noise_sentences"] = r.noise_sentences;
  m["word_vocab"] = r.word_vecs.size();
  m["dim"] = r.word_vecs.dim();
  m["zeroed_entities"] = r.zeroed_entities;
  std::ofstream out(dir + "/manifest.json");
  if (!out) throw IoError("cannot write '" + dir + "/manifest.json'");
  out << m.dump(2) << "\n";
}

}  // namespace entype
