#include "entype/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>

#include "entype/errors.hpp"
#include "entype/text.hpp"

namespace entype {

std::size_t TypeInventory::at(const std::string& t) const {
  auto it = index.find(t);
  if (it == index.end()) throw IndexError("type '" + t + "' not in inventory");
  return it->second;
}

namespace {

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open: " + path);
  return in;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write: " + path);
  return out;
}

bool is_punct(char c) { return std::ispunct(static_cast<unsigned char>(c)) != 0; }

std::string digits_to_seven(const std::string& tok) {
  std::string out = tok;
  for (char& c : out)
    if (c >= '0' && c <= '9') c = '7';
  return out;
}

bool is_url_or_email(const std::string& tok) {
  auto starts = [&](const char* p) {
    std::size_t n = std::strlen(p);
    if (tok.size() < n) return false;
    for (std::size_t i = 0; i < n; ++i)
      if (std::tolower(static_cast<unsigned char>(tok[i])) != p[i]) return false;
    return true;
  };
  if (starts("http://") || starts("https://") || starts("www.")) return true;
  auto at = tok.find('@');
  return at != std::string::npos && at > 0 && tok.find('.', at) != std::string::npos;
}

// "(hello)," -> "(", "hello", ")", ","
std::vector<std::string> split_edge_punct(const std::string& tok) {
  std::size_t b = 0, e = tok.size();
  while (b < e && is_punct(tok[b])) ++b;
  while (e > b && is_punct(tok[e - 1])) --e;
  if (b == 0 && e == tok.size()) return {tok};
  std::vector<std::string> out;
  for (std::size_t i = 0; i < b; ++i) out.push_back(std::string(1, tok[i]));
  if (e > b) out.push_back(tok.substr(b, e - b));
  for (std::size_t i = e; i < tok.size(); ++i) out.push_back(std::string(1, tok[i]));
  return out;
}

}  // namespace

Catalog load_catalog(const std::string& path) {
  auto in = open_in(path);
  Catalog cat;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto where = [&] { return path + ":" + std::to_string(lineno); };
    auto cols = split(line, '\t');
    if (cols.size() != 4 && cols.size() != 5)
      throw FormatError(where() + ": expected 4 or 5 tab-separated columns, got " +
                        std::to_string(cols.size()));
    EntityRecord r;
    r.id = cols[0];
    r.name = cols[1];
    r.notable = cols[2];
    for (const auto& t : split(cols[3], ','))
      if (!t.empty()) r.types.push_back(t);
    if (r.id.empty()) throw FormatError(where() + ": empty entity id");
    if (r.types.empty()) throw FormatError(where() + ": entity has no types");
    if (std::find(r.types.begin(), r.types.end(), r.notable) == r.types.end())
      throw FormatError(where() + ": notable type '" + r.notable + "' not among the entity's types");
    if (cols.size() == 5)
      r.freq = static_cast<std::size_t>(parse_int(cols[4], where() + " freq"));
    if (!cat.by_id.emplace(r.id, cat.entities.size()).second)
      throw FormatError(where() + ": duplicate entity id '" + r.id + "'");
    cat.entities.push_back(std::move(r));
  }
  return cat;
}

void save_catalog(const Catalog& c, const std::string& path) {
  auto out = open_out(path);
  for (const auto& e : c.entities) {
    out << e.id << '\t' << e.name << '\t' << e.notable << '\t';
    for (std::size_t i = 0; i < e.types.size(); ++i) out << (i ? "," : "") << e.types[i];
    out << '\t' << e.freq << '\n';
  }
  if (!out) throw IoError("write failed: " + path);
}

TypeInventory load_inventory(const std::string& path) {
  auto in = open_in(path);
  TypeInventory inv;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string t(trim(line));
    if (t.empty()) continue;
    if (!inv.index.emplace(t, inv.types.size()).second)
      throw FormatError(path + ":" + std::to_string(lineno) + ": duplicate type '" + t + "'");
    inv.types.push_back(t);
  }
  if (inv.types.empty()) throw FormatError(path + ": empty type inventory");
  return inv;
}

void save_inventory(const TypeInventory& t, const std::string& path) {
  auto out = open_out(path);
  for (const auto& ty : t.types) out << ty << '\n';
  if (!out) throw IoError("write failed: " + path);
}

std::vector<Sentence> load_corpus(const std::string& path) {
  auto in = open_in(path);
  std::vector<Sentence> corpus;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto where = [&] { return path + ":" + std::to_string(lineno); };
    auto tab = line.find('\t');
    Sentence s;
    s.tokens = split_ws(tab == std::string::npos ? line : line.substr(0, tab));
    if (s.tokens.empty()) throw FormatError(where() + ": sentence has no tokens");
    if (tab != std::string::npos) {
      for (const auto& m : split(line.substr(tab + 1), ';')) {
        if (m.empty()) continue;
        auto f = split(m, ',');
        if (f.size() != 3) throw FormatError(where() + ": mention must be id,start,end: '" + m + "'");
        Mention men;
        men.entity = f[0];
        men.start = static_cast<std::size_t>(parse_int(f[1], where() + " mention start"));
        men.end = static_cast<std::size_t>(parse_int(f[2], where() + " mention end"));
        if (men.entity.empty()) throw FormatError(where() + ": empty mention entity id");
        if (men.start >= men.end || men.end > s.tokens.size())
          throw FormatError(where() + ": mention span [" + f[1] + "," + f[2] +
                            ") out of range for " + std::to_string(s.tokens.size()) + " tokens");
        s.mentions.push_back(std::move(men));
      }
    }
    corpus.push_back(std::move(s));
  }
  return corpus;
}

void save_corpus(const std::vector<Sentence>& corpus, const std::string& path) {
  auto out = open_out(path);
  for (const auto& s : corpus) {
    for (std::size_t i = 0; i < s.tokens.size(); ++i) out << (i ? " " : "") << s.tokens[i];
    out << '\t';
    for (std::size_t i = 0; i < s.mentions.size(); ++i) {
      const auto& m = s.mentions[i];
      out << (i ? ";" : "") << m.entity << ',' << m.start << ',' << m.end;
    }
    out << '\n';
  }
  if (!out) throw IoError("write failed: " + path);
}

std::optional<Sentence> preprocess_sentence(const Sentence& s, PreprocessStats* stats) {
  if (stats) ++stats->sentences_in;
  std::vector<bool> in_mention(s.tokens.size(), false);
  for (const auto& m : s.mentions)
    for (std::size_t i = m.start; i < m.end; ++i) in_mention[i] = true;

  Sentence out;
  // old token index -> (first new index, count)
  std::vector<std::pair<std::size_t, std::size_t>> remap(s.tokens.size());
  for (std::size_t i = 0; i < s.tokens.size(); ++i) {
    std::size_t first = out.tokens.size();
    if (in_mention[i]) {
      out.tokens.push_back(digits_to_seven(s.tokens[i]));
    } else if (is_url_or_email(s.tokens[i])) {
      out.tokens.push_back(kUrlToken);
    } else {
      for (auto& piece : split_edge_punct(digits_to_seven(s.tokens[i])))
        out.tokens.push_back(std::move(piece));
    }
    remap[i] = {first, out.tokens.size() - first};
  }

  std::size_t chars = out.tokens.empty() ? 0 : out.tokens.size() - 1;
  for (const auto& t : out.tokens) chars += t.size();
  if (chars < 40) {
    if (stats) ++stats->dropped_short;
    return std::nullopt;
  }

  for (const auto& m : s.mentions) {
    Mention n = m;
    n.start = remap[m.start].first;
    n.end = remap[m.end - 1].first + remap[m.end - 1].second;
    out.mentions.push_back(std::move(n));
    if (stats) ++stats->mentions_kept;
  }
  return out;
}

std::vector<Sentence> preprocess_corpus(const std::vector<Sentence>& corpus, PreprocessStats* stats) {
  std::vector<Sentence> out;
  out.reserve(corpus.size());
  for (const auto& s : corpus)
    if (auto p = preprocess_sentence(s, stats)) out.push_back(std::move(*p));
  return out;
}

std::vector<Context> extract_contexts(const std::vector<Sentence>& corpus, const Catalog& catalog,
                                      const std::unordered_set<std::string>& train_ids,
                                      std::size_t context_size, ExtractStats* stats) {
  if (context_size == 0 || context_size % 2 != 0)
    throw ConfigError("context size must be positive and even");
  const std::size_t half = context_size / 2;
  std::vector<Context> out;

  for (const auto& sent : corpus) {
    for (std::size_t mi = 0; mi < sent.mentions.size(); ++mi) {
      const Mention& focus = sent.mentions[mi];
      if (stats) ++stats->mentions_seen;
      if (!catalog.find(focus.entity)) {
        if (stats) ++stats->unknown_entity;
        continue;
      }

      // Other train-entity mentions collapse to their notable-type token.
      // Spans overlapping the focus or an earlier accepted span stay surface.
      struct Span {
        std::size_t start, end;
        std::string token;
      };
      std::vector<Span> rep;
      for (std::size_t mj = 0; mj < sent.mentions.size(); ++mj) {
        if (mj == mi) continue;
        const Mention& m = sent.mentions[mj];
        if (m.start < focus.end && focus.start < m.end) continue;
        bool clash = false;
        for (const auto& r : rep)
          if (m.start < r.end && r.start < m.end) clash = true;
        if (clash) continue;
        if (!train_ids.count(m.entity)) continue;
        const EntityRecord* rec = catalog.find(m.entity);
        if (!rec) continue;
        rep.push_back({m.start, m.end, kTypeTokenPrefix + rec->notable});
      }
      std::sort(rep.begin(), rep.end(), [](const Span& a, const Span& b) { return a.start < b.start; });

      std::vector<std::string> units;
      std::size_t slot_pos = 0;
      std::size_t ri = 0, i = 0;
      while (i < sent.tokens.size()) {
        if (i == focus.start) {
          slot_pos = units.size();
          units.emplace_back(kSlotToken);
          i = focus.end;
          continue;
        }
        while (ri < rep.size() && rep[ri].start < i) ++ri;
        if (ri < rep.size() && rep[ri].start == i) {
          units.push_back(rep[ri].token);
          i = rep[ri].end;
          ++ri;
          continue;
        }
        units.push_back(sent.tokens[i]);
        ++i;
      }

      Context ctx;
      ctx.entity = focus.entity;
      ctx.tokens.reserve(context_size + 1);
      for (std::size_t k = 0; k <= 2 * half; ++k) {
        long long p = static_cast<long long>(slot_pos) - static_cast<long long>(half) +
                      static_cast<long long>(k);
        if (p < 0 || p >= static_cast<long long>(units.size()))
          ctx.tokens.emplace_back(kPadToken);
        else
          ctx.tokens.push_back(units[static_cast<std::size_t>(p)]);
      }
      out.push_back(std::move(ctx));
      if (stats) ++stats->contexts;
    }
  }
  return out;
}

std::vector<std::vector<std::string>> distant_labels(const std::vector<Context>& contexts,
                                                     const Catalog& catalog) {
  std::vector<std::vector<std::string>> labels;
  labels.reserve(contexts.size());
  for (const auto& c : contexts) {
    const EntityRecord* rec = catalog.find(c.entity);
    if (!rec) throw IndexError("context references entity '" + c.entity + "' not in catalog");
    labels.push_back(rec->types);
  }
  return labels;
}

SplitIds split_entities(const Catalog& catalog, double train_ratio, double dev_ratio,
                        double test_ratio, Rng rng) {
  if (std::abs(train_ratio + dev_ratio + test_ratio - 1.0) > 1e-9)
    throw ConfigError("split ratios must sum to 1");
  const std::size_t n = catalog.entities.size();
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  rng.shuffle(idx);
  auto cut = [&](double r) {
    return static_cast<std::size_t>(
        std::llround(r * static_cast<double>(n)));
  };
  std::size_t n1 = cut(train_ratio);
  std::size_t n2 = std::max(n1, std::min(n, cut(train_ratio + dev_ratio)));
  n1 = std::min(n1, n);

  auto collect = [&](std::size_t b, std::size_t e) {
    std::vector<std::size_t> part(idx.begin() + static_cast<long>(b),
                                  idx.begin() + static_cast<long>(e));
    std::sort(part.begin(), part.end());
    std::vector<std::string> ids;
    ids.reserve(part.size());
    for (std::size_t k : part) ids.push_back(catalog.entities[k].id);
    return ids;
  };
  SplitIds s;
  s.train = collect(0, n1);
  s.dev = collect(n1, n2);
  s.test = collect(n2, n);
  return s;
}

std::vector<std::size_t> sample_train_contexts(const std::vector<Context>& contexts,
                                               const Catalog& catalog, const TypeInventory& inv,
                                               std::size_t min_per_type, std::size_t cap_per_type,
                                               Rng rng, SampleStats* stats) {
  std::vector<std::vector<std::size_t>> pools(inv.size());
  for (std::size_t i = 0; i < contexts.size(); ++i) {
    const EntityRecord* rec = catalog.find(contexts[i].entity);
    if (!rec) throw IndexError("context references entity '" + contexts[i].entity + "' not in catalog");
    pools[inv.at(rec->notable)].push_back(i);
  }

  if (stats) {
    stats->pool.assign(inv.size(), 0);
    stats->sampled.assign(inv.size(), 0);
  }
  std::vector<std::size_t> selected;
  for (std::size_t t = 0; t < inv.size(); ++t) {
    auto& pool = pools[t];
    if (stats) stats->pool[t] = pool.size();
    if (pool.empty()) {
      if (stats) stats->warnings.push_back("type " + inv.types[t] + " has no training contexts");
      continue;
    }
    if (pool.size() <= cap_per_type) {
      if (pool.size() < min_per_type && stats)
        stats->warnings.push_back("type " + inv.types[t] + " pool " + std::to_string(pool.size()) +
                                  " below minimum " + std::to_string(min_per_type));
      selected.insert(selected.end(), pool.begin(), pool.end());
      if (stats) stats->sampled[t] = pool.size();
      continue;
    }
    // weighted sampling without replacement: key = u^(1/w), top-cap keys win
    std::vector<std::pair<double, std::size_t>> keys;
    keys.reserve(pool.size());
    for (std::size_t i : pool) {
      const EntityRecord* rec = catalog.find(contexts[i].entity);
      double w = 1.0 / static_cast<double>(rec->types.size());
      keys.emplace_back(std::pow(rng.uniform(), 1.0 / w), i);
    }
    std::sort(keys.begin(), keys.end(), [](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first > b.first;
      return a.second < b.second;
    });
    keys.resize(cap_per_type);
    for (const auto& [k, i] : keys) selected.push_back(i);
    if (stats) stats->sampled[t] = cap_per_type;
  }
  std::sort(selected.begin(), selected.end());
  return selected;
}

std::vector<std::size_t> sample_eval_contexts(const std::vector<Context>& contexts,
                                              std::size_t bag_size, Rng rng) {
  // Entities drawn in first-appearance order so the rng stream is stable.
  std::vector<std::string> order;
  std::unordered_map<std::string, std::vector<std::size_t>> by_ent;
  for (std::size_t i = 0; i < contexts.size(); ++i) {
    auto [it, fresh] = by_ent.try_emplace(contexts[i].entity);
    if (fresh) order.push_back(contexts[i].entity);
    it->second.push_back(i);
  }
  std::vector<std::size_t> keep;
  keep.reserve(contexts.size());
  for (const auto& e : order) {
    std::vector<std::size_t>& idx = by_ent[e];
    if (idx.size() > bag_size) {
      for (std::size_t i = 0; i < bag_size; ++i) {
        std::size_t j = i + static_cast<std::size_t>(rng.below(idx.size() - i));
        std::swap(idx[i], idx[j]);
      }
      idx.resize(bag_size);
    }
    keep.insert(keep.end(), idx.begin(), idx.end());
  }
  std::sort(keep.begin(), keep.end());
  return keep;
}

void save_context_dump(const std::string& path, const std::vector<Context>& contexts,
                       const std::vector<std::vector<std::string>>& labels,
                       const std::string& config_hash) {
  if (contexts.size() != labels.size())
    throw ShapeError("context dump: " + std::to_string(contexts.size()) + " contexts vs " +
                     std::to_string(labels.size()) + " label rows");
  auto out = open_out(path);
  out << "# config_hash=" << config_hash << '\n';
  for (std::size_t i = 0; i < contexts.size(); ++i) {
    out << contexts[i].entity << '\t';
    for (std::size_t j = 0; j < labels[i].size(); ++j) out << (j ? "," : "") << labels[i][j];
    out << '\t';
    for (std::size_t j = 0; j < contexts[i].tokens.size(); ++j)
      out << (j ? " " : "") << contexts[i].tokens[j];
    out << '\n';
  }
  if (!out) throw IoError("write failed: " + path);
}

ContextDump load_context_dump(const std::string& path) {
  auto in = open_in(path);
  ContextDump dump;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    auto cols = split(line, '\t');
    if (cols.size() != 3)
      throw FormatError(path + ":" + std::to_string(lineno) + ": expected 3 columns, got " +
                        std::to_string(cols.size()));
    Context c;
    c.entity = cols[0];
    c.tokens = split_ws(cols[2]);
    if (c.entity.empty() || c.tokens.empty())
      throw FormatError(path + ":" + std::to_string(lineno) + ": empty entity or token list");
    std::vector<std::string> labs;
    for (const auto& l : split(cols[1], ','))
      if (!l.empty()) labs.push_back(l);
    dump.contexts.push_back(std::move(c));
    dump.labels.push_back(std::move(labs));
  }
  return dump;
}

void save_split(const std::string& path, const std::vector<std::string>& ids,
                const std::string& config_hash) {
  auto out = open_out(path);
  out << "# config_hash=" << config_hash << '\n';
  for (const auto& id : ids) out << id << '\n';
  if (!out) throw IoError("write failed: " + path);
}

std::vector<std::string> load_split(const std::string& path) {
  auto in = open_in(path);
  std::vector<std::string> ids;
  std::string line;
  while (std::getline(in, line)) {
    std::string t(trim(line));
    if (t.empty() || t[0] == '#') continue;
    ids.push_back(t);
  }
  return ids;
}

std::vector<Bag> group_bags(const ContextDump& dump) {
  std::vector<Bag> bags;
  std::unordered_map<std::string, std::size_t> pos;
  for (std::size_t i = 0; i < dump.contexts.size(); ++i) {
    const std::string& e = dump.contexts[i].entity;
    auto [it, fresh] = pos.emplace(e, bags.size());
    if (fresh) {
      Bag b;
      b.entity = e;
      b.labels = dump.labels[i];
      bags.push_back(std::move(b));
    }
    bags[it->second].context_idx.push_back(i);
  }
  return bags;
}

}  // namespace entype
