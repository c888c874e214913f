#include "entype/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

#include "entype/text.hpp"

namespace entype {

std::string to_string(ModelKind k) {
  switch (k) {
    case ModelKind::gm: return "gm";
    case ModelKind::cm: return "cm";
    case ModelKind::mft: return "mft";
  }
  return "?";
}

std::string to_string(CmEncoder e) { return e == CmEncoder::ff ? "ff" : "cnn"; }

std::string to_string(MimlMode m) {
  switch (m) {
    case MimlMode::ds: return "ds";
    case MimlMode::max: return "max";
    case MimlMode::avg: return "avg";
    case MimlMode::max_avg: return "max_avg";
    case MimlMode::att: return "att";
  }
  return "?";
}

std::string to_string(Level l) {
  switch (l) {
    case Level::elr: return "elr";
    case Level::wwlr: return "wwlr";
    case Level::swlr: return "swlr";
    case Level::clr_ff: return "clr_ff";
    case Level::clr_cnn: return "clr_cnn";
    case Level::avg_des: return "avg_des";
    case Level::nsl: return "nsl";
    case Level::bow: return "bow";
  }
  return "?";
}

namespace {

std::size_t to_size(const std::string& v, const std::string& key) {
  long long n = parse_int(v, key);
  if (n < 0) throw ConfigError(key + ": must be nonnegative, got " + v);
  return static_cast<std::size_t>(n);
}

bool to_bool(const std::string& v, const std::string& key) {
  if (v == "true") return true;
  if (v == "false") return false;
  throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

std::vector<std::size_t> to_widths(const std::string& v, const std::string& key) {
  std::vector<std::size_t> out;
  auto dash = v.find('-');
  if (dash != std::string::npos && v.find(',') == std::string::npos) {
    std::size_t lo = to_size(v.substr(0, dash), key);
    std::size_t hi = to_size(v.substr(dash + 1), key);
    if (lo == 0 || hi < lo) throw ConfigError(key + ": bad range '" + v + "'");
    for (std::size_t w = lo; w <= hi; ++w) out.push_back(w);
    return out;
  }
  for (const auto& part : split(v, ',')) {
    std::size_t w = to_size(std::string(trim(part)), key);
    if (w == 0) throw ConfigError(key + ": width 0 is invalid");
    out.push_back(w);
  }
  if (out.empty()) throw ConfigError(key + ": empty width list");
  return out;
}

std::string widths_str(const std::vector<std::size_t>& w) {
  std::string s;
  for (std::size_t i = 0; i < w.size(); ++i) s += (i ? "," : "") + std::to_string(w[i]);
  return s;
}

const std::vector<Level> kLevelOrder = {Level::elr,     Level::wwlr,    Level::swlr, Level::clr_ff,
                                        Level::clr_cnn, Level::avg_des, Level::nsl,  Level::bow};

std::vector<Level> to_levels(const std::string& v, const std::string& key) {
  std::vector<Level> out;
  for (const auto& part : split(v, ',')) {
    std::string p(trim(part));
    bool found = false;
    for (Level l : kLevelOrder)
      if (to_string(l) == p) {
        if (std::find(out.begin(), out.end(), l) != out.end())
          throw ConfigError(key + ": duplicate level '" + p + "'");
        out.push_back(l);
        found = true;
        break;
      }
    if (!found) throw ConfigError(key + ": unknown level '" + p + "'");
  }
  if (out.empty()) throw ConfigError(key + ": empty level list");
  // concatenation order is fixed; normalize so equivalent configs hash equal
  std::sort(out.begin(), out.end(), [](Level a, Level b) {
    auto pos = [](Level l) {
      return std::find(kLevelOrder.begin(), kLevelOrder.end(), l) - kLevelOrder.begin();
    };
    return pos(a) < pos(b);
  });
  bool sparse = std::find(out.begin(), out.end(), Level::nsl) != out.end() ||
                std::find(out.begin(), out.end(), Level::bow) != out.end();
  if (sparse && out.size() > 1)
    throw ConfigError(key + ": nsl/bow are standalone feature sets and cannot be combined");
  return out;
}

std::string levels_str(const std::vector<Level>& ls) {
  std::string s;
  for (std::size_t i = 0; i < ls.size(); ++i) s += (i ? "," : "") + to_string(ls[i]);
  return s;
}

struct KeyEntry {
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

const std::map<std::string, KeyEntry>& registry() {
  static const std::map<std::string, KeyEntry> reg = [] {
    std::map<std::string, KeyEntry> r;
    auto str = [&r](const std::string& key, std::string RunConfig::* f) {
      r[key] = {[f](RunConfig& c, const std::string& v) { c.*f = v; },
                [f](const RunConfig& c) { return c.*f; }};
    };
    auto num = [&r](const std::string& key, std::size_t RunConfig::* f) {
      r[key] = {[f, key](RunConfig& c, const std::string& v) { c.*f = to_size(v, key); },
                [f](const RunConfig& c) { return std::to_string(c.*f); }};
    };
    auto dbl = [&r](const std::string& key, double RunConfig::* f) {
      r[key] = {[f, key](RunConfig& c, const std::string& v) { c.*f = parse_double(v, key); },
                [f](const RunConfig& c) { return format_g17(c.*f); }};
    };
    auto snum = [&r](const std::string& key, std::size_t RunConfig::Synth::* f) {
      r[key] = {[f, key](RunConfig& c, const std::string& v) { c.synth.*f = to_size(v, key); },
                [f](const RunConfig& c) { return std::to_string(c.synth.*f); }};
    };
    auto sdbl = [&r](const std::string& key, double RunConfig::Synth::* f) {
      r[key] = {[f, key](RunConfig& c, const std::string& v) { c.synth.*f = parse_double(v, key); },
                [f](const RunConfig& c) { return format_g17(c.synth.*f); }};
    };

    str("paths.corpus", &RunConfig::corpus);
    str("paths.catalog", &RunConfig::catalog);
    str("paths.inventory", &RunConfig::inventory);
    str("paths.word_embeddings", &RunConfig::word_embeddings);
    str("paths.entity_embeddings", &RunConfig::entity_embeddings);
    str("paths.type_embeddings", &RunConfig::type_embeddings);
    str("paths.descriptions", &RunConfig::descriptions);
    str("paths.subword_embeddings", &RunConfig::subword_embeddings);

    r["model.kind"] = {[](RunConfig& c, const std::string& v) {
                         if (v == "gm") c.kind = ModelKind::gm;
                         else if (v == "cm") c.kind = ModelKind::cm;
                         else if (v == "mft") c.kind = ModelKind::mft;
                         else throw ConfigError("model.kind: expected gm, cm or mft, got '" + v + "'");
                       },
                       [](const RunConfig& c) { return to_string(c.kind); }};
    r["model.levels"] = {[](RunConfig& c, const std::string& v) { c.levels = to_levels(v, "model.levels"); },
                         [](const RunConfig& c) { return levels_str(c.levels); }};
    num("model.hidden", &RunConfig::hidden);
    num("model.char_dim", &RunConfig::char_dim);
    r["model.clr_widths"] = {
        [](RunConfig& c, const std::string& v) { c.clr_widths = to_widths(v, "model.clr_widths"); },
        [](const RunConfig& c) { return widths_str(c.clr_widths); }};
    num("model.clr_filters", &RunConfig::clr_filters);
    num("model.name_len", &RunConfig::name_len);
    r["model.encoder"] = {[](RunConfig& c, const std::string& v) {
                            if (v == "ff") c.encoder = CmEncoder::ff;
                            else if (v == "cnn") c.encoder = CmEncoder::cnn;
                            else throw ConfigError("model.encoder: expected ff or cnn, got '" + v + "'");
                          },
                          [](const RunConfig& c) { return to_string(c.encoder); }};
    r["model.miml"] = {[](RunConfig& c, const std::string& v) {
                         if (v == "ds") c.miml = MimlMode::ds;
                         else if (v == "max") c.miml = MimlMode::max;
                         else if (v == "avg") c.miml = MimlMode::avg;
                         else if (v == "max_avg") c.miml = MimlMode::max_avg;
                         else if (v == "att") c.miml = MimlMode::att;
                         else throw ConfigError("model.miml: unknown mode '" + v + "'");
                       },
                       [](const RunConfig& c) { return to_string(c.miml); }};
    num("model.context_size", &RunConfig::context_size);
    r["model.cm_widths"] = {
        [](RunConfig& c, const std::string& v) { c.cm_widths = to_widths(v, "model.cm_widths"); },
        [](const RunConfig& c) { return widths_str(c.cm_widths); }};
    num("model.cm_filters", &RunConfig::cm_filters);
    num("model.cm_emb_dim", &RunConfig::cm_emb_dim);
    num("model.type_dim", &RunConfig::type_dim);
    r["model.missing_entity"] = {[](RunConfig& c, const std::string& v) {
                                   if (v == "zero") c.missing_entity_zero = true;
                                   else if (v == "error") c.missing_entity_zero = false;
                                   else throw ConfigError("model.missing_entity: expected zero or error");
                                 },
                                 [](const RunConfig& c) {
                                   return c.missing_entity_zero ? std::string("zero")
                                                                : std::string("error");
                                 }};

    dbl("train.lr", &RunConfig::lr);
    dbl("train.eps", &RunConfig::adagrad_eps);
    num("train.batch", &RunConfig::batch);
    num("train.epochs", &RunConfig::epochs);
    num("train.patience", &RunConfig::patience);
    r["train.seed"] = {[](RunConfig& c, const std::string& v) {
                         c.seed = static_cast<std::uint64_t>(parse_int(v, "train.seed"));
                       },
                       [](const RunConfig& c) { return std::to_string(c.seed); }};
    num("train.bag_cap", &RunConfig::bag_cap);
    r["train.precision"] = {[](RunConfig& c, const std::string& v) {
                              if (v == "f64") c.precision = Precision::f64;
                              else if (v == "f32") c.precision = Precision::f32;
                              else throw ConfigError("train.precision: expected f64 or f32");
                            },
                            [](const RunConfig& c) {
                              return c.precision == Precision::f64 ? std::string("f64")
                                                                   : std::string("f32");
                            }};
    r["train.kernels"] = {[](RunConfig& c, const std::string& v) {
                            if (v != "auto" && v != "scalar" && v != "avx2")
                              throw ConfigError("train.kernels: expected auto, scalar or avx2");
                            c.kernels = v;
                          },
                          [](const RunConfig& c) { return c.kernels; }};

    dbl("sampling.train_ratio", &RunConfig::train_ratio);
    dbl("sampling.dev_ratio", &RunConfig::dev_ratio);
    dbl("sampling.test_ratio", &RunConfig::test_ratio);
    num("sampling.min_per_type", &RunConfig::min_per_type);
    num("sampling.cap_per_type", &RunConfig::cap_per_type);
    num("sampling.dev_bag", &RunConfig::dev_bag);
    num("sampling.test_bag", &RunConfig::test_bag);

    num("eval.p_at_k", &RunConfig::p_at_k);
    num("eval.entity_head_above", &RunConfig::entity_head_above);
    num("eval.entity_tail_below", &RunConfig::entity_tail_below);
    num("eval.type_head_above", &RunConfig::type_head_above);
    num("eval.type_tail_below", &RunConfig::type_tail_below);
    num("eval.desc_top_k", &RunConfig::desc_top_k);

    snum("synth.types", &RunConfig::Synth::types);
    snum("synth.entities", &RunConfig::Synth::entities);
    snum("synth.contexts_min", &RunConfig::Synth::contexts_min);
    snum("synth.contexts_max", &RunConfig::Synth::contexts_max);
    sdbl("synth.noise", &RunConfig::Synth::noise);
    sdbl("synth.strength", &RunConfig::Synth::strength);
    sdbl("synth.name_signal", &RunConfig::Synth::name_signal);
    snum("synth.vocab_fill", &RunConfig::Synth::vocab_fill);
    snum("synth.indicative_per_type", &RunConfig::Synth::indicative_per_type);
    snum("synth.dim", &RunConfig::Synth::dim);
    r["synth.seed"] = {[](RunConfig& c, const std::string& v) {
                         c.synth.seed = static_cast<std::uint64_t>(parse_int(v, "synth.seed"));
                       },
                       [](const RunConfig& c) { return std::to_string(c.synth.seed); }};
    snum("synth.gold_min", &RunConfig::Synth::gold_min);
    snum("synth.gold_max", &RunConfig::Synth::gold_max);
    snum("synth.window", &RunConfig::Synth::window);
    r["synth.split_signal"] = {[](RunConfig& c, const std::string& v) {
                                 c.synth.split_signal = to_bool(v, "synth.split_signal");
                               },
                               [](const RunConfig& c) {
                                 return c.synth.split_signal ? std::string("true")
                                                             : std::string("false");
                               }};
    sdbl("synth.zero_embedding_tail_fraction", &RunConfig::Synth::zero_embedding_tail_fraction);
    sdbl("synth.sigma", &RunConfig::Synth::sigma);
    return r;
  }();
  return reg;
}

void validate(const RunConfig& c) {
  if (std::abs(c.train_ratio + c.dev_ratio + c.test_ratio - 1.0) > 1e-9)
    throw ConfigError("sampling ratios must sum to 1");
  if (c.context_size == 0 || c.context_size % 2 != 0)
    throw ConfigError("model.context_size must be a positive even number");
  if (c.name_len < 3) throw ConfigError("model.name_len must be at least 3");
  if (c.batch == 0) throw ConfigError("train.batch must be positive");
  if (!(c.lr > 0)) throw ConfigError("train.lr must be positive");
  if (c.hidden == 0) throw ConfigError("model.hidden must be positive");
  if (c.synth.gold_min == 0 || c.synth.gold_max < c.synth.gold_min)
    throw ConfigError("synth.gold_min/gold_max invalid");
  if (c.synth.contexts_max < c.synth.contexts_min)
    throw ConfigError("synth.contexts_min/contexts_max invalid");
  if (c.synth.noise < 0 || c.synth.noise > 1) throw ConfigError("synth.noise must be in [0,1]");
  if (c.p_at_k == 0) throw ConfigError("eval.p_at_k must be positive");
  for (std::size_t w : c.cm_widths)
    if (w > c.context_size / 2 + 1)
      throw ConfigError("model.cm_widths: width exceeds half-window plus padding");
}

}  // namespace

RunConfig parse_config(const std::string& text, const std::string& origin) {
  RunConfig cfg;
  std::string section;
  std::size_t lineno = 0;
  std::istringstream in(text);
  std::string line;
  std::map<std::string, bool> seen;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view s = trim(line);
    if (s.empty() || s.front() == '#') continue;
    auto where = [&] { return origin + ":" + std::to_string(lineno); };
    if (s.front() == '[') {
      if (s.back() != ']') throw ConfigError(where() + ": unterminated section header");
      section = std::string(s.substr(1, s.size() - 2));
      continue;
    }
    auto eq = s.find('=');
    if (eq == std::string_view::npos) throw ConfigError(where() + ": expected key = value");
    std::string key = std::string(trim(s.substr(0, eq)));
    std::string value = std::string(trim(s.substr(eq + 1)));
    if (key.empty()) throw ConfigError(where() + ": empty key");
    std::string full = section.empty() ? key : section + "." + key;
    auto it = registry().find(full);
    if (it == registry().end()) throw ConfigError(where() + ": unknown key '" + full + "'");
    if (seen[full]) throw ConfigError(where() + ": duplicate key '" + full + "'");
    seen[full] = true;
    try {
      it->second.set(cfg, value);
    } catch (const FormatError& e) {
      throw ConfigError(where() + ": " + e.what());
    } catch (const ConfigError& e) {
      throw ConfigError(where() + ": " + e.what());
    }
  }
  validate(cfg);
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path);
}

void apply_override(RunConfig& cfg, const std::string& spec) {
  auto eq = spec.find('=');
  if (eq == std::string::npos) throw ConfigError("--set expects section.key=value, got '" + spec + "'");
  std::string key = std::string(trim(spec.substr(0, eq)));
  std::string value = std::string(trim(spec.substr(eq + 1)));
  auto it = registry().find(key);
  if (it == registry().end()) throw ConfigError("--set: unknown key '" + key + "'");
  it->second.set(cfg, value);
  validate(cfg);
}

std::string RunConfig::canonical_dump() const {
  std::string out;
  for (const auto& [key, entry] : registry()) {
    out += key;
    out += '=';
    out += entry.get(*this);
    out += '\n';
  }
  return out;
}

std::string RunConfig::hash() const { return hex16(fnv1a64(canonical_dump())); }

}  // namespace entype
