#include "entype/metrics.hpp"

#include <algorithm>

#include "entype/errors.hpp"
#include "entype/text.hpp"

namespace entype {

namespace {

std::vector<std::size_t> rank_desc(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    if (v[a] != v[b]) return v[a] > v[b];
    return a < b;
  });
  return idx;
}

double f1_from_counts(std::size_t tp, std::size_t fp, std::size_t fn) {
  double p = (tp + fp) ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
  double r = (tp + fn) ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
  return (p + r > 0) ? 2 * p * r / (p + r) : 0.0;
}

void check_same_shape(std::size_t ar, std::size_t ac, std::size_t br, std::size_t bc,
                      const char* what) {
  if (ar != br || ac != bc)
    throw ShapeError(std::string(what) + ": " + std::to_string(ar) + "x" + std::to_string(ac) +
                     " vs " + std::to_string(br) + "x" + std::to_string(bc));
}

}  // namespace

Mat<std::uint8_t> build_gold(const TypeScoreMatrix& m, const Catalog& catalog,
                             const TypeInventory& inv) {
  if (m.types != inv.types) throw ShapeError("score matrix types do not match the inventory");
  Mat<std::uint8_t> gold(m.entities.size(), inv.size());
  for (std::size_t i = 0; i < m.entities.size(); ++i) {
    const EntityRecord* rec = catalog.find(m.entities[i]);
    if (!rec) throw IndexError("entity '" + m.entities[i] + "' not in catalog");
    for (const auto& t : rec->types) gold.at(i, inv.at(t)) = 1;
  }
  return gold;
}

ThresholdResult tune_thresholds(const Mat<double>& scores, const Mat<std::uint8_t>& gold) {
  check_same_shape(scores.rows, scores.cols, gold.rows, gold.cols, "tune_thresholds");
  ThresholdResult res;
  res.thresholds.assign(scores.cols, 1.0);
  const std::size_t n = scores.rows;

  for (std::size_t t = 0; t < scores.cols; ++t) {
    std::size_t total_pos = 0;
    for (std::size_t i = 0; i < n; ++i) total_pos += gold.at(i, t);
    if (total_pos == 0) {
      res.warnings.push_back("type column " + std::to_string(t) +
                             " has no positive rows; threshold pinned to 1");
      continue;
    }

    std::vector<std::pair<double, std::uint8_t>> rows(n);
    for (std::size_t i = 0; i < n; ++i) rows[i] = {scores.at(i, t), gold.at(i, t)};
    std::sort(rows.begin(), rows.end(),
              [](const auto& a, const auto& b) { return a.first > b.first; });

    // distinct score groups, descending
    std::vector<double> val;
    std::vector<std::size_t> cum_tp, cum_n;
    std::size_t tp = 0, cnt = 0;
    for (std::size_t i = 0; i < n;) {
      std::size_t j = i;
      while (j < n && rows[j].first == rows[i].first) {
        tp += rows[j].second;
        ++cnt;
        ++j;
      }
      val.push_back(rows[i].first);
      cum_tp.push_back(tp);
      cum_n.push_back(cnt);
      i = j;
    }

    // candidates in ascending order so F1 ties keep the smallest threshold
    std::vector<double> cand;
    cand.push_back(0.0);
    for (std::size_t g = val.size(); g-- > 1;) cand.push_back((val[g] + val[g - 1]) / 2.0);
    cand.push_back(1.0);

    double best_f1 = -1.0, best_t = 1.0;
    for (double th : cand) {
      // groups with value > th form the assigned prefix
      std::size_t g = 0;
      while (g < val.size() && val[g] > th) ++g;
      std::size_t a_tp = g ? cum_tp[g - 1] : 0;
      std::size_t a_n = g ? cum_n[g - 1] : 0;
      double f1 = f1_from_counts(a_tp, a_n - a_tp, total_pos - a_tp);
      if (f1 > best_f1) {
        best_f1 = f1;
        best_t = th;
      }
    }
    res.thresholds[t] = best_t;
  }
  return res;
}

Mat<std::uint8_t> assign(const Mat<double>& scores, const std::vector<double>& thresholds) {
  if (thresholds.size() != scores.cols)
    throw ShapeError("assign: " + std::to_string(thresholds.size()) + " thresholds for " +
                     std::to_string(scores.cols) + " types");
  Mat<std::uint8_t> out(scores.rows, scores.cols);
  for (std::size_t i = 0; i < scores.rows; ++i)
    for (std::size_t j = 0; j < scores.cols; ++j)
      out.at(i, j) = scores.at(i, j) > thresholds[j] ? 1 : 0;
  return out;
}

double p_at_1(const Mat<double>& scores, const Mat<std::uint8_t>& gold) {
  check_same_shape(scores.rows, scores.cols, gold.rows, gold.cols, "p_at_1");
  if (scores.rows == 0) return 0.0;
  std::size_t hit = 0;
  for (std::size_t i = 0; i < scores.rows; ++i) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < scores.cols; ++j)
      if (scores.at(i, j) > scores.at(i, best)) best = j;
    hit += gold.at(i, best);
  }
  return static_cast<double>(hit) / static_cast<double>(scores.rows);
}

double bep(const Mat<double>& scores, const Mat<std::uint8_t>& gold) {
  check_same_shape(scores.rows, scores.cols, gold.rows, gold.cols, "bep");
  if (scores.rows == 0) return 0.0;
  double sum = 0;
  for (std::size_t i = 0; i < scores.rows; ++i) {
    std::size_t r = 0;
    for (std::size_t j = 0; j < scores.cols; ++j) r += gold.at(i, j);
    if (r == 0) continue;
    std::vector<double> row(scores.cols);
    for (std::size_t j = 0; j < scores.cols; ++j) row[j] = scores.at(i, j);
    auto order = rank_desc(row);
    std::size_t hits = 0;
    for (std::size_t p = 0; p < r; ++p) hits += gold.at(i, order[p]);
    sum += static_cast<double>(hits) / static_cast<double>(r);
  }
  return sum / static_cast<double>(scores.rows);
}

double strict_accuracy(const Mat<std::uint8_t>& assigned, const Mat<std::uint8_t>& gold) {
  check_same_shape(assigned.rows, assigned.cols, gold.rows, gold.cols, "strict_accuracy");
  if (assigned.rows == 0) return 0.0;
  std::size_t exact = 0;
  for (std::size_t i = 0; i < assigned.rows; ++i) {
    bool same = true;
    for (std::size_t j = 0; j < assigned.cols; ++j)
      if (assigned.at(i, j) != gold.at(i, j)) {
        same = false;
        break;
      }
    exact += same;
  }
  return static_cast<double>(exact) / static_cast<double>(assigned.rows);
}

double micro_f1(const Mat<std::uint8_t>& assigned, const Mat<std::uint8_t>& gold) {
  check_same_shape(assigned.rows, assigned.cols, gold.rows, gold.cols, "micro_f1");
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < assigned.rows; ++i)
    for (std::size_t j = 0; j < assigned.cols; ++j) {
      if (assigned.at(i, j) && gold.at(i, j)) ++tp;
      else if (assigned.at(i, j)) ++fp;
      else if (gold.at(i, j)) ++fn;
    }
  return f1_from_counts(tp, fp, fn);
}

double entity_macro_f1(const Mat<std::uint8_t>& assigned, const Mat<std::uint8_t>& gold) {
  check_same_shape(assigned.rows, assigned.cols, gold.rows, gold.cols, "entity_macro_f1");
  if (assigned.rows == 0) return 0.0;
  double sum = 0;
  for (std::size_t i = 0; i < assigned.rows; ++i) {
    std::size_t tp = 0, fp = 0, fn = 0;
    for (std::size_t j = 0; j < assigned.cols; ++j) {
      if (assigned.at(i, j) && gold.at(i, j)) ++tp;
      else if (assigned.at(i, j)) ++fp;
      else if (gold.at(i, j)) ++fn;
    }
    sum += f1_from_counts(tp, fp, fn);  // no assignments -> 0 for this entity
  }
  return sum / static_cast<double>(assigned.rows);
}

double map_score(const Mat<double>& scores, const Mat<std::uint8_t>& gold) {
  check_same_shape(scores.rows, scores.cols, gold.rows, gold.cols, "map");
  double sum = 0;
  std::size_t used = 0;
  std::vector<double> col(scores.rows);
  for (std::size_t t = 0; t < scores.cols; ++t) {
    std::size_t pos = 0;
    for (std::size_t i = 0; i < scores.rows; ++i) pos += gold.at(i, t);
    if (pos == 0) continue;  // undefined AP: type excluded
    for (std::size_t i = 0; i < scores.rows; ++i) col[i] = scores.at(i, t);
    auto order = rank_desc(col);
    double ap = 0;
    std::size_t hits = 0;
    for (std::size_t rank = 0; rank < order.size(); ++rank) {
      if (gold.at(order[rank], t)) {
        ++hits;
        ap += static_cast<double>(hits) / static_cast<double>(rank + 1);
      }
    }
    sum += ap / static_cast<double>(pos);
    ++used;
  }
  return used ? sum / static_cast<double>(used) : 0.0;
}

double label_p_at_k(const Mat<double>& scores, const Mat<std::uint8_t>& gold, std::size_t k) {
  check_same_shape(scores.rows, scores.cols, gold.rows, gold.cols, "label_p_at_k");
  if (k == 0) throw ConfigError("label_p_at_k: k must be positive");
  double sum = 0;
  std::size_t used = 0;
  std::vector<double> col(scores.rows);
  const std::size_t kk = std::min(k, scores.rows);
  if (kk == 0) return 0.0;
  for (std::size_t t = 0; t < scores.cols; ++t) {
    std::size_t pos = 0;
    for (std::size_t i = 0; i < scores.rows; ++i) pos += gold.at(i, t);
    if (pos == 0) continue;
    for (std::size_t i = 0; i < scores.rows; ++i) col[i] = scores.at(i, t);
    auto order = rank_desc(col);
    std::size_t hits = 0;
    for (std::size_t rank = 0; rank < kk; ++rank) hits += gold.at(order[rank], t);
    sum += static_cast<double>(hits) / static_cast<double>(kk);
    ++used;
  }
  return used ? sum / static_cast<double>(used) : 0.0;
}

double type_macro_f1(const Mat<std::uint8_t>& assigned, const Mat<std::uint8_t>& gold) {
  check_same_shape(assigned.rows, assigned.cols, gold.rows, gold.cols, "type_macro_f1");
  double sum = 0;
  std::size_t used = 0;
  for (std::size_t t = 0; t < assigned.cols; ++t) {
    std::size_t tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < assigned.rows; ++i) {
      if (assigned.at(i, t) && gold.at(i, t)) ++tp;
      else if (assigned.at(i, t)) ++fp;
      else if (gold.at(i, t)) ++fn;
    }
    if (tp + fp + fn == 0) continue;  // type untouched by this slice
    sum += f1_from_counts(tp, fp, fn);
    ++used;
  }
  return used ? sum / static_cast<double>(used) : 0.0;
}

namespace {

template <class T>
Mat<T> take_rows(const Mat<T>& m, const std::vector<std::size_t>& rows) {
  Mat<T> out(rows.size(), m.cols);
  for (std::size_t i = 0; i < rows.size(); ++i)
    std::copy(m.row(rows[i]), m.row(rows[i]) + m.cols, out.row(i));
  return out;
}

template <class T>
Mat<T> take_cols(const Mat<T>& m, const std::vector<std::size_t>& cols) {
  Mat<T> out(m.rows, cols.size());
  for (std::size_t i = 0; i < m.rows; ++i)
    for (std::size_t j = 0; j < cols.size(); ++j) out.at(i, j) = m.at(i, cols[j]);
  return out;
}

}  // namespace

MetricBundle entity_bundle(const Mat<double>& scores, const Mat<std::uint8_t>& gold,
                           const Mat<std::uint8_t>& assigned, const std::vector<std::size_t>& rows,
                           std::size_t k) {
  Mat<double> s = take_rows(scores, rows);
  Mat<std::uint8_t> g = take_rows(gold, rows);
  Mat<std::uint8_t> a = take_rows(assigned, rows);
  MetricBundle b;
  b.n_entities = rows.size();
  b.n_types = scores.cols;
  b.p_at_1 = p_at_1(s, g);
  b.bep = bep(s, g);
  b.strict_accuracy = strict_accuracy(a, g);
  b.micro_f1 = micro_f1(a, g);
  b.entity_macro_f1 = entity_macro_f1(a, g);
  b.map = map_score(s, g);
  b.p_at_k = label_p_at_k(s, g, k);
  b.type_macro_f1 = type_macro_f1(a, g);
  return b;
}

LabelBundle label_bundle(const Mat<double>& scores, const Mat<std::uint8_t>& gold,
                         const Mat<std::uint8_t>& assigned, const std::vector<std::size_t>& cols,
                         std::size_t k) {
  Mat<double> s = take_cols(scores, cols);
  Mat<std::uint8_t> g = take_cols(gold, cols);
  Mat<std::uint8_t> a = take_cols(assigned, cols);
  LabelBundle b;
  b.n_types = cols.size();
  b.map = map_score(s, g);
  b.p_at_k = label_p_at_k(s, g, k);
  b.type_macro_f1 = type_macro_f1(a, g);
  return b;
}

EntityPartition partition_entities(const TypeScoreMatrix& m, const Catalog& catalog,
                                   std::size_t head_above, std::size_t tail_below) {
  EntityPartition p;
  for (std::size_t i = 0; i < m.entities.size(); ++i) {
    const EntityRecord* rec = catalog.find(m.entities[i]);
    if (!rec) throw IndexError("entity '" + m.entities[i] + "' not in catalog");
    if (rec->freq > head_above) p.head.push_back(i);
    if (rec->freq < tail_below) p.tail.push_back(i);
  }
  return p;
}

std::vector<std::size_t> type_train_counts(const Catalog& catalog,
                                           const std::vector<std::string>& train_ids,
                                           const TypeInventory& inv) {
  std::vector<std::size_t> counts(inv.size(), 0);
  for (const auto& id : train_ids) {
    const EntityRecord* rec = catalog.find(id);
    if (!rec) throw IndexError("train id '" + id + "' not in catalog");
    for (const auto& t : rec->types) ++counts[inv.at(t)];
  }
  return counts;
}

TypePartition partition_types(const std::vector<std::size_t>& counts, std::size_t head_above,
                              std::size_t tail_below) {
  TypePartition p;
  for (std::size_t t = 0; t < counts.size(); ++t) {
    if (counts[t] > head_above) p.head.push_back(t);
    if (counts[t] < tail_below) p.tail.push_back(t);
  }
  return p;
}

KnownPartition partition_known(const TypeScoreMatrix& m, const Catalog& catalog,
                               const std::vector<std::string>& train_ids) {
  std::unordered_set<std::string> train_words;
  for (const auto& id : train_ids) {
    const EntityRecord* rec = catalog.find(id);
    if (!rec) throw IndexError("train id '" + id + "' not in catalog");
    for (const auto& w : split_ws(rec->name)) train_words.insert(w);
  }
  KnownPartition p;
  for (std::size_t i = 0; i < m.entities.size(); ++i) {
    const EntityRecord* rec = catalog.find(m.entities[i]);
    if (!rec) throw IndexError("entity '" + m.entities[i] + "' not in catalog");
    bool known = false;
    for (const auto& w : split_ws(rec->name))
      if (train_words.count(w)) {
        known = true;
        break;
      }
    (known ? p.known : p.unknown).push_back(i);
  }
  return p;
}

}  // namespace entype
