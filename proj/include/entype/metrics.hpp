#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "entype/corpus.hpp"
#include "entype/score_matrix.hpp"
#include "entype/tensor.hpp"

namespace entype {

// Rows align with matrix entities, columns with inventory types, 1 = gold.
Mat<std::uint8_t> build_gold(const TypeScoreMatrix& m, const Catalog& catalog,
                             const TypeInventory& inv);

struct ThresholdResult {
  std::vector<double> thresholds;      // per type; assignment is score > t
  std::vector<std::string> warnings;   // types with no positives, etc.
};

// Per-type threshold maximizing that type's F1 on the given (dev) scores.
// Candidates are 0, 1, and midpoints between consecutive distinct scores;
// F1 ties resolve to the smallest threshold. A type with no positive rows
// gets threshold 1 (never assigns) and a warning.
ThresholdResult tune_thresholds(const Mat<double>& scores, const Mat<std::uint8_t>& gold);

Mat<std::uint8_t> assign(const Mat<double>& scores, const std::vector<double>& thresholds);

// Ranking metrics break score ties by lower index, everywhere.
double p_at_1(const Mat<double>& scores, const Mat<std::uint8_t>& gold);
double bep(const Mat<double>& scores, const Mat<std::uint8_t>& gold);
double strict_accuracy(const Mat<std::uint8_t>& assigned, const Mat<std::uint8_t>& gold);
double micro_f1(const Mat<std::uint8_t>& assigned, const Mat<std::uint8_t>& gold);
double entity_macro_f1(const Mat<std::uint8_t>& assigned, const Mat<std::uint8_t>& gold);
// Mean average precision over types with at least one positive entity.
double map_score(const Mat<double>& scores, const Mat<std::uint8_t>& gold);
// Precision in the top min(k, #entities) per type, averaged over types with
// at least one positive entity.
double label_p_at_k(const Mat<double>& scores, const Mat<std::uint8_t>& gold, std::size_t k);
// Per-type F1 averaged over non-vacuous types (some gold or some assignment).
double type_macro_f1(const Mat<std::uint8_t>& assigned, const Mat<std::uint8_t>& gold);

struct MetricBundle {
  std::size_t n_entities = 0, n_types = 0;
  double p_at_1 = 0, bep = 0, strict_accuracy = 0, micro_f1 = 0, entity_macro_f1 = 0;
  double map = 0, p_at_k = 0, type_macro_f1 = 0;
};

// All metrics on a row-subset of the matrix (full type set).
MetricBundle entity_bundle(const Mat<double>& scores, const Mat<std::uint8_t>& gold,
                           const Mat<std::uint8_t>& assigned, const std::vector<std::size_t>& rows,
                           std::size_t k);

struct LabelBundle {
  std::size_t n_types = 0;
  double map = 0, p_at_k = 0, type_macro_f1 = 0;
};

// Label-ranking metrics on a column subset (all entities).
LabelBundle label_bundle(const Mat<double>& scores, const Mat<std::uint8_t>& gold,
                         const Mat<std::uint8_t>& assigned, const std::vector<std::size_t>& cols,
                         std::size_t k);

// Entity frequency partitions: head freq > head_above, tail freq < tail_below.
struct EntityPartition {
  std::vector<std::size_t> head, tail;
};
EntityPartition partition_entities(const TypeScoreMatrix& m, const Catalog& catalog,
                                   std::size_t head_above, std::size_t tail_below);

// Type frequency = number of train entities carrying the type.
std::vector<std::size_t> type_train_counts(const Catalog& catalog,
                                           const std::vector<std::string>& train_ids,
                                           const TypeInventory& inv);
struct TypePartition {
  std::vector<std::size_t> head, tail;
};
TypePartition partition_types(const std::vector<std::size_t>& counts, std::size_t head_above,
                              std::size_t tail_below);

// Known: the entity name shares at least one exact word with some train
// entity's name; everything else is unknown.
struct KnownPartition {
  std::vector<std::size_t> known, unknown;
};
KnownPartition partition_known(const TypeScoreMatrix& m, const Catalog& catalog,
                               const std::vector<std::string>& train_ids);

}  // namespace entype
