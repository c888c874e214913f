#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "entype/tensor.hpp"

namespace entype {

// Per-run training record. loss_units counts what the objective iterated
// (entities or contexts or bags, depending on the trainer), update_events
// counts optimizer applications; both exist so tests can pin the training
// granularity, not just the outcome.
struct TrainLog {
  std::vector<double> epoch_loss;      // mean loss per unit, one entry per completed epoch
  std::vector<double> dev_micro;       // one entry per completed epoch
  std::size_t best_epoch = 0;          // index into dev_micro
  double best_dev = -1.0;
  std::vector<double> dev_thresholds;  // tuned at the best epoch
  std::size_t update_events = 0;
  std::size_t loss_units = 0;
  bool stopped_early = false;
};

template <class T>
std::vector<Mat<T>> snapshot_values(const std::vector<std::pair<std::string, Param<T>*>>& ps) {
  std::vector<Mat<T>> out;
  out.reserve(ps.size());
  for (const auto& [name, p] : ps) out.push_back(p->v);
  return out;
}

template <class T>
void restore_values(const std::vector<std::pair<std::string, Param<T>*>>& ps,
                    const std::vector<Mat<T>>& snap) {
  for (std::size_t i = 0; i < ps.size(); ++i) ps[i].second->v = snap[i];
}

}  // namespace entype
