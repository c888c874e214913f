#include "entype/joint.hpp"

#include "entype/errors.hpp"

namespace entype {

namespace {

void check_aligned(const std::vector<std::string>& ref, const std::vector<std::string>& got,
                   std::size_t input, const char* what) {
  if (ref.size() != got.size())
    throw ShapeError("joint: input " + std::to_string(input) + " has " +
                     std::to_string(got.size()) + " " + what + ", input 0 has " +
                     std::to_string(ref.size()));
  for (std::size_t i = 0; i < ref.size(); ++i)
    if (ref[i] != got[i])
      throw ShapeError("joint: input " + std::to_string(input) + " " + what + " " +
                       std::to_string(i) + " is '" + got[i] + "', input 0 has '" + ref[i] + "'");
}

}  // namespace

TypeScoreMatrix joint_scores(const std::vector<const TypeScoreMatrix*>& inputs) {
  if (inputs.empty()) throw ConfigError("joint: no score matrices given");
  const TypeScoreMatrix& first = *inputs[0];
  for (std::size_t k = 1; k < inputs.size(); ++k) {
    check_aligned(first.entities, inputs[k]->entities, k, "entities");
    check_aligned(first.types, inputs[k]->types, k, "types");
  }
  TypeScoreMatrix out(first.entities, first.types);
  const double w = 1.0 / static_cast<double>(inputs.size());
  for (const auto* in : inputs)
    for (std::size_t i = 0; i < out.scores.size(); ++i) out.scores.a[i] += w * in->scores.a[i];
  return out;
}

}  // namespace entype
