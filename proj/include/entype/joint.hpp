#pragma once

#include <string>
#include <vector>

#include "entype/score_matrix.hpp"

namespace entype {

// Mean of aligned score matrices. Inputs must agree on entity and type order
// exactly; the error for a mismatch names the first offending position.
TypeScoreMatrix joint_scores(const std::vector<const TypeScoreMatrix*>& inputs);

}  // namespace entype
