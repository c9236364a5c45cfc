#pragma once

#include "scm/monotone_maps.hpp"
#include "scm/operators.hpp"

#include <optional>

namespace scm {

/// A VIP instance: find x in the common fixed point set of `stack` with
/// <F(x), v - x> >= 0 for every v in that set.
struct Problem {
    OperatorStack stack;
    MonotoneMap F;
    std::optional<Vector> known_solution;

    Eigen::Index dim() const { return stack.dim(); }
};

}  // namespace scm
