#pragma once

#include "wlr/leverage.hpp"
#include "wlr/linalg.hpp"

namespace wlr {

/// ||L - L0||_F / ||L0||_F. Throws kUndefinedReference when L0 == 0.
double relative_error(const DenseMatrix& recovered, const DenseMatrix& reference);

/// (n / k) * max_i mu_i, in [1, n/k].
double coherence(const LeverageProfile& p, Index n);
inline double coherence(const LeverageProfile& p) { return coherence(p, p.size()); }

}  // namespace wlr
