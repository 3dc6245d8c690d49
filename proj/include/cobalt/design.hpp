#pragma once

#include <vector>

namespace cobalt {

/// One catalog/anchor index per categorical variable (group). The same
/// index vector is both the discrete search object and the physical
/// assignment handed to structural analysis.
using Design = std::vector<int>;

}  // namespace cobalt
