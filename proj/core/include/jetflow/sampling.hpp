#pragma once

// Seeded jets inside sampling boxes.

#include <vector>

#include "jetflow/jet.hpp"
#include "jetflow/numdiff.hpp"
#include "jetflow/rng.hpp"

namespace jetflow {

/// Base coordinates uniform in the boxes, jet entries uniform in
/// [-v_scale, v_scale]. Both boxes must be bounded with sizes p and n.
JetPoint sample_jet(Rng& rng, const Box& t_box, const Box& x_box, double v_scale = 1.0);

std::vector<JetPoint> sample_jets(Rng& rng, int count, const Box& t_box, const Box& x_box, double v_scale = 1.0);

/// The same interval for every coordinate.
Box uniform_box(int dim, double lo, double hi);

}  // namespace jetflow
