#pragma once

// Library of invertible product-form coordinate changes used by the
// verification suites. Every change carries closed-form inverse expressions.

#include <string>
#include <string_view>
#include <vector>

#include "jetflow/numdiff.hpp"
#include "jetflow/rng.hpp"

namespace jetflow::charts {

/// t~ = At t + at, x~ = Ax x + ax.
ChangeMap affine(std::string name, const Eigen::MatrixXd& At, const Eigen::VectorXd& at, const Eigen::MatrixXd& Ax,
                 const Eigen::VectorXd& ax, Box domain_t = {}, Box domain_x = {});

/// Random affine change with block condition numbers below 50.
ChangeMap random_affine(Rng& rng, int p, int n, std::string name, Box domain_t = {}, Box domain_x = {});

/// Random nonlinear change: per-coordinate exponential stretch, then a
/// triangular sin/cos shear of amplitude <= 0.1, then a random affine map.
/// The shear is strictly triangular, which makes the inverse explicit.
ChangeMap random_nonlinear(Rng& rng, int p, int n, std::string name, Box domain_t = {}, Box domain_x = {});

/// Alternates affine and nonlinear draws by index (even: nonlinear).
std::vector<ChangeMap> suite(Rng& rng, int p, int n, int count, const Box& domain_t, const Box& domain_x,
                             std::string_view prefix = "change");

/// Catalog keywords: identity, affine, nonlinear, time_scale (t~ = 2t).
ChangeMap named(std::string_view keyword, Rng& rng, int p, int n, std::string name, Box domain_t = {},
                Box domain_x = {});

}  // namespace jetflow::charts
