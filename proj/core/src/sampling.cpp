#include "jetflow/sampling.hpp"

#include <stdexcept>

namespace jetflow {

JetPoint sample_jet(Rng& rng, const Box& t_box, const Box& x_box, double v_scale) {
  if (t_box.empty() || x_box.empty()) throw std::invalid_argument("sample_jet: sampling boxes must be bounded");
  const auto p = static_cast<Eigen::Index>(t_box.size());
  const auto n = static_cast<Eigen::Index>(x_box.size());
  JetPoint u{Eigen::VectorXd(p), Eigen::VectorXd(n), Eigen::MatrixXd(n, p)};
  for (Eigen::Index a = 0; a < p; ++a) u.t(a) = rng.uniform(t_box[static_cast<std::size_t>(a)].lo, t_box[static_cast<std::size_t>(a)].hi);
  for (Eigen::Index i = 0; i < n; ++i) u.x(i) = rng.uniform(x_box[static_cast<std::size_t>(i)].lo, x_box[static_cast<std::size_t>(i)].hi);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index a = 0; a < p; ++a) u.v(i, a) = rng.uniform(-v_scale, v_scale);
  return u;
}

std::vector<JetPoint> sample_jets(Rng& rng, int count, const Box& t_box, const Box& x_box, double v_scale) {
  std::vector<JetPoint> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int k = 0; k < count; ++k) out.push_back(sample_jet(rng, t_box, x_box, v_scale));
  return out;
}

Box uniform_box(int dim, double lo, double hi) { return Box(static_cast<std::size_t>(dim), Interval{lo, hi}); }

}  // namespace jetflow
