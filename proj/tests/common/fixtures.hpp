#pragma once

// Shared parameter generators for unit and acceptance tests.

#include <cmath>
#include <cstdint>

#include "rgrst/model.hpp"
#include "rgrst/rng.hpp"

namespace rgrst::testing {

inline RgrstParams reference_point() { return RgrstParams::single(2.96, 0.81, 0.02); }

/// Coxian whose forward rates stay below the total rates.
inline CoxianParams random_coxian(int d, StreamRng& rng) {
  Eigen::VectorXd s(2 * d - 1);
  for (int i = 0; i < d; ++i) {
    s[2 * i] = -1.0 + 1.8 * rng.uniform();
    if (i + 1 < d) s[2 * i + 1] = s[2 * i] + std::log(0.1 + 0.85 * rng.uniform());
  }
  return {d, s};
}

/// Valid mixture with n_comp components of Coxian dimension d (d <= 0 draws
/// d in 1..3 per component).
inline RgrstParams random_params(std::uint64_t seed, int n_comp = 0, int d = 0) {
  StreamRng rng(seed, 0, 0x7e57);
  if (n_comp <= 0) n_comp = 1 + static_cast<int>(rng.below(3));
  RgrstParams p;
  double total = 0.0;
  for (int n = 0; n < n_comp; ++n) {
    const double w = 0.2 + rng.uniform();
    p.theta.push_back(w);
    total += w;
    p.lognormals.push_back({0.5 + 3.0 * rng.uniform(), 0.3 + 1.0 * rng.uniform()});
    const int dn = d > 0 ? d : 1 + static_cast<int>(rng.below(3));
    p.coxians.push_back(random_coxian(dn, rng));
  }
  for (auto& w : p.theta) w /= total;
  p.a = 0.3 + 1.5 * rng.uniform();
  p.gamma = 0.5 + 2.0 * rng.uniform();
  return p;
}

}  // namespace rgrst::testing
