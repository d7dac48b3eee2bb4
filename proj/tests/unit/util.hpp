#pragma once

#include <Eigen/Core>

#include "homcrb/liegroup.hpp"
#include "homcrb/random.hpp"

namespace homcrb::test {

// Random algebra coordinates with Euclidean norm `scale`.
inline Eigen::VectorXd random_coords(const Group& G, RandomStream& rng, double scale) {
  Eigen::VectorXd v = rng.normal_vector(G->algebra_dim());
  return scale * v / v.norm();
}

inline GroupElement random_element(const Group& G, RandomStream& rng, double scale = 1.0) {
  return exp(G, random_coords(G, rng, scale));
}

}  // namespace homcrb::test
