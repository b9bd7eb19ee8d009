#pragma once

#include <random>
#include <string>

#include "platoon/config.hpp"
#include "platoon/model.hpp"

namespace testutil {

using platoon::Matrix;
using platoon::Vector;

inline Matrix random_matrix(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c) {
  std::normal_distribution<double> z;
  Matrix M(r, c);
  for (Eigen::Index j = 0; j < c; ++j)
    for (Eigen::Index i = 0; i < r; ++i) M(i, j) = z(rng);
  return M;
}

inline Matrix random_pd(std::mt19937_64& rng, Eigen::Index n) {
  const Matrix G = random_matrix(rng, n, n);
  return G * G.transpose() + 0.1 * Matrix::Identity(n, n);
}

inline double max_abs(const Matrix& M) { return M.size() ? M.cwiseAbs().maxCoeff() : 0.0; }

inline std::string config_path(const std::string& name) {
  return std::string(PLATOON_CONFIG_DIR) + "/" + name;
}

inline platoon::Problem default_problem() {
  return platoon::build_problem(platoon::default_run_config());
}

}  // namespace testutil
