#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace treedp {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

// Positions are 0-based offsets into a local vector; global variable
// indices (VariableIndexSet) are 1-based.
using Positions = std::vector<Index>;

inline Vector gather(const Vector& x, const Positions& pos) {
  Vector out(static_cast<Index>(pos.size()));
  for (size_t k = 0; k < pos.size(); ++k) out(static_cast<Index>(k)) = x(pos[k]);
  return out;
}

inline Matrix gather_columns(const Matrix& A, const Positions& pos) {
  Matrix out(A.rows(), static_cast<Index>(pos.size()));
  for (size_t k = 0; k < pos.size(); ++k) out.col(static_cast<Index>(k)) = A.col(pos[k]);
  return out;
}

inline double inf_norm(const Vector& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

}  // namespace treedp
