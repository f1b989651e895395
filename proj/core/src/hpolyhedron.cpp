#include "treedp/hpolyhedron.hpp"

#include "treedp/errors.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

namespace treedp {

HPolyhedron::HPolyhedron(Index d)
    : Aeq(0, d), beq(0), Ain(0, d), bin(0), dim(d) {}

HPolyhedron::HPolyhedron(Matrix A, Vector b)
    : Aeq(0, A.cols()), beq(0), Ain(std::move(A)), bin(std::move(b)), dim(Ain.cols()) {
  validate();
}

HPolyhedron::HPolyhedron(Matrix Ae, Vector be, Matrix A, Vector b)
    : Aeq(std::move(Ae)), beq(std::move(be)), Ain(std::move(A)), bin(std::move(b)) {
  dim = std::max(Aeq.cols(), Ain.cols());
  if (Aeq.rows() == 0) Aeq.resize(0, dim);
  if (Ain.rows() == 0) Ain.resize(0, dim);
  validate();
}

HPolyhedron HPolyhedron::box(const Vector& lower, const Vector& upper) {
  if (lower.size() != upper.size())
    throw DimensionMismatch("box bounds have different lengths");
  const Index n = lower.size();
  HPolyhedron P(n);
  P.Ain.resize(2 * n, n);
  P.Ain.setZero();
  P.bin.resize(2 * n);
  for (Index k = 0; k < n; ++k) {
    P.Ain(2 * k, k) = 1.0;
    P.bin(2 * k) = upper(k);
    P.Ain(2 * k + 1, k) = -1.0;
    P.bin(2 * k + 1) = -lower(k);
  }
  return P;
}

void HPolyhedron::validate() const {
  if (Aeq.cols() != dim || Ain.cols() != dim)
    throw DimensionMismatch(fmt::format("column counts ({}, {}) differ from dim {}", Aeq.cols(),
                                        Ain.cols(), dim));
  if (Aeq.rows() != beq.size())
    throw DimensionMismatch(fmt::format("Aeq has {} rows but beq has {}", Aeq.rows(), beq.size()));
  if (Ain.rows() != bin.size())
    throw DimensionMismatch(fmt::format("Ain has {} rows but bin has {}", Ain.rows(), bin.size()));
}

double HPolyhedron::max_violation(const Vector& x) const {
  if (x.size() != dim)
    throw DimensionMismatch(fmt::format("point has size {}, polyhedron dim {}", x.size(), dim));
  double v = 0.0;
  if (Aeq.rows() > 0) v = std::max(v, (Aeq * x - beq).cwiseAbs().maxCoeff());
  if (Ain.rows() > 0) v = std::max(v, (Ain * x - bin).maxCoeff());
  return v;
}

bool HPolyhedron::contains(const Vector& x, double tol) const { return max_violation(x) <= tol; }

void HPolyhedron::add_inequality(const Vector& a, double b) {
  if (a.size() != dim) throw DimensionMismatch("inequality row has wrong length");
  Ain.conservativeResize(Ain.rows() + 1, dim);
  Ain.row(Ain.rows() - 1) = a.transpose();
  bin.conservativeResize(bin.size() + 1);
  bin(bin.size() - 1) = b;
}

void HPolyhedron::add_equality(const Vector& a, double b) {
  if (a.size() != dim) throw DimensionMismatch("equality row has wrong length");
  Aeq.conservativeResize(Aeq.rows() + 1, dim);
  Aeq.row(Aeq.rows() - 1) = a.transpose();
  beq.conservativeResize(beq.size() + 1);
  beq(beq.size() - 1) = b;
}

HPolyhedron HPolyhedron::intersect(const HPolyhedron& o) const {
  if (o.dim != dim) throw DimensionMismatch("intersecting polyhedra of different dimension");
  HPolyhedron R(dim);
  R.Aeq.resize(Aeq.rows() + o.Aeq.rows(), dim);
  R.Aeq << Aeq, o.Aeq;
  R.beq.resize(beq.size() + o.beq.size());
  R.beq << beq, o.beq;
  R.Ain.resize(Ain.rows() + o.Ain.rows(), dim);
  R.Ain << Ain, o.Ain;
  R.bin.resize(bin.size() + o.bin.size());
  R.bin << bin, o.bin;
  return R;
}

HPolyhedron HPolyhedron::equalities_as_inequalities() const {
  HPolyhedron R(dim);
  R.Ain.resize(Ain.rows() + 2 * Aeq.rows(), dim);
  R.Ain << Ain, Aeq, -Aeq;
  R.bin.resize(bin.size() + 2 * beq.size());
  R.bin << bin, beq, -beq;
  return R;
}

HPolyhedron HPolyhedron::embed(Index new_dim, const Positions& cols) const {
  if (static_cast<Index>(cols.size()) != dim)
    throw DimensionMismatch("embedding needs one column per coordinate");
  HPolyhedron R(new_dim);
  R.Aeq = Matrix::Zero(Aeq.rows(), new_dim);
  R.Ain = Matrix::Zero(Ain.rows(), new_dim);
  for (Index k = 0; k < dim; ++k) {
    if (cols[k] < 0 || cols[k] >= new_dim) throw DimensionMismatch("embedding column out of range");
    R.Aeq.col(cols[k]) = Aeq.col(k);
    R.Ain.col(cols[k]) = Ain.col(k);
  }
  R.beq = beq;
  R.bin = bin;
  return R;
}

}  // namespace treedp
