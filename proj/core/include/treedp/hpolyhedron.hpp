#pragma once

#include "treedp/common.hpp"

namespace treedp {

// {x in R^dim : Aeq x = beq, Ain x <= bin}
struct HPolyhedron {
  Matrix Aeq;
  Vector beq;
  Matrix Ain;
  Vector bin;
  Index dim = 0;

  HPolyhedron() = default;
  explicit HPolyhedron(Index dim);
  HPolyhedron(Matrix Ain, Vector bin);
  HPolyhedron(Matrix Aeq, Vector beq, Matrix Ain, Vector bin);

  static HPolyhedron box(const Vector& lower, const Vector& upper);

  Index num_eq() const { return Aeq.rows(); }
  Index num_in() const { return Ain.rows(); }
  bool has_equalities() const { return Aeq.rows() > 0; }

  // Throws DimensionMismatch on inconsistent shapes.
  void validate() const;

  double max_violation(const Vector& x) const;
  bool contains(const Vector& x, double tol = 1e-9) const;

  void add_inequality(const Vector& a, double b);
  void add_equality(const Vector& a, double b);

  HPolyhedron intersect(const HPolyhedron& other) const;
  HPolyhedron equalities_as_inequalities() const;

  // Lift into R^new_dim placing coordinate k at position cols[k].
  HPolyhedron embed(Index new_dim, const Positions& cols) const;
};

}  // namespace treedp
