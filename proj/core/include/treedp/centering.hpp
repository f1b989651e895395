#pragma once

#include "treedp/hpolyhedron.hpp"

#include <optional>
#include <vector>

namespace treedp {

// {A u + c : ||u||_2 <= 1}
struct Ellipsoid {
  Matrix A;
  Vector c;

  Index dim() const { return c.size(); }
  void validate() const;
  double volume_log() const;  // log det A
};

struct Box {
  Vector lower;
  Vector upper;

  Index dim() const { return lower.size(); }
  void validate() const;
  HPolyhedron polyhedron() const;
  double volume() const;
};

struct EllipsoidFit {
  Ellipsoid ellipsoid;
  double max_row_certificate = 0.0;  // max_i ||A b_i|| + b_i'c - d_i
  Index newton_steps = 0;
  double barrier_gap = 0.0;
};

struct BoxFit {
  Box box;
  double max_row_certificate = 0.0;  // max_i sum(b_i+ u - b_i- l) - d_i
  Index newton_steps = 0;
};

struct MappedEllipsoid {
  Matrix factor;  // M A
  Vector center;  // M c
  Ellipsoid canonical;
};

EllipsoidFit max_volume_inscribed_ellipsoid(const HPolyhedron& P);
BoxFit inscribed_box(const HPolyhedron& P);
MappedEllipsoid linear_map_ellipsoid(const Ellipsoid& E, const Matrix& M);
bool ellipsoid_contains(const Ellipsoid& E, const Vector& x, double tol = 1e-9);

// max_i ||A b_i||_2 + b_i'c - d_i over the unit-normalized rows of P.
double ellipsoid_row_certificate(const Ellipsoid& E, const HPolyhedron& P);
double box_row_certificate(const Box& B, const HPolyhedron& P);

// Points c + A u with u on the unit circle (2-D) or sphere directions.
std::vector<Vector> ellipsoid_boundary(const Ellipsoid& E, Index n);

// A polytope contained in E (vertices on a shrunken boundary).
HPolyhedron ellipsoid_inner_polytope(const Ellipsoid& E);

}  // namespace treedp
