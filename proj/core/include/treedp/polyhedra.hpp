#pragma once

#include "treedp/hpolyhedron.hpp"
#include "treedp/index_set.hpp"

namespace treedp {

// x = T y + t0
struct AffineMap {
  Matrix T;
  Vector t0;

  Vector operator()(const Vector& y) const { return T * y + t0; }
};

struct ReducedPolyhedron {
  HPolyhedron reduced;
  AffineMap map;
  Positions free_coordinates;  // original coordinates used as reduced coordinates
};

struct ChebyshevBall {
  Vector center;
  double radius = 0.0;
};

struct PolyhedronTolerances {
  double redundancy = 1e-9;
  double dedup = 1e-12;
  double membership = 1e-8;
};

// Parametrizes {Aeq x = beq} by the free columns of its reduced row echelon form.
ReducedPolyhedron eliminate_equalities(const HPolyhedron& P);

// Exact orthogonal projection onto the coordinates in keep (1-based). Equality
// rows are eliminated by substitution first, then Fourier-Motzkin with
// redundancy removal after every eliminated variable.
HPolyhedron fourier_motzkin_project(const HPolyhedron& P, const VariableIndexSet& keep,
                                    const PolyhedronTolerances& tol = {});

HPolyhedron remove_redundancy(const HPolyhedron& P, double tol = 1e-9);

bool membership_oracle_project(const HPolyhedron& P, const VariableIndexSet& keep, const Vector& z,
                               double tol = 1e-8);

ChebyshevBall chebyshev_center(const HPolyhedron& P);

bool is_empty(const HPolyhedron& P);

// Unit-norm rows, zero rows dropped, near-duplicates merged keeping the smallest rhs.
HPolyhedron normalize_rows(const HPolyhedron& P, double dedup_tol = 1e-12);

HPolyhedron empty_polyhedron(Index dim);

struct BoundingBox {
  Vector lower;
  Vector upper;
};

// Coordinate-wise extent by 2*dim LPs; throws UnboundedSet or EmptyPolyhedron.
BoundingBox bounding_box(const HPolyhedron& P);

// Vertices of a bounded 2-D polygon in counter-clockwise order.
std::vector<Vector> polygon_vertices(const HPolyhedron& P, double tol = 1e-9);

}  // namespace treedp

namespace treedp {

// H-representation of conv(points); 1-D interval, 2-D gift wrapping, brute-force
// facet enumeration above. Throws DegenerateHull for affinely dependent input.
HPolyhedron convex_hull(const std::vector<Vector>& points, double tol = 1e-9);

}  // namespace treedp
