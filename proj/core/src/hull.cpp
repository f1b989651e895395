#include "treedp/errors.hpp"
#include "treedp/polyhedra.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

namespace treedp {

namespace {

Index affine_rank(const std::vector<Vector>& pts, double tol) {
  const Index d = pts.front().size();
  Matrix D(static_cast<Index>(pts.size()) - 1, d);
  for (size_t k = 1; k < pts.size(); ++k) D.row(static_cast<Index>(k) - 1) = (pts[k] - pts[0]).transpose();
  if (D.rows() == 0) return 0;
  Eigen::JacobiSVD<Matrix> svd(D);
  const Vector& s = svd.singularValues();
  Index r = 0;
  for (Index k = 0; k < s.size(); ++k)
    if (s(k) > tol) ++r;
  return r;
}

double cross2(const Vector& o, const Vector& a, const Vector& b) {
  return (a(0) - o(0)) * (b(1) - o(1)) - (a(1) - o(1)) * (b(0) - o(0));
}

HPolyhedron hull_2d(const std::vector<Vector>& pts, double tol) {
  size_t start = 0;
  for (size_t k = 1; k < pts.size(); ++k) {
    if (pts[k](1) < pts[start](1) || (pts[k](1) == pts[start](1) && pts[k](0) < pts[start](0))) start = k;
  }
  std::vector<size_t> ring;
  size_t cur = start;
  do {
    ring.push_back(cur);
    size_t next = cur == 0 ? 1 : 0;
    for (size_t k = 0; k < pts.size(); ++k) {
      if (k == cur) continue;
      const double c = cross2(pts[cur], pts[next], pts[k]);
      const bool farther = (pts[k] - pts[cur]).squaredNorm() > (pts[next] - pts[cur]).squaredNorm();
      if (c < -tol || (std::abs(c) <= tol && farther)) next = k;
    }
    cur = next;
    if (ring.size() > pts.size()) throw NumericalFailure("gift wrapping did not close");
  } while (cur != start);

  HPolyhedron P(2);
  for (size_t k = 0; k < ring.size(); ++k) {
    const Vector& a = pts[ring[k]];
    const Vector& b = pts[ring[(k + 1) % ring.size()]];
    const Vector e = b - a;
    if (e.norm() <= tol) continue;
    Vector n(2);
    n << e(1), -e(0);
    n.normalize();
    double rhs = n.dot(a);
    for (const auto& p : pts) rhs = std::max(rhs, n.dot(p));
    P.add_inequality(n, rhs);
  }
  return P;
}

HPolyhedron hull_nd(const std::vector<Vector>& pts, double tol) {
  const Index d = pts.front().size();
  const Index n = static_cast<Index>(pts.size());
  double combos = 1.0;
  for (Index k = 0; k < d; ++k) combos *= static_cast<double>(n - k) / static_cast<double>(k + 1);
  if (combos * static_cast<double>(n) > 5e8)
    throw Unsupported(fmt::format("facet enumeration over {} points in {} dimensions is too large", n, d));

  HPolyhedron P(d);
  std::vector<Index> idx(static_cast<size_t>(d));
  for (Index k = 0; k < d; ++k) idx[static_cast<size_t>(k)] = k;
  while (true) {
    Matrix D(d - 1, d);
    for (Index k = 1; k < d; ++k) D.row(k - 1) = (pts[static_cast<size_t>(idx[static_cast<size_t>(k)])] - pts[static_cast<size_t>(idx[0])]).transpose();
    Eigen::JacobiSVD<Matrix> svd(D, Eigen::ComputeFullV);
    const Vector& s = svd.singularValues();
    if (s.size() == d - 1 && s(d - 2) > tol) {
      const Vector nrm = svd.matrixV().col(d - 1);
      const Vector& p0 = pts[static_cast<size_t>(idx[0])];
      double lo = 0.0, hi = 0.0;
      for (const auto& p : pts) {
        const double v = nrm.dot(p - p0);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      if (hi <= tol) P.add_inequality(nrm, nrm.dot(p0) + hi);
      else if (lo >= -tol) P.add_inequality(-nrm, -nrm.dot(p0) - lo);
    }
    Index k = d - 1;
    while (k >= 0 && idx[static_cast<size_t>(k)] == n - d + k) --k;
    if (k < 0) break;
    ++idx[static_cast<size_t>(k)];
    for (Index j = k + 1; j < d; ++j) idx[static_cast<size_t>(j)] = idx[static_cast<size_t>(j - 1)] + 1;
  }
  HPolyhedron R = normalize_rows(P, 1e-9);
  // merged rows keep the loosest rhs so that every input point stays inside
  for (Index i = 0; i < R.num_in(); ++i)
    for (const auto& p : pts) R.bin(i) = std::max(R.bin(i), R.Ain.row(i).dot(p));
  return R;
}

}  // namespace

HPolyhedron convex_hull(const std::vector<Vector>& points, double tol) {
  if (points.empty()) throw DegenerateHull("no points");
  const Index d = points.front().size();
  for (const auto& p : points)
    if (p.size() != d) throw DimensionMismatch("hull points have different dimensions");
  if (d == 0) throw DegenerateHull("zero-dimensional points");
  double spread = 0.0;
  for (const auto& p : points) spread = std::max(spread, (p - points.front()).cwiseAbs().maxCoeff());
  const double stol = tol * std::max(1.0, spread);
  if (static_cast<Index>(points.size()) < d + 1 || affine_rank(points, stol) < d)
    throw DegenerateHull(fmt::format("{} points do not span {} dimensions", points.size(), d));
  if (d == 1) {
    double lo = points.front()(0), hi = lo;
    for (const auto& p : points) {
      lo = std::min(lo, p(0));
      hi = std::max(hi, p(0));
    }
    return HPolyhedron::box(Vector::Constant(1, lo), Vector::Constant(1, hi));
  }
  if (d == 2) return hull_2d(points, stol);
  return hull_nd(points, stol);
}

}  // namespace treedp
