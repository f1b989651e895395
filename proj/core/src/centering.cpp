#include "treedp/centering.hpp"

#include "detail_log.hpp"
#include "treedp/errors.hpp"
#include "treedp/polyhedra.hpp"

#include <fmt/format.h>

#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <random>

namespace treedp {

void Ellipsoid::validate() const {
  if (A.rows() != A.cols() || A.rows() != c.size())
    throw DimensionMismatch(fmt::format("ellipsoid A is {}x{}, center has size {}", A.rows(), A.cols(), c.size()));
  if (c.size() == 0) return;
  if ((A - A.transpose()).cwiseAbs().maxCoeff() > 1e-10 * std::max(1.0, A.cwiseAbs().maxCoeff()))
    throw InvalidArgument("ellipsoid matrix is not symmetric");
  Eigen::SelfAdjointEigenSolver<Matrix> es(A, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() <= 0.0) throw InvalidArgument("ellipsoid matrix is not positive definite");
}

double Ellipsoid::volume_log() const {
  Eigen::LLT<Matrix> llt(A);
  return 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
}

void Box::validate() const {
  if (lower.size() != upper.size()) throw DimensionMismatch("box bounds have different lengths");
  if ((upper - lower).size() > 0 && (upper - lower).minCoeff() < 0.0)
    throw InvalidArgument("box lower bound exceeds upper bound");
}

HPolyhedron Box::polyhedron() const { return HPolyhedron::box(lower, upper); }

double Box::volume() const { return (upper - lower).prod(); }

namespace {

struct Model {
  double value;
  Vector grad;
  Matrix hess;
};

// Barrier-method driver: f(theta, t) returns the barrier model or nullopt
// outside the domain.
using BarrierFn = std::function<std::optional<Model>(const Vector&, double)>;

Index barrier_minimize(const BarrierFn& f, Vector& theta, double nu, double gap_tol, double& gap) {
  double t = 1.0;
  Index steps = 0;
  while (true) {
    for (int it = 0; it < 100; ++it) {
      const auto m = f(theta, t);
      if (!m) throw NumericalFailure("barrier iterate left the domain");
      Eigen::LDLT<Matrix> ldlt(m->hess);
      const Vector d = ldlt.solve(-m->grad);
      const double dec = -m->grad.dot(d);
      ++steps;
      if (!d.allFinite() || dec <= 1e-14 * std::max(1.0, std::abs(m->value))) break;
      double a = 1.0;
      bool ok = false;
      for (int ls = 0; ls < 60; ++ls, a *= 0.5) {
        const auto mn = f(theta + a * d, t);
        if (mn && mn->value <= m->value - 0.25 * a * dec) {
          theta += a * d;
          ok = true;
          break;
        }
      }
      if (!ok) break;
    }
    gap = nu / t;
    if (gap < gap_tol) return steps;
    t *= 10.0;
  }
}

struct SymBasis {
  Index d;
  std::vector<std::pair<Index, Index>> entries;

  explicit SymBasis(Index dim) : d(dim) {
    for (Index j = 0; j < d; ++j)
      for (Index i = j; i < d; ++i) entries.emplace_back(i, j);
  }
  Index size() const { return static_cast<Index>(entries.size()); }
  Matrix unpack(const Vector& v) const {
    Matrix A = Matrix::Zero(d, d);
    for (Index k = 0; k < size(); ++k) {
      const auto [i, j] = entries[static_cast<size_t>(k)];
      A(i, j) = v(k);
      A(j, i) = v(k);
    }
    return A;
  }
  Vector pack(const Matrix& A) const {
    Vector v(size());
    for (Index k = 0; k < size(); ++k) v(k) = A(entries[static_cast<size_t>(k)].first, entries[static_cast<size_t>(k)].second);
    return v;
  }
  // column k: E_k b
  Matrix apply(const Vector& b) const {
    Matrix M = Matrix::Zero(d, size());
    for (Index k = 0; k < size(); ++k) {
      const auto [i, j] = entries[static_cast<size_t>(k)];
      M(i, k) += b(j);
      if (i != j) M(j, k) += b(i);
    }
    return M;
  }
};

HPolyhedron prepare(const HPolyhedron& P, const char* who) {
  P.validate();
  if (P.has_equalities())
    throw InvalidArgument(fmt::format("{} expects an inequality-only polyhedron; eliminate equalities first", who));
  if (P.dim == 0) throw InvalidArgument(fmt::format("{} needs a positive dimension", who));
  return normalize_rows(P);
}

ChebyshevBall interior_ball(const HPolyhedron& N) {
  try {
    (void)bounding_box(N);
  } catch (const EmptyPolyhedron& e) {
    throw EmptyOrLowerDimensional(e.what());
  }
  ChebyshevBall ball;
  try {
    ball = chebyshev_center(N);
  } catch (const EmptyPolyhedron& e) {
    throw EmptyOrLowerDimensional(e.what());
  }
  const double scale = std::max(1.0, inf_norm(ball.center));
  if (ball.radius <= 1e-9 * scale)
    throw EmptyOrLowerDimensional(fmt::format("inscribed ball radius {:.3e}", ball.radius));
  return ball;
}

}  // namespace

double ellipsoid_row_certificate(const Ellipsoid& E, const HPolyhedron& P) {
  const HPolyhedron N = normalize_rows(P);
  double worst = -std::numeric_limits<double>::infinity();
  for (Index i = 0; i < N.num_in(); ++i) {
    const Vector b = N.Ain.row(i).transpose();
    worst = std::max(worst, (E.A * b).norm() + b.dot(E.c) - N.bin(i));
  }
  return worst;
}

double box_row_certificate(const Box& B, const HPolyhedron& P) {
  const HPolyhedron N = normalize_rows(P);
  double worst = -std::numeric_limits<double>::infinity();
  for (Index i = 0; i < N.num_in(); ++i) {
    const Vector a = N.Ain.row(i).transpose();
    worst = std::max(worst, a.cwiseMax(0.0).dot(B.upper) - (-a).cwiseMax(0.0).dot(B.lower) - N.bin(i));
  }
  return worst;
}

EllipsoidFit max_volume_inscribed_ellipsoid(const HPolyhedron& P) {
  HPolyhedron N;
  try {
    N = prepare(P, "max_volume_inscribed_ellipsoid");
  } catch (const EmptyPolyhedron& e) {
    throw EmptyOrLowerDimensional(e.what());
  }
  const ChebyshevBall ball = interior_ball(N);
  const Index d = N.dim;
  const Index m = N.num_in();
  const SymBasis S(d);
  const Index na = S.size();
  std::vector<Matrix> EB;
  for (Index i = 0; i < m; ++i) EB.push_back(S.apply(N.Ain.row(i).transpose()));

  const BarrierFn f = [&](const Vector& th, double t) -> std::optional<Model> {
    const Matrix A = S.unpack(th.head(na));
    const Vector c = th.tail(d);
    Eigen::LLT<Matrix> llt(A);
    if (llt.info() != Eigen::Success) return std::nullopt;
    const Matrix L = llt.matrixL();
    if (L.diagonal().minCoeff() <= 0.0) return std::nullopt;
    const Matrix Ainv = llt.solve(Matrix::Identity(d, d));
    Model mdl{-t * 2.0 * L.diagonal().array().log().sum(), Vector::Zero(na + d), Matrix::Zero(na + d, na + d)};
    std::vector<Matrix> AE(static_cast<size_t>(na));
    for (Index k = 0; k < na; ++k) {
      const auto [i, j] = S.entries[static_cast<size_t>(k)];
      Matrix E = Matrix::Zero(d, d);
      E(i, j) = 1.0;
      E(j, i) = 1.0;
      AE[static_cast<size_t>(k)] = Ainv * E;
      mdl.grad(k) = -t * AE[static_cast<size_t>(k)].trace();
    }
    for (Index k = 0; k < na; ++k)
      for (Index l = 0; l <= k; ++l) {
        const double h = t * (AE[static_cast<size_t>(k)] * AE[static_cast<size_t>(l)]).trace();
        mdl.hess(k, l) = h;
        mdl.hess(l, k) = h;
      }
    for (Index i = 0; i < m; ++i) {
      const Vector b = N.Ain.row(i).transpose();
      const Vector w = A * b;
      const double s = N.bin(i) - b.dot(c);
      const double psi = s * s - w.squaredNorm();
      if (!(s > 0.0) || !(psi > 0.0)) return std::nullopt;
      mdl.value -= std::log(psi);
      Vector dpsi(na + d);
      dpsi.head(na) = -2.0 * EB[static_cast<size_t>(i)].transpose() * w;
      dpsi.tail(d) = -2.0 * s * b;
      Matrix hpsi = Matrix::Zero(na + d, na + d);
      hpsi.topLeftCorner(na, na) = -2.0 * EB[static_cast<size_t>(i)].transpose() * EB[static_cast<size_t>(i)];
      hpsi.bottomRightCorner(d, d) = 2.0 * b * b.transpose();
      mdl.grad -= dpsi / psi;
      mdl.hess += dpsi * dpsi.transpose() / (psi * psi) - hpsi / psi;
    }
    return mdl;
  };

  Vector theta(na + d);
  theta.head(na) = S.pack(0.5 * ball.radius * Matrix::Identity(d, d));
  theta.tail(d) = ball.center;
  EllipsoidFit fit;
  fit.newton_steps = barrier_minimize(f, theta, 2.0 * static_cast<double>(m), 1e-10, fit.barrier_gap);
  fit.ellipsoid = {S.unpack(theta.head(na)), theta.tail(d)};
  fit.max_row_certificate = ellipsoid_row_certificate(fit.ellipsoid, N);
  log::debug("mve: {} Newton steps, certificate {:.3e}", fit.newton_steps, fit.max_row_certificate);
  return fit;
}

BoxFit inscribed_box(const HPolyhedron& P) {
  const HPolyhedron N = prepare(P, "inscribed_box");
  ChebyshevBall ball;
  try {
    ball = interior_ball(N);
  } catch (const EmptyOrLowerDimensional& e) {
    throw EmptyPolyhedron(e.what());
  }
  const Index d = N.dim;
  const Index m = N.num_in();
  const Matrix Ap = N.Ain.cwiseMax(0.0);
  const Matrix An = (-N.Ain).cwiseMax(0.0);

  // theta = (l, u)
  const BarrierFn f = [&](const Vector& th, double t) -> std::optional<Model> {
    const Vector l = th.head(d);
    const Vector u = th.tail(d);
    Model mdl{0.0, Vector::Zero(2 * d), Matrix::Zero(2 * d, 2 * d)};
    for (Index k = 0; k < d; ++k) {
      const double w = u(k) - l(k);
      if (!(w > 0.0)) return std::nullopt;
      mdl.value -= t * std::log(w);
      mdl.grad(k) += t / w;
      mdl.grad(d + k) -= t / w;
      const double h = t / (w * w);
      mdl.hess(k, k) += h;
      mdl.hess(d + k, d + k) += h;
      mdl.hess(k, d + k) -= h;
      mdl.hess(d + k, k) -= h;
    }
    for (Index i = 0; i < m; ++i) {
      const double g = N.bin(i) - Ap.row(i).dot(u) + An.row(i).dot(l);
      if (!(g > 0.0)) return std::nullopt;
      mdl.value -= std::log(g);
      Vector dg(2 * d);
      dg.head(d) = An.row(i).transpose();
      dg.tail(d) = -Ap.row(i).transpose();
      mdl.grad -= dg / g;
      mdl.hess += dg * dg.transpose() / (g * g);
    }
    return mdl;
  };

  const double h = ball.radius / (2.0 * std::sqrt(static_cast<double>(d)));
  Vector theta(2 * d);
  theta.head(d) = ball.center.array() - h;
  theta.tail(d) = ball.center.array() + h;
  BoxFit fit;
  double gap = 0.0;
  fit.newton_steps = barrier_minimize(f, theta, static_cast<double>(m), 1e-10, gap);
  fit.box = {theta.head(d), theta.tail(d)};
  fit.max_row_certificate = box_row_certificate(fit.box, N);
  return fit;
}

MappedEllipsoid linear_map_ellipsoid(const Ellipsoid& E, const Matrix& M) {
  E.validate();
  if (M.cols() != E.dim())
    throw DimensionMismatch(fmt::format("map has {} columns, ellipsoid dimension {}", M.cols(), E.dim()));
  MappedEllipsoid out;
  out.factor = M * E.A;
  out.center = M * E.c;
  const Matrix S = out.factor * out.factor.transpose();
  Eigen::SelfAdjointEigenSolver<Matrix> es(S);
  const double top = std::max(1e-300, es.eigenvalues().cwiseAbs().maxCoeff());
  if (M.rows() == 0 || es.eigenvalues().minCoeff() <= 1e-12 * top)
    throw DegenerateImage(fmt::format("image of rank below {}", M.rows()));
  const Matrix R = es.eigenvectors() * es.eigenvalues().cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();
  out.canonical = {0.5 * (R + R.transpose()), out.center};
  return out;
}

bool ellipsoid_contains(const Ellipsoid& E, const Vector& x, double tol) {
  if (x.size() != E.dim()) throw DimensionMismatch("point and ellipsoid dimensions differ");
  const Vector u = E.A.partialPivLu().solve(x - E.c);
  return u.norm() <= 1.0 + tol;
}

std::vector<Vector> ellipsoid_boundary(const Ellipsoid& E, Index n) {
  const Index d = E.dim();
  std::vector<Vector> pts;
  if (d == 1) {
    pts.push_back(E.c - E.A.col(0));
    pts.push_back(E.c + E.A.col(0));
    return pts;
  }
  for (Index k = 0; k < n; ++k) {
    Vector u(d);
    if (d == 2) {
      const double a = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
      u << std::cos(a), std::sin(a);
    } else if (d == 3) {
      const double z = 1.0 - 2.0 * (static_cast<double>(k) + 0.5) / static_cast<double>(n);
      const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
      const double a = static_cast<double>(k) * std::numbers::pi * (3.0 - std::sqrt(5.0));
      u << r * std::cos(a), r * std::sin(a), z;
    } else {
      std::mt19937_64 rng(static_cast<std::uint64_t>(k) * 0x9E3779B97F4A7C15ULL + 1);
      std::normal_distribution<double> g;
      for (Index j = 0; j < d; ++j) u(j) = g(rng);
      u.normalize();
    }
    pts.push_back(E.A * u + E.c);
  }
  return pts;
}

HPolyhedron ellipsoid_inner_polytope(const Ellipsoid& E) {
  E.validate();
  const Index d = E.dim();
  const double shrink = 1.0 - 1e-9;
  if (d == 1) {
    const double a = std::abs(E.A(0, 0)) * shrink;
    return HPolyhedron::box(E.c.array() - a, E.c.array() + a);
  }
  if (d == 2) {
    const Index n = 12;
    std::vector<Vector> v;
    for (Index k = 0; k < n; ++k) {
      const double a = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
      v.push_back(E.c + shrink * E.A * Eigen::Vector2d(std::cos(a), std::sin(a)));
    }
    HPolyhedron P(2);
    P.Ain.resize(n, 2);
    P.bin.resize(n);
    for (Index k = 0; k < n; ++k) {
      const Vector e = v[static_cast<size_t>((k + 1) % n)] - v[static_cast<size_t>(k)];
      const Eigen::Vector2d nrm(e(1), -e(0));
      P.Ain.row(k) = nrm.transpose() / nrm.norm();
      P.bin(k) = P.Ain.row(k).dot(v[static_cast<size_t>(k)]);
    }
    return P;
  }
  if (d == 3) {
    std::vector<Vector> v;
    for (int a = -1; a <= 1; ++a)
      for (int b = -1; b <= 1; ++b)
        for (int c = -1; c <= 1; ++c) {
          const int nz = std::abs(a) + std::abs(b) + std::abs(c);
          if (nz != 1 && nz != 3) continue;
          const Eigen::Vector3d u = Eigen::Vector3d(a, b, c).normalized();
          v.push_back(E.c + shrink * E.A * u);
        }
    return convex_hull(v);
  }
  // u-box of half-width 1/sqrt(d) lies inside the unit ball
  const Matrix Ainv = E.A.inverse();
  const double h = shrink / std::sqrt(static_cast<double>(d));
  HPolyhedron P(d);
  P.Ain.resize(2 * d, d);
  P.bin.resize(2 * d);
  const Vector uc = Ainv * E.c;
  for (Index k = 0; k < d; ++k) {
    P.Ain.row(2 * k) = Ainv.row(k);
    P.bin(2 * k) = h + uc(k);
    P.Ain.row(2 * k + 1) = -Ainv.row(k);
    P.bin(2 * k + 1) = h - uc(k);
  }
  return P;
}

}  // namespace treedp
