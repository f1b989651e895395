#include "random_instances.hpp"

#include <algorithm>

namespace treedp::testkit {

Vector uniform_vector(std::mt19937_64& rng, Index n, double lo, double hi) {
  std::uniform_real_distribution<double> U(lo, hi);
  Vector v(n);
  for (Index k = 0; k < n; ++k) v(k) = U(rng);
  return v;
}

Matrix random_spd(std::mt19937_64& rng, Index n, double floor) {
  std::normal_distribution<double> N(0.0, 1.0);
  Matrix M(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) M(i, j) = N(rng);
  return M.transpose() * M / static_cast<double>(n) + floor * Matrix::Identity(n, n);
}

namespace {

Vector unit_normal(std::mt19937_64& rng, Index n) {
  std::normal_distribution<double> N(0.0, 1.0);
  Vector a(n);
  for (Index k = 0; k < n; ++k) a(k) = N(rng);
  return a / a.norm();
}

}  // namespace

RandomTree random_tree_qp(std::mt19937_64& rng, const RandomTreeOptions& opt) {
  std::uniform_int_distribution<int> branch(0, opt.max_branching);
  std::uniform_int_distribution<Index> n_local(1, opt.max_local);
  std::uniform_int_distribution<Index> n_coupling(1, opt.max_coupling);
  std::uniform_real_distribution<double> U(0.0, 1.0);

  struct Node {
    int id;
    int parent;
    int depth;
    std::vector<Index> coupling;
    std::vector<Index> local;
  };
  std::vector<Node> nodes{{1, 0, 0, {}, {}}};
  Index next = 1;
  for (size_t k = 0; k < nodes.size(); ++k) {
    for (Index j = n_local(rng); j > 0; --j) nodes[k].local.push_back(next++);
    if (nodes[k].depth >= opt.max_depth) continue;
    int children = branch(rng);
    if (k == 0) children = std::max(children, 1);
    for (int c = 0; c < children; ++c) {
      Node child{static_cast<int>(nodes.size()) + 1, nodes[k].id, nodes[k].depth + 1, {}, {}};
      for (Index j = n_coupling(rng); j > 0; --j) child.coupling.push_back(next++);
      nodes.push_back(child);
    }
  }

  RandomTree out;
  out.problem.n_x = next - 1;
  out.feasible_point = uniform_vector(rng, out.problem.n_x + 1, -1.0, 1.0);
  out.feasible_point(0) = 0.0;
  for (const auto& n : nodes) {
    std::vector<Index> idx = n.coupling;
    idx.insert(idx.end(), n.local.begin(), n.local.end());
    for (const auto& c : nodes)
      if (c.parent == n.id) idx.insert(idx.end(), c.coupling.begin(), c.coupling.end());
    std::sort(idx.begin(), idx.end());
    const Index d = static_cast<Index>(idx.size());
    Vector x0(d);
    for (Index k = 0; k < d; ++k) x0(k) = out.feasible_point(idx[static_cast<size_t>(k)]);

    const Vector lo = x0 - uniform_vector(rng, d, 0.3, 1.5);
    const Vector hi = x0 + uniform_vector(rng, d, 0.3, 1.5);
    Matrix Ain(2 * d + opt.extra_rows, d);
    Vector bin(2 * d + opt.extra_rows);
    Ain.topRows(d) = Matrix::Identity(d, d);
    bin.head(d) = hi;
    Ain.middleRows(d, d) = -Matrix::Identity(d, d);
    bin.segment(d, d) = -lo;
    for (Index r = 0; r < opt.extra_rows; ++r) {
      const Vector a = unit_normal(rng, d);
      Ain.row(2 * d + r) = a.transpose();
      bin(2 * d + r) = a.dot(x0) + 0.05 + 0.5 * U(rng);
    }
    HPolyhedron P(Ain, bin);
    if (d > 1 && U(rng) < opt.equality_probability) {
      const Vector a = unit_normal(rng, d);
      P = HPolyhedron(a.transpose(), Vector::Constant(1, a.dot(x0)), Ain, bin);
    }

    Subsystem s;
    s.id = n.id;
    s.indices = VariableIndexSet(idx);
    s.objective.Q = random_spd(rng, d, 0.05);
    s.objective.q = uniform_vector(rng, d, -1.0, 1.0);
    s.constraints = P;
    out.problem.subsystems.push_back(std::move(s));
  }
  out.problem.validate();
  out.topology = verify_tree(out.problem, build_interaction_graph(out.problem), 1);
  return out;
}

HPolyhedron random_polytope(std::mt19937_64& rng, Index dim, Index extra_rows) {
  std::uniform_real_distribution<double> U(0.2, 1.5);
  Matrix Ain(2 * dim + extra_rows, dim);
  Vector bin(2 * dim + extra_rows);
  Ain.topRows(dim) = Matrix::Identity(dim, dim);
  Ain.middleRows(dim, dim) = -Matrix::Identity(dim, dim);
  bin.head(2 * dim).setConstant(3.0);
  for (Index r = 0; r < extra_rows; ++r) {
    Ain.row(2 * dim + r) = unit_normal(rng, dim).transpose();
    bin(2 * dim + r) = U(rng);
  }
  return HPolyhedron(Ain, bin);
}

LtiOcpSpec random_unconstrained_lq(std::mt19937_64& rng, Index max_state, Index max_horizon) {
  std::uniform_int_distribution<Index> n_state(1, max_state);
  std::uniform_int_distribution<Index> n_input(1, 2);
  std::uniform_int_distribution<Index> horizon(1, max_horizon);
  std::normal_distribution<double> N(0.0, 1.0);
  const Index n = n_state(rng);
  const Index m = n_input(rng);
  LtiOcpSpec s;
  s.A = Matrix(n, n);
  s.B = Matrix(n, m);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) s.A(i, j) = 0.5 * N(rng);
    for (Index j = 0; j < m; ++j) s.B(i, j) = N(rng);
  }
  s.Qz = random_spd(rng, n);
  s.Ru = random_spd(rng, m);
  s.P = random_spd(rng, n);
  s.Z = HPolyhedron(n);
  s.U = HPolyhedron(m);
  s.ZT = HPolyhedron(n);
  s.z0 = uniform_vector(rng, n, -1.0, 1.0);
  s.T = horizon(rng);
  return s;
}

}  // namespace treedp::testkit
