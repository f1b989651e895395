#include "treedp/model.hpp"

#include "treedp/errors.hpp"

#include <fmt/format.h>
#include <fmt/ranges.h>

#include <algorithm>
#include <deque>
#include <set>

namespace treedp {

QuadraticObjective QuadraticObjective::zero(Index n) { return {Matrix::Zero(n, n), Vector::Zero(n), 0.0}; }

const HPolyhedron& Subsystem::polyhedron() const {
  if (!polyhedral()) throw Unsupported(fmt::format("subsystem {} has a nonlinear constraint set", id));
  return std::get<HPolyhedron>(constraints);
}

const NlpRef& Subsystem::nlp() const {
  if (polyhedral()) throw InvalidArgument(fmt::format("subsystem {} is polyhedral", id));
  return std::get<NlpRef>(constraints);
}

void TreeProblem::validate() const {
  if (subsystems.empty()) throw InvalidArgument("problem has no subsystems");
  std::set<int> ids;
  for (const auto& s : subsystems) {
    if (!ids.insert(s.id).second) throw InvalidArgument(fmt::format("duplicate subsystem id {}", s.id));
    const Index n = s.size();
    if (n == 0) throw InvalidArgument(fmt::format("subsystem {} has an empty index set", s.id));
    if (s.indices.max_index() > n_x)
      throw DimensionMismatch(fmt::format("subsystem {} references index {} > n_x = {}", s.id, s.indices.max_index(), n_x));
    if (s.objective.Q.rows() != n || s.objective.Q.cols() != n || s.objective.q.size() != n)
      throw DimensionMismatch(fmt::format("subsystem {} objective does not match |I| = {}", s.id, n));
    if (s.polyhedral()) {
      const auto& P = s.polyhedron();
      P.validate();
      if (P.dim != n)
        throw DimensionMismatch(fmt::format("subsystem {} constraints have dim {}, |I| = {}", s.id, P.dim, n));
    } else {
      const auto& r = s.nlp();
      if (!r.spec) throw InvalidArgument(fmt::format("subsystem {} NLP reference '{}' is unresolved", s.id, r.name));
    }
  }
}

const Subsystem& TreeProblem::subsystem(int id) const {
  for (const auto& s : subsystems)
    if (s.id == id) return s;
  throw InvalidArgument(fmt::format("no subsystem with id {}", id));
}

VariableIndexSet TreeProblem::referenced() const {
  VariableIndexSet all;
  for (const auto& s : subsystems) all = all.unite(s.indices);
  return all;
}

std::vector<Edge> build_interaction_graph(const TreeProblem& problem) {
  std::vector<Edge> edges;
  const auto& S = problem.subsystems;
  for (size_t i = 0; i < S.size(); ++i)
    for (size_t j = i + 1; j < S.size(); ++j)
      if (!S[i].indices.intersect(S[j].indices).empty()) {
        const int a = std::min(S[i].id, S[j].id);
        const int b = std::max(S[i].id, S[j].id);
        edges.push_back({a, b});
      }
  std::sort(edges.begin(), edges.end(), [](const Edge& x, const Edge& y) {
    return std::pair(x.a, x.b) < std::pair(y.a, y.b);
  });
  return edges;
}

TreeTopology verify_tree(const TreeProblem& problem, const std::vector<Edge>& edges, int root) {
  problem.validate();
  std::map<Index, int> owners;
  for (const auto& s : problem.subsystems)
    for (Index i : s.indices) ++owners[i];
  for (const auto& [var, count] : owners)
    if (count >= 3)
      throw NotATree(fmt::format("variable {} is shared by {} subsystems; only pairwise coupling is supported", var, count));

  std::map<int, std::vector<int>> adj;
  for (const auto& s : problem.subsystems) adj[s.id];
  for (const auto& e : edges) {
    if (!adj.count(e.a) || !adj.count(e.b)) throw InvalidArgument("edge references an unknown subsystem");
    adj[e.a].push_back(e.b);
    adj[e.b].push_back(e.a);
  }
  for (auto& [id, nb] : adj) std::sort(nb.begin(), nb.end());
  if (!adj.count(root)) throw InvalidArgument(fmt::format("root {} is not a subsystem", root));

  TreeTopology topo;
  topo.root = root;
  std::map<int, int> seen;
  std::deque<int> queue{root};
  seen[root] = root;
  while (!queue.empty()) {
    const int u = queue.front();
    queue.pop_front();
    topo.children[u];
    for (int v : adj[u]) {
      if (topo.parent.count(u) && topo.parent.at(u) == v) continue;
      if (seen.count(v)) {
        // reconstruct the cycle through the two BFS paths
        std::vector<int> pu{u}, pv{v};
        while (pu.back() != root) pu.push_back(topo.parent.at(pu.back()));
        while (pv.back() != root) pv.push_back(topo.parent.at(pv.back()));
        while (pu.size() > 1 && pv.size() > 1 && pu[pu.size() - 2] == pv[pv.size() - 2]) {
          pu.pop_back();
          pv.pop_back();
        }
        std::vector<int> cyc(pu.begin(), pu.end());
        for (auto it = pv.rbegin() + 1; it != pv.rend(); ++it) cyc.push_back(*it);
        throw NotATree(fmt::format("interaction graph contains the cycle {}", fmt::join(cyc, "-")));
      }
      seen[v] = u;
      topo.parent[v] = u;
      topo.children[u].push_back(v);
      queue.push_back(v);
    }
  }
  if (seen.size() != adj.size()) {
    std::vector<int> missing;
    for (const auto& [id, nb] : adj)
      if (!seen.count(id)) missing.push_back(id);
    throw NotATree(fmt::format("interaction graph is disconnected; unreachable from root {}: {}", root, fmt::join(missing, ",")));
  }

  for (const auto& s : problem.subsystems) {
    topo.coupling[s.id] = s.id == root ? VariableIndexSet{} : problem.subsystem(topo.parent.at(s.id)).indices.intersect(s.indices);
    std::vector<Index> loc;
    for (Index i : s.indices)
      if (owners.at(i) == 1) loc.push_back(i);
    topo.local[s.id] = VariableIndexSet(std::move(loc));
  }
  return topo;
}

std::vector<std::vector<int>> TreeTopology::levels() const {
  std::vector<std::vector<int>> out{{root}};
  while (true) {
    std::vector<int> next;
    for (int id : out.back()) {
      const auto it = children.find(id);
      if (it != children.end()) next.insert(next.end(), it->second.begin(), it->second.end());
    }
    if (next.empty()) break;
    out.push_back(std::move(next));
  }
  return out;
}

std::vector<int> TreeTopology::preorder() const { return subtree_ids(*this, root); }

int TreeTopology::depth() const { return static_cast<int>(levels().size()) - 1; }

std::vector<int> subtree_ids(const TreeTopology& topo, int id) {
  std::vector<int> out;
  std::vector<int> stack{id};
  while (!stack.empty()) {
    const int u = stack.back();
    stack.pop_back();
    out.push_back(u);
    const auto it = topo.children.find(u);
    if (it == topo.children.end()) continue;
    for (auto c = it->second.rbegin(); c != it->second.rend(); ++c) stack.push_back(*c);
  }
  return out;
}

MonolithicProblem assemble_subset(const TreeProblem& problem, const std::vector<int>& ids) {
  VariableIndexSet vars;
  for (int id : ids) vars = vars.unite(problem.subsystem(id).indices);
  const Index n = vars.size();
  MonolithicProblem M;
  M.variables = vars;
  M.qp.Q = Matrix::Zero(n, n);
  M.qp.q = Vector::Zero(n);
  M.qp.constraints = HPolyhedron(n);
  for (int id : ids) {
    const auto& s = problem.subsystem(id);
    if (!s.polyhedral()) throw Unsupported(fmt::format("subsystem {} has a nonlinear constraint set", id));
    const Positions pos = vars.positions_of(s.indices);
    for (Index a = 0; a < s.size(); ++a) {
      M.qp.q(pos[a]) += s.objective.q(a);
      for (Index b = 0; b < s.size(); ++b) M.qp.Q(pos[a], pos[b]) += s.objective.Q(a, b);
    }
    M.constant += s.objective.constant;
    M.qp.constraints = M.qp.constraints.intersect(s.polyhedron().embed(n, pos));
  }
  return M;
}

MonolithicProblem assemble_monolithic(const TreeProblem& problem) {
  problem.validate();
  std::vector<int> ids;
  for (const auto& s : problem.subsystems) ids.push_back(s.id);
  return assemble_subset(problem, ids);
}

}  // namespace treedp
