#include "treedp/sampling.hpp"

#include "detail_log.hpp"
#include "treedp/errors.hpp"
#include "treedp/polyhedra.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <random>
#include <set>
#include <thread>

namespace treedp {

void NlpConstraintSpec::validate() const {
  if (nz <= 0 || ny < 0) throw InvalidArgument(fmt::format("nonlinear set '{}' needs nz > 0 and ny >= 0", name));
  if (!g || !g_jacobian) throw InvalidArgument(fmt::format("nonlinear set '{}' needs g and its Jacobian", name));
  if (lower.size() != dim() || upper.size() != dim())
    throw DimensionMismatch(fmt::format("nonlinear set '{}' bounds must have size {}", name, dim()));
  if ((lower.array() > upper.array()).any()) throw InvalidArgument(fmt::format("nonlinear set '{}' has lower > upper", name));
  if (initial_guess.size() != dim())
    throw DimensionMismatch(fmt::format("nonlinear set '{}' initial guess must have size {}", name, dim()));
  std::set<Index> seen;
  for (Index p : sampled)
    if (p < 0 || p >= dim() || !seen.insert(p).second)
      throw InvalidArgument(fmt::format("nonlinear set '{}' has an invalid sampled position {}", name, p));
  if (!partner.empty() && static_cast<Index>(partner.size()) != nz)
    throw DimensionMismatch(fmt::format("nonlinear set '{}' needs one partner per z component", name));
  for (Index p : partner)
    if (p >= 0 && !seen.count(p))
      throw InvalidArgument(fmt::format("nonlinear set '{}': partner {} is not a sampled position", name, p));
}

double NlpConstraintSpec::equality_residual(const Vector& zy) const {
  const Vector r = g(zy);
  return r.size() == 0 ? 0.0 : r.cwiseAbs().maxCoeff();
}

double NlpConstraintSpec::inequality_violation(const Vector& zy) const {
  double v = 0.0;
  if (h) {
    const Vector r = h(zy);
    if (r.size() > 0) v = std::max(v, r.maxCoeff());
  }
  for (Index k = 0; k < zy.size(); ++k) v = std::max({v, lower(k) - zy(k), zy(k) - upper(k)});
  return v;
}

double NlpConstraintSpec::violation(const Vector& zy) const {
  if (zy.size() != dim()) throw DimensionMismatch("point has wrong size for the nonlinear set");
  const double v = std::max(equality_residual(zy), inequality_violation(zy));
  return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
}

std::string to_string(Provenance p) {
  switch (p) {
    case Provenance::DecisionSampled: return "DecisionSampled";
    case Provenance::BoundaryLP: return "BoundaryLP";
    case Provenance::GridRefined: return "GridRefined";
  }
  return "Unknown";
}

std::vector<Vector> SampleSet::coordinates() const {
  std::vector<Vector> out;
  out.reserve(points.size());
  for (const auto& p : points) out.push_back(p.z);
  return out;
}

void SampleSet::append(const SampleSet& other) {
  if (dim == 0) dim = other.dim;
  if (other.dim != dim) throw DimensionMismatch("sample sets have different dimensions");
  points.insert(points.end(), other.points.begin(), other.points.end());
  attempted += other.attempted;
  rejected += other.rejected;
  failed_directions += other.failed_directions;
}

void ConvexSetSpec::validate() const {
  polyhedron.validate();
  if (nz <= 0 || nz > polyhedron.dim) throw DimensionMismatch("convex set needs 0 < nz <= dim");
  for (const auto& q : quadratic)
    if (q.P.rows() != polyhedron.dim || q.P.cols() != polyhedron.dim || q.r.size() != polyhedron.dim)
      throw DimensionMismatch("quadratic constraint has wrong size");
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + (index + 1) * 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

void parallel_for(Index n, int threads, const std::function<void(Index)>& f) {
  if (n <= 0) return;
  const Index workers = std::min<Index>(n, std::max(1, threads));
  if (workers <= 1) {
    for (Index i = 0; i < n; ++i) f(i);
    return;
  }
  std::atomic<Index> next{0};
  std::vector<std::exception_ptr> errs(static_cast<size_t>(n));
  std::vector<std::thread> pool;
  for (Index w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (Index i = next++; i < n; i = next++) {
        try {
          f(i);
        } catch (...) {
          errs[static_cast<size_t>(i)] = std::current_exception();
        }
      }
    });
  for (auto& t : pool) t.join();
  for (auto& e : errs)
    if (e) std::rethrow_exception(e);
}

std::vector<Vector> default_cost_directions(Index n) {
  if (n <= 0 || n > 10) throw Unsupported(fmt::format("cost grid in dimension {}", n));
  Index total = 1;
  for (Index k = 0; k < n; ++k) total *= 3;
  std::vector<Vector> out;
  for (Index code = 0; code < total; ++code) {
    Vector c(n);
    Index r = code;
    for (Index k = n; k-- > 0;) {
      c(k) = static_cast<double>(r % 3) - 1.0;
      r /= 3;
    }
    if (c.cwiseAbs().maxCoeff() > 0.0) out.push_back(c);
  }
  return out;
}

std::optional<Vector> nlp_complete(const NlpConstraintSpec& spec, const Vector& zy, const std::vector<Index>& fixed,
                                   const SamplingOptions& opt) {
  std::vector<bool> is_fixed(static_cast<size_t>(spec.dim()), false);
  for (Index p : fixed) is_fixed[static_cast<size_t>(p)] = true;
  Positions freep;
  for (Index k = 0; k < spec.dim(); ++k)
    if (!is_fixed[static_cast<size_t>(k)]) freep.push_back(k);
  const Index m = spec.g(zy).size();
  if (static_cast<Index>(freep.size()) != m)
    throw InvalidArgument(fmt::format("{} free positions for {} equations", freep.size(), m));

  Vector base = zy;
  const auto expand = [&](const Vector& u) {
    Vector x = base;
    for (size_t k = 0; k < freep.size(); ++k) x(freep[k]) = u(static_cast<Index>(k));
    return x;
  };
  NonlinearSystem sys;
  sys.residual = [&](const Vector& u) { return spec.g(expand(u)); };
  sys.jacobian = [&](const Vector& u) { return gather_columns(spec.g_jacobian(expand(u)), freep); };
  sys.initial_guess = gather(zy, freep);
  Solution s;
  try {
    s = newton_solve(sys, opt.newton_max_iter, 0.01 * opt.tol);
  } catch (const SingularJacobian&) {
    return std::nullopt;
  }
  const Vector out = expand(s.x);
  if (!out.allFinite() || spec.equality_residual(out) > 0.1 * opt.tol || spec.inequality_violation(out) > 0.0)
    return std::nullopt;
  return out;
}

SampleSet decision_variable_sampling(const NlpConstraintSpec& spec, Index n_samples, std::uint64_t seed,
                                     const SamplingOptions& opt) {
  spec.validate();
  if (n_samples <= 0) throw InvalidArgument("number of samples must be positive");
  for (Index p : spec.sampled)
    if (!std::isfinite(spec.lower(p)) || !std::isfinite(spec.upper(p)))
      throw InvalidArgument(fmt::format("sampled position {} needs finite bounds", p));
  std::vector<Index> fixed(spec.sampled.begin(), spec.sampled.end());
  std::vector<std::optional<Vector>> found(static_cast<size_t>(n_samples));
  parallel_for(n_samples, opt.threads, [&](Index l) {
    std::mt19937_64 rng(derive_seed(seed, static_cast<std::uint64_t>(l)));
    Vector zy = spec.initial_guess;
    for (Index p : spec.sampled) {
      std::uniform_real_distribution<double> U(spec.lower(p), spec.upper(p));
      zy(p) = spec.lower(p) == spec.upper(p) ? spec.lower(p) : U(rng);
    }
    found[static_cast<size_t>(l)] = nlp_complete(spec, zy, fixed, opt);
  });
  SampleSet out;
  out.dim = spec.nz;
  out.attempted = n_samples;
  for (Index l = 0; l < n_samples; ++l) {
    const auto& w = found[static_cast<size_t>(l)];
    if (!w) {
      ++out.rejected;
      continue;
    }
    SamplePoint pt;
    pt.z = w->head(spec.nz);
    pt.witness = *w;
    pt.residual = spec.violation(*w);
    pt.sample_index = l;
    out.points.push_back(std::move(pt));
  }
  log::info("decision sampling '{}': {} of {} retained", spec.name, out.points.size(), n_samples);
  if (out.points.empty()) throw NoFeasibleSamples(fmt::format("all {} samples of '{}' were rejected", n_samples, spec.name));
  return out;
}

namespace {

std::optional<Vector> boundary_point(const ConvexSetSpec& spec, const HPolyhedron& P, const Vector& cz) {
  Vector c = Vector::Zero(P.dim);
  c.head(spec.nz) = cz;
  Solution s;
  if (spec.quadratic.empty()) {
    s = solve_lp({c, P});
  } else {
    s = solve_qcqp({Matrix::Zero(P.dim, P.dim), c, P}, spec.quadratic);
  }
  if (s.status == SolveStatus::Infeasible) throw InfeasibleSet("boundary problem is infeasible; the set is empty");
  if (!s.optimal()) return std::nullopt;
  return s.x;
}

double convex_violation(const ConvexSetSpec& spec, const Vector& x) {
  double v = spec.polyhedron.max_violation(x);
  for (const auto& q : spec.quadratic) v = std::max(v, q.value(x));
  return std::max(0.0, v);
}

std::vector<double> grid_values(const SampleSet& base, Index m, Index n_grid) {
  if (n_grid <= 0) throw InvalidArgument("n_grid must be positive");
  if (m < 0 || m >= base.dim) throw InvalidArgument(fmt::format("component {} out of range", m));
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& p : base.points) {
    lo = std::min(lo, p.z(m));
    hi = std::max(hi, p.z(m));
  }
  if (!std::isfinite(lo) || !std::isfinite(hi))
    throw ComponentUnbounded(fmt::format("component {} has no finite range over the base samples", m));
  std::vector<double> t;
  if (n_grid == 1) {
    t.push_back(0.5 * (lo + hi));
  } else {
    for (Index k = 0; k < n_grid; ++k)
      t.push_back(lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(n_grid - 1));
  }
  return t;
}

int direction_sign(const Vector& c) { return c.sum() > 0.0 ? -1 : 1; }

}  // namespace

SampleSet optimization_based_sampling(const ConvexSetSpec& spec, const std::vector<Vector>& costs) {
  spec.validate();
  SampleSet out;
  out.dim = spec.nz;
  for (size_t l = 0; l < costs.size(); ++l) {
    if (costs[l].size() != spec.nz) throw DimensionMismatch("cost vector has wrong size");
    ++out.attempted;
    const auto x = boundary_point(spec, spec.polyhedron, costs[l]);
    if (!x) {
      ++out.failed_directions;
      continue;
    }
    SamplePoint pt;
    pt.z = x->head(spec.nz);
    pt.witness = *x;
    pt.residual = convex_violation(spec, *x);
    pt.provenance = Provenance::BoundaryLP;
    pt.cost = costs[l];
    pt.sample_index = static_cast<Index>(l);
    out.points.push_back(std::move(pt));
  }
  return out;
}

SampleSet gridding_refinement(const ConvexSetSpec& spec, const SampleSet& base, Index m, Index n_grid,
                              const std::vector<Vector>& directions) {
  spec.validate();
  SampleSet out;
  out.dim = spec.nz;
  Index idx = 0;
  for (double t : grid_values(base, m, n_grid)) {
    HPolyhedron P = spec.polyhedron;
    Vector row = Vector::Zero(P.dim);
    row(m) = 1.0;
    P.add_equality(row, t);
    for (const auto& c : directions) {
      if (c.size() != spec.nz) throw DimensionMismatch("direction has wrong size");
      ++out.attempted;
      std::optional<Vector> x;
      try {
        x = boundary_point(spec, P, c);
      } catch (const InfeasibleSet&) {
      }
      if (!x) {
        ++out.failed_directions;
        continue;
      }
      SamplePoint pt;
      pt.z = x->head(spec.nz);
      pt.z(m) = t;
      pt.witness = *x;
      pt.residual = convex_violation(spec, *x);
      pt.provenance = Provenance::GridRefined;
      pt.cost = c;
      pt.component = m;
      pt.fixed_value = t;
      pt.direction = direction_sign(c);
      pt.sample_index = idx++;
      out.points.push_back(std::move(pt));
    }
  }
  return out;
}

std::optional<LocalSearchResult> nlp_local_search(const NlpConstraintSpec& spec, const Vector& start,
                                                  const std::vector<Index>& fixed, const std::vector<Index>& search,
                                                  const std::function<double(const Vector&)>& objective,
                                                  const SamplingOptions& opt) {
  if (spec.violation(start) > opt.tol) return std::nullopt;
  LocalSearchResult res{start, objective(start), 1};
  const Index k = static_cast<Index>(search.size());
  if (k == 0) return res;

  std::vector<Vector> dirs;
  for (Index a = 0; a < k; ++a) {
    Vector e = Vector::Zero(k);
    e(a) = 1.0;
    dirs.push_back(e);
    dirs.push_back(-e);
  }
  for (Index a = 0; a < k; ++a)
    for (Index b = a + 1; b < k; ++b)
      for (double sa : {1.0, -1.0})
        for (double sb : {1.0, -1.0}) {
          Vector e = Vector::Zero(k);
          e(a) = sa;
          e(b) = sb;
          dirs.push_back(e);
        }

  Vector scale(k);
  for (Index a = 0; a < k; ++a) {
    const Index p = search[static_cast<size_t>(a)];
    const double w = spec.upper(p) - spec.lower(p);
    scale(a) = std::isfinite(w) ? w : 1.0;
  }
  double step = 0.125;
  const Index max_eval = 20000;
  while (step > 1e-7 && res.evaluations < max_eval) {
    bool improved = false;
    for (const auto& d : dirs) {
      Vector trial = res.zy;
      bool moved = false;
      for (Index a = 0; a < k; ++a) {
        const Index p = search[static_cast<size_t>(a)];
        const double v = std::clamp(trial(p) + step * scale(a) * d(a), spec.lower(p), spec.upper(p));
        moved = moved || v != trial(p);
        trial(p) = v;
      }
      if (!moved) continue;
      ++res.evaluations;
      const auto done = nlp_complete(spec, trial, fixed, opt);
      if (!done) continue;
      const double f = objective(*done);
      if (f < res.objective - 1e-12 * (1.0 + std::abs(res.objective))) {
        res.zy = *done;
        res.objective = f;
        improved = true;
        break;
      }
    }
    if (!improved) step *= 0.5;
  }
  return res;
}

std::vector<Vector> nearest_witnesses(const SampleSet& samples, const Vector& z, Index count) {
  std::vector<std::pair<double, size_t>> order;
  for (size_t k = 0; k < samples.points.size(); ++k) order.emplace_back((samples.points[k].z - z).norm(), k);
  std::sort(order.begin(), order.end());
  std::vector<Vector> out;
  for (size_t k = 0; k < std::min<size_t>(order.size(), static_cast<size_t>(std::max<Index>(count, 0))); ++k)
    out.push_back(samples.points[order[k].second].witness);
  return out;
}

std::optional<LocalSearchResult> nlp_minimize_at(const NlpConstraintSpec& spec, const std::vector<Vector>& starts,
                                                 const Vector& z,
                                                 const std::function<double(const Vector&)>& objective,
                                                 const SamplingOptions& opt) {
  const Index nz = spec.nz;
  if (z.size() != nz) throw DimensionMismatch("fixed z has wrong size");
  std::vector<bool> released(static_cast<size_t>(spec.dim()), false);
  for (Index p : spec.partner)
    if (p >= 0) released[static_cast<size_t>(p)] = true;
  std::vector<Index> fixed;
  std::vector<Index> search;
  for (Index k = 0; k < nz; ++k) fixed.push_back(k);
  for (Index p : spec.sampled)
    if (p >= nz && !released[static_cast<size_t>(p)]) {
      fixed.push_back(p);
      if (spec.lower(p) < spec.upper(p)) search.push_back(p);
    }
  for (const Vector& st : starts) {
    if (st.size() != spec.dim()) throw DimensionMismatch("start point has wrong size");
    Vector zy = st;
    zy.head(nz) = z;
    const auto done = nlp_complete(spec, zy, fixed, opt);
    if (!done) continue;
    return nlp_local_search(spec, *done, fixed, search, objective, opt);
  }
  return std::nullopt;
}

SampleSet gridding_refinement(const NlpConstraintSpec& spec, const SampleSet& base, Index m, Index n_grid,
                              const std::vector<Vector>& directions, const SamplingOptions& opt) {
  spec.validate();
  if (spec.partner.empty() || spec.partner[static_cast<size_t>(m)] < 0)
    throw Unsupported(fmt::format("component {} of '{}' has no partner to release", m, spec.name));
  const Index release = spec.partner[static_cast<size_t>(m)];
  std::vector<Index> fixed{m};
  std::vector<Index> search;
  for (Index p : spec.sampled)
    if (p != release && p != m) {
      fixed.push_back(p);
      if (spec.lower(p) < spec.upper(p)) search.push_back(p);
    }
  const std::vector<double> ts = grid_values(base, m, n_grid);

  struct Job {
    double t;
    Vector c;
  };
  std::vector<Job> jobs;
  for (double t : ts)
    for (const auto& c : directions) {
      if (c.size() != spec.nz) throw DimensionMismatch("direction has wrong size");
      jobs.push_back({t, c});
    }
  std::vector<std::optional<Vector>> found(jobs.size());
  parallel_for(static_cast<Index>(jobs.size()), opt.threads, [&](Index j) {
    const Job& job = jobs[static_cast<size_t>(j)];
    std::vector<std::pair<double, size_t>> order;
    for (size_t k = 0; k < base.points.size(); ++k) order.emplace_back(std::abs(base.points[k].z(m) - job.t), k);
    std::sort(order.begin(), order.end());
    const auto obj = [&](const Vector& zy) { return job.c.dot(zy.head(spec.nz)); };
    std::optional<LocalSearchResult> best;
    for (size_t k = 0; k < std::min<size_t>(order.size(), 8); ++k) {
      Vector zy = base.points[order[k].second].witness;
      zy(m) = job.t;
      const auto start = nlp_complete(spec, zy, fixed, opt);
      if (!start) continue;
      const auto r = nlp_local_search(spec, *start, fixed, search, obj, opt);
      if (r && (!best || r->objective < best->objective)) best = r;
      if (best) break;
    }
    if (best) found[static_cast<size_t>(j)] = best->zy;
  });

  SampleSet out;
  out.dim = spec.nz;
  for (size_t j = 0; j < jobs.size(); ++j) {
    ++out.attempted;
    if (!found[j]) {
      ++out.failed_directions;
      continue;
    }
    SamplePoint pt;
    pt.z = found[j]->head(spec.nz);
    pt.witness = *found[j];
    pt.residual = spec.violation(*found[j]);
    pt.provenance = Provenance::GridRefined;
    pt.cost = jobs[j].c;
    pt.component = m;
    pt.fixed_value = jobs[j].t;
    pt.direction = direction_sign(jobs[j].c);
    pt.sample_index = static_cast<Index>(j);
    out.points.push_back(std::move(pt));
  }
  return out;
}

SampleHull hull_of_samples(const SampleSet& samples, bool convex_source) {
  if (samples.points.empty()) throw NoFeasibleSamples("no samples for the hull");
  SampleHull out;
  out.polyhedron = convex_hull(samples.coordinates());
  out.certified_inner = convex_source;
  if (!convex_source) log::warn("hull of samples of a nonconvex set is not a certified inner approximation");
  return out;
}

double certify_samples(const NlpConstraintSpec& spec, const SampleSet& samples) {
  double worst = 0.0;
  for (const auto& p : samples.points) {
    if (p.witness.size() != spec.dim()) throw DimensionMismatch("witness has wrong size");
    const double dz = (p.witness.head(spec.nz) - p.z).cwiseAbs().maxCoeff();
    worst = std::max({worst, spec.violation(p.witness), dz});
  }
  return worst;
}

}  // namespace treedp
