#include "treedp/io.hpp"

#include "treedp/errors.hpp"

#include <fmt/format.h>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace treedp::io {

namespace {

void require_keys(const json& j, const char* what, std::initializer_list<const char*> required,
                  std::initializer_list<const char*> optional = {}) {
  if (!j.is_object()) throw ParseError(fmt::format("{} must be an object", what));
  std::set<std::string> allowed;
  for (const char* k : required) {
    allowed.insert(k);
    if (!j.contains(k)) throw ParseError(fmt::format("{} is missing key '{}'", what, k));
  }
  for (const char* k : optional) allowed.insert(k);
  for (const auto& [k, v] : j.items())
    if (!allowed.count(k)) throw ParseError(fmt::format("{} has unknown key '{}'", what, k));
}

template <class T>
T get(const json& j, const char* key, const char* what) {
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(fmt::format("{}: key '{}': {}", what, key, e.what()));
  }
}

template <class T>
T get_or(const json& j, const char* key, T fallback, const char* what) {
  return j.contains(key) ? get<T>(j, key, what) : fallback;
}

double number(const json& j, const char* what) {
  if (!j.is_number()) throw ParseError(fmt::format("{}: expected a number", what));
  return j.get<double>();
}

json num(double x) {
  if (!std::isfinite(x)) return x > 0 ? json("inf") : x < 0 ? json("-inf") : json("nan");
  return json(round_sig12(x));
}

double num_from(const json& j, const char* what) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return INFINITY;
    if (s == "-inf") return -INFINITY;
    if (s == "nan") return NAN;
  }
  return number(j, what);
}

}  // namespace

double round_sig12(double x) {
  if (!std::isfinite(x) || x == 0.0) return x == 0.0 ? 0.0 : x;
  return std::stod(fmt::format("{:.12g}", x));
}

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  return fmt::format("{}", round_sig12(x));
}

json number_json(double x) { return num(x); }

json to_json(const Vector& v) {
  json a = json::array();
  for (Index k = 0; k < v.size(); ++k) a.push_back(num(v(k)));
  return a;
}

json to_json(const Matrix& M) {
  json a = json::array();
  for (Index r = 0; r < M.rows(); ++r) a.push_back(to_json(Vector(M.row(r).transpose())));
  return a;
}

Vector vector_from_json(const json& j) {
  if (!j.is_array()) throw ParseError("expected an array of numbers");
  Vector v(static_cast<Index>(j.size()));
  for (size_t k = 0; k < j.size(); ++k) v(static_cast<Index>(k)) = num_from(j[k], "vector entry");
  return v;
}

Matrix matrix_from_json(const json& j, Index cols) {
  if (!j.is_array()) throw ParseError("expected an array of rows");
  const Index r = static_cast<Index>(j.size());
  if (r == 0) return Matrix(0, std::max<Index>(cols, 0));
  const Index c = static_cast<Index>(j[0].size());
  if (cols >= 0 && c != cols) throw DimensionMismatch(fmt::format("matrix rows have {} entries, expected {}", c, cols));
  Matrix M(r, c);
  for (Index i = 0; i < r; ++i) {
    const Vector row = vector_from_json(j[static_cast<size_t>(i)]);
    if (row.size() != c) throw DimensionMismatch("matrix rows have different lengths");
    M.row(i) = row.transpose();
  }
  return M;
}

json to_json(const HPolyhedron& P) {
  json j;
  j["dim"] = P.dim;
  j["Aeq"] = to_json(P.Aeq);
  j["beq"] = to_json(P.beq);
  j["Ain"] = to_json(P.Ain);
  j["bin"] = to_json(P.bin);
  return j;
}

HPolyhedron polyhedron_from_json(const json& j) {
  require_keys(j, "polyhedron", {"dim"}, {"Aeq", "beq", "Ain", "bin"});
  const Index d = get<Index>(j, "dim", "polyhedron");
  if (d < 0) throw ParseError("polyhedron dim must be non-negative");
  HPolyhedron P(d);
  if (j.contains("Aeq")) P.Aeq = matrix_from_json(j["Aeq"], d);
  if (j.contains("beq")) P.beq = vector_from_json(j["beq"]);
  if (j.contains("Ain")) P.Ain = matrix_from_json(j["Ain"], d);
  if (j.contains("bin")) P.bin = vector_from_json(j["bin"]);
  P.validate();
  return P;
}

json to_json(const Ellipsoid& E) {
  json j;
  j["A"] = to_json(E.A);
  j["c"] = to_json(E.c);
  return j;
}

Ellipsoid ellipsoid_from_json(const json& j) {
  require_keys(j, "ellipsoid", {"A", "c"});
  Ellipsoid E{Matrix(), vector_from_json(j["c"])};
  E.A = matrix_from_json(j["A"], E.c.size());
  E.validate();
  return E;
}

json to_json(const Box& B) {
  json j;
  j["lower"] = to_json(B.lower);
  j["upper"] = to_json(B.upper);
  return j;
}

Box box_from_json(const json& j) {
  require_keys(j, "box", {"lower", "upper"});
  Box B{vector_from_json(j["lower"]), vector_from_json(j["upper"])};
  B.validate();
  return B;
}

json to_json(const ChebyshevBall& b) {
  json j;
  j["center"] = to_json(b.center);
  j["radius"] = num(b.radius);
  return j;
}

json to_json(const TreeProblem& P) {
  json j;
  j["n_x"] = P.n_x;
  json subs = json::array();
  for (const auto& s : P.subsystems) {
    json o;
    o["id"] = s.id;
    o["indices"] = s.indices.indices();
    o["objective"] = {{"Q", to_json(s.objective.Q)}, {"q", to_json(s.objective.q)}, {"constant", num(s.objective.constant)}};
    if (!s.polyhedral()) throw Unsupported(fmt::format("subsystem {} has a nonlinear constraint set", s.id));
    o["constraints"] = to_json(s.polyhedron());
    subs.push_back(o);
  }
  j["subsystems"] = subs;
  return j;
}

TreeProblem problem_from_json(const json& j) {
  require_keys(j, "problem", {"n_x", "subsystems"}, {"root"});
  TreeProblem P;
  P.n_x = get<Index>(j, "n_x", "problem");
  if (!j["subsystems"].is_array()) throw ParseError("problem: subsystems must be an array");
  for (const auto& o : j["subsystems"]) {
    require_keys(o, "subsystem", {"id", "indices", "constraints"}, {"objective"});
    Subsystem s;
    s.id = get<int>(o, "id", "subsystem");
    s.indices = VariableIndexSet(get<std::vector<Index>>(o, "indices", "subsystem"));
    const Index n = s.size();
    s.objective = QuadraticObjective::zero(n);
    if (o.contains("objective")) {
      const auto& ob = o["objective"];
      require_keys(ob, "objective", {}, {"Q", "q", "constant"});
      if (ob.contains("Q")) s.objective.Q = matrix_from_json(ob["Q"], n);
      if (ob.contains("q")) s.objective.q = vector_from_json(ob["q"]);
      if (ob.contains("constant")) s.objective.constant = number(ob["constant"], "objective constant");
    }
    s.constraints = polyhedron_from_json(o["constraints"]);
    P.subsystems.push_back(std::move(s));
  }
  P.validate();
  return P;
}

int root_from_json(const json& j) {
  if (j.contains("root")) return get<int>(j, "root", "problem");
  if (!j.contains("subsystems") || j["subsystems"].empty()) throw ParseError("problem has no subsystems");
  return get<int>(j["subsystems"][0], "id", "subsystem");
}

json to_json(const GridModel& g) {
  json j;
  json buses = json::array(), branches = json::array(), gens = json::array();
  for (const auto& b : g.buses)
    buses.push_back({{"id", b.id}, {"demand_p", num(b.demand_p)}, {"demand_q", num(b.demand_q)}, {"v_min", num(b.v_min)}, {"v_max", num(b.v_max)}});
  for (const auto& b : g.branches)
    branches.push_back({{"from", b.from}, {"to", b.to}, {"g", num(b.g)}, {"b", num(b.b)}, {"s_max", num(b.s_max)}});
  for (const auto& x : g.generators)
    gens.push_back({{"bus", x.bus}, {"p_min", num(x.p_min)}, {"p_max", num(x.p_max)}, {"s_max", num(x.s_max)},
                    {"alpha", num(x.alpha)}, {"cost_c", num(x.cost_c)}, {"cost_d", num(x.cost_d)}});
  j["buses"] = buses;
  j["branches"] = branches;
  j["generators"] = gens;
  j["reference_bus"] = g.reference_bus;
  return j;
}

GridModel grid_from_json(const json& j) {
  require_keys(j, "grid", {"buses", "branches", "generators", "reference_bus"}, {"partition", "description"});
  GridModel g;
  for (const auto& b : j["buses"]) {
    require_keys(b, "bus", {"id"}, {"demand_p", "demand_q", "v_min", "v_max"});
    g.buses.push_back({get<int>(b, "id", "bus"), get_or<double>(b, "demand_p", 0.0, "bus"), get_or<double>(b, "demand_q", 0.0, "bus"),
                       get_or<double>(b, "v_min", 0.95, "bus"), get_or<double>(b, "v_max", 1.05, "bus")});
  }
  for (const auto& b : j["branches"]) {
    require_keys(b, "branch", {"from", "to", "g", "b"}, {"s_max"});
    g.branches.push_back({get<int>(b, "from", "branch"), get<int>(b, "to", "branch"), get<double>(b, "g", "branch"),
                          get<double>(b, "b", "branch"), get_or<double>(b, "s_max", 0.0, "branch")});
  }
  for (const auto& x : j["generators"]) {
    require_keys(x, "generator", {"bus", "p_min", "p_max"}, {"s_max", "alpha", "cost_c", "cost_d"});
    g.generators.push_back({get<int>(x, "bus", "generator"), get<double>(x, "p_min", "generator"), get<double>(x, "p_max", "generator"),
                            get_or<double>(x, "s_max", 0.0, "generator"), get_or<double>(x, "alpha", 0.0, "generator"),
                            get_or<double>(x, "cost_c", 0.0, "generator"), get_or<double>(x, "cost_d", 0.0, "generator")});
  }
  g.reference_bus = get<int>(j, "reference_bus", "grid");
  g.validate();
  return g;
}

PartitionSpec partition_from_json(const json& j, const GridModel& g) {
  PartitionSpec p;
  if (j.contains("partition")) {
    p.bus_sets = get<std::vector<std::vector<int>>>(j, "partition", "grid");
    return p;
  }
  p.bus_sets.push_back({g.reference_bus});
  std::vector<int> rest;
  for (const auto& b : g.buses)
    if (b.id != g.reference_bus) rest.push_back(b.id);
  p.bus_sets.push_back(rest);
  return p;
}

json to_json(const ValueFunctionApprox& v) {
  json j;
  j["kind"] = v.variant_name();
  j["dim"] = v.domain_dim;
  if (const auto* q = std::get_if<QuadraticValue>(&v.form)) {
    j["H"] = to_json(q->H);
    j["h"] = to_json(q->h);
    j["constant"] = num(q->constant);
  } else if (const auto* p = std::get_if<PiecewiseLinearValue>(&v.form)) {
    j["points"] = to_json(p->points);
    j["values"] = to_json(p->values);
    j["slopes"] = to_json(p->slopes);
  }
  return j;
}

json to_json(const FeasibilityReport& r) {
  json j;
  j["feasible"] = r.feasible;
  j["tol"] = num(r.tol);
  j["max_violation"] = num(r.max_violation);
  json per = json::object();
  for (const auto& [id, ev] : r.equality_violation)
    per[std::to_string(id)] = {{"equality", num(ev)}, {"inequality", num(r.inequality_violation.at(id))}};
  j["subsystems"] = per;
  return j;
}

std::string to_csv(const CsvTable& t) {
  std::string out;
  const auto line = [&](const std::vector<std::string>& cells) {
    for (size_t k = 0; k < cells.size(); ++k) {
      if (cells[k].find_first_of(",\"\n") != std::string::npos) throw InvalidArgument("CSV cell needs quoting");
      out += cells[k];
      out += k + 1 < cells.size() ? "," : "\n";
    }
  };
  line(t.header);
  for (const auto& r : t.rows) {
    if (r.size() != t.header.size()) throw DimensionMismatch("CSV row has the wrong number of cells");
    line(r);
  }
  return out;
}

CsvTable csv_from_string(const std::string& text) {
  CsvTable t;
  std::istringstream in(text);
  std::string ln;
  bool first = true;
  while (std::getline(in, ln)) {
    if (ln.empty()) continue;
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(ln);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (!ln.empty() && ln.back() == ',') cells.emplace_back();
    if (first) {
      t.header = cells;
      first = false;
    } else {
      if (cells.size() != t.header.size()) throw ParseError("CSV row has the wrong number of cells");
      t.rows.push_back(cells);
    }
  }
  if (first) throw ParseError("CSV text is empty");
  return t;
}

CsvTable samples_table(const SampleSet& s, const std::vector<std::string>& names) {
  CsvTable t;
  for (Index k = 0; k < s.dim; ++k)
    t.header.push_back(static_cast<size_t>(k) < names.size() ? names[static_cast<size_t>(k)] : fmt::format("z{}", k + 1));
  for (const char* h : {"provenance", "residual", "component", "fixed_value", "direction", "sample_index"}) t.header.emplace_back(h);
  for (const auto& p : s.points) {
    std::vector<std::string> r;
    for (Index k = 0; k < s.dim; ++k) r.push_back(format_number(p.z(k)));
    r.push_back(to_string(p.provenance));
    r.push_back(format_number(p.residual));
    r.push_back(p.provenance == Provenance::GridRefined ? std::to_string(p.component + 1) : "");
    r.push_back(p.provenance == Provenance::GridRefined ? format_number(p.fixed_value) : "");
    r.push_back(p.provenance == Provenance::GridRefined ? std::to_string(p.direction) : "");
    r.push_back(std::to_string(p.sample_index));
    t.rows.push_back(std::move(r));
  }
  return t;
}

SampleSet samples_from_table(const CsvTable& t) {
  if (t.header.size() < 6) throw ParseError("sample table has too few columns");
  SampleSet s;
  s.dim = static_cast<Index>(t.header.size()) - 6;
  try {
    for (const auto& r : t.rows) {
      SamplePoint p;
      p.z.resize(s.dim);
      for (Index k = 0; k < s.dim; ++k) p.z(k) = std::stod(r[static_cast<size_t>(k)]);
      const auto& prov = r[static_cast<size_t>(s.dim)];
      if (prov == "DecisionSampled") p.provenance = Provenance::DecisionSampled;
      else if (prov == "BoundaryLP") p.provenance = Provenance::BoundaryLP;
      else if (prov == "GridRefined") p.provenance = Provenance::GridRefined;
      else throw ParseError(fmt::format("unknown provenance '{}'", prov));
      p.residual = std::stod(r[static_cast<size_t>(s.dim + 1)]);
      if (p.provenance == Provenance::GridRefined) {
        p.component = std::stol(r[static_cast<size_t>(s.dim + 2)]) - 1;
        p.fixed_value = std::stod(r[static_cast<size_t>(s.dim + 3)]);
        p.direction = std::stoi(r[static_cast<size_t>(s.dim + 4)]);
      }
      p.sample_index = std::stol(r[static_cast<size_t>(s.dim + 5)]);
      s.points.push_back(std::move(p));
    }
  } catch (const std::logic_error& e) {
    throw ParseError(fmt::format("sample table: {}", e.what()));
  }
  return s;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument(fmt::format("cannot open '{}'", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json read_json_file(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  try {
    return json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(fmt::format("'{}': {}", path.string(), e.what()));
  }
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidArgument(fmt::format("cannot write '{}'", path.string()));
  out << text;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

}  // namespace treedp::io
