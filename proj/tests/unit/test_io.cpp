#include "treedp/errors.hpp"
#include "treedp/io.hpp"
#include "treedp/ocp.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

using namespace treedp;
using io::json;

TEST(Numbers, TwelveSignificantDigits) {
  EXPECT_EQ(io::format_number(0.1 + 0.2), "0.3");
  EXPECT_EQ(io::format_number(1.0 / 3.0), "0.333333333333");
  EXPECT_EQ(io::format_number(-2.0), "-2");
  EXPECT_DOUBLE_EQ(io::round_sig12(123456789.123456789), 123456789.123);
}

TEST(Numbers, NonFinite) {
  EXPECT_EQ(io::number_json(std::numeric_limits<double>::infinity()), json("inf"));
  EXPECT_EQ(io::number_json(-std::numeric_limits<double>::infinity()), json("-inf"));
  Vector v(2);
  v << 1.0, std::numeric_limits<double>::infinity();
  EXPECT_TRUE(std::isinf(io::vector_from_json(io::to_json(v))(1)));
}

TEST(Polyhedron, RoundTrip) {
  Matrix Aeq(1, 2);
  Aeq << 1, 1;
  const HPolyhedron P(Aeq, Vector::Ones(1), Matrix::Identity(2, 2), (Vector(2) << 0.25, 2).finished());
  const auto Q = io::polyhedron_from_json(json::parse(io::dump(io::to_json(P))));
  EXPECT_EQ(Q.dim, 2);
  EXPECT_TRUE(Q.Aeq.isApprox(P.Aeq));
  EXPECT_TRUE(Q.bin.isApprox(P.bin));
}

TEST(Polyhedron, UnknownKeyRejected) {
  const auto j = json::parse(R"({"dim": 1, "Ain": [[1]], "bin": [1], "extra": 0})");
  EXPECT_THROW(io::polyhedron_from_json(j), ParseError);
}

TEST(Polyhedron, ShapeMismatchRejected) {
  const auto j = json::parse(R"({"dim": 2, "Ain": [[1]], "bin": [1]})");
  EXPECT_THROW(io::polyhedron_from_json(j), InputError);
}

TEST(Problem, RoundTrip) {
  const auto [p, topo] = ocp_to_tree(LtiOcpSpec::reference_instance());
  const auto j = io::to_json(p);
  const auto q = io::problem_from_json(json::parse(io::dump(j)));
  ASSERT_EQ(q.subsystems.size(), p.subsystems.size());
  EXPECT_EQ(q.n_x, p.n_x);
  for (size_t k = 0; k < p.subsystems.size(); ++k) {
    EXPECT_EQ(q.subsystems[k].indices, p.subsystems[k].indices);
    EXPECT_TRUE(q.subsystems[k].objective.Q.isApprox(p.subsystems[k].objective.Q));
  }
  EXPECT_EQ(io::dump(io::to_json(q)), io::dump(j));
}

TEST(Grid, ShippedRoundTrip) {
  const auto j = io::read_json_file(std::string(TREEDP_DATA_DIR) + "/feeder18.json");
  const auto g = io::grid_from_json(j);
  EXPECT_EQ(g.n_bus(), 18);
  EXPECT_EQ(g.branches.size(), 17u);
  const auto h = io::grid_from_json(io::to_json(g));
  EXPECT_EQ(io::dump(io::to_json(h)), io::dump(io::to_json(g)));
  const auto part = io::partition_from_json(j, g);
  ASSERT_EQ(part.bus_sets.size(), 2u);
  EXPECT_EQ(part.bus_sets[0], std::vector<int>{18});
}

TEST(Grid, MatchesBuiltInFeeder) {
  const auto j = io::read_json_file(std::string(TREEDP_DATA_DIR) + "/feeder18.json");
  EXPECT_EQ(io::dump(io::to_json(io::grid_from_json(j))), io::dump(io::to_json(feeder18())));
}

TEST(Csv, SamplesRoundTrip) {
  SampleSet s;
  s.dim = 2;
  SamplePoint a;
  a.z = (Vector(2) << 0.5, -0.25).finished();
  a.residual = 1e-12;
  SamplePoint b = a;
  b.provenance = Provenance::GridRefined;
  b.component = 0;
  b.fixed_value = 0.5;
  b.direction = -1;
  b.sample_index = 3;
  s.points = {a, b};
  const auto text = io::to_csv(io::samples_table(s, {"p", "q"}));
  const auto back = io::samples_from_table(io::csv_from_string(text));
  ASSERT_EQ(back.points.size(), 2u);
  EXPECT_EQ(back.points[1].provenance, Provenance::GridRefined);
  EXPECT_EQ(back.points[1].component, 0);
  EXPECT_EQ(back.points[1].direction, -1);
  EXPECT_EQ(io::to_csv(io::samples_table(back, {"p", "q"})), text);
}

TEST(Files, MissingFileIsInputError) { EXPECT_THROW(io::read_json_file("/nonexistent/file.json"), InputError); }
