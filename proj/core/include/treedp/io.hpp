#pragma once

#include "treedp/centering.hpp"
#include "treedp/dp.hpp"
#include "treedp/grid.hpp"
#include "treedp/opf.hpp"
#include "treedp/polyhedra.hpp"
#include "treedp/sampling.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace treedp::io {

using json = nlohmann::ordered_json;

// Rounds to 12 significant digits; the shortest representation of the result
// is what the writers emit.
double round_sig12(double x);
std::string format_number(double x);
// Rounded number, or "inf" / "-inf" / "nan".
json number_json(double x);

json to_json(const Vector& v);
json to_json(const Matrix& M);
Vector vector_from_json(const json& j);
Matrix matrix_from_json(const json& j, Index cols = -1);

json to_json(const HPolyhedron& P);
HPolyhedron polyhedron_from_json(const json& j);

json to_json(const Ellipsoid& E);
Ellipsoid ellipsoid_from_json(const json& j);
json to_json(const Box& B);
Box box_from_json(const json& j);
json to_json(const ChebyshevBall& b);

json to_json(const TreeProblem& P);
// Polyhedral subsystems only; "root" is optional and defaults to the first subsystem.
TreeProblem problem_from_json(const json& j);
int root_from_json(const json& j);

json to_json(const GridModel& g);
GridModel grid_from_json(const json& j);
// "partition" key of a grid file, or the upper level {reference_bus} plus the rest.
PartitionSpec partition_from_json(const json& j, const GridModel& g);

json to_json(const ValueFunctionApprox& v);
json to_json(const FeasibilityReport& r);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

std::string to_csv(const CsvTable& t);
CsvTable csv_from_string(const std::string& text);

CsvTable samples_table(const SampleSet& s, const std::vector<std::string>& names = {});
SampleSet samples_from_table(const CsvTable& t);

json read_json_file(const std::filesystem::path& path);
std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);
// Pretty-printed with two-space indent and trailing newline.
std::string dump(const json& j);

}  // namespace treedp::io
