#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace treedp::cli {

struct Common {
  std::uint64_t seed = 42;
  double tol = 1e-6;
  int threads = 1;
};

struct SolveOptions {
  std::string in;
  std::string out;
  std::string variant = "exact";
  std::string value = "zero";
};

struct ProjectOptions {
  std::string in;
  std::string out;
  std::vector<long> keep;
};

struct CenterOptions {
  std::string in;
  std::string out;
  std::string variant = "ellipsoid";
};

struct SampleOptions {
  std::string in;
  std::string out;
  std::string model = "ac";
  double voltage = 1.0;
  long n = 2000;
  long grid = 19;
};

struct OcpOptions {
  std::string out = "ocp_demo";
  std::string variant = "exact";
  std::string value = "zero";
  long ellipsoid_stage = 1;
  bool widen = false;
};

struct OpfOptions {
  std::string in;
  std::string out;
  std::string model = "dc";
  double voltage = 1.0;
  std::vector<double> sweep;
  long n = 2000;
  long points = 0;
};

struct ValueFnOptions {
  std::string in;
  std::string out;
  int subsystem = 0;
  long points = 50;
};

int run_solve(const SolveOptions& o, const Common& c);
int run_project(const ProjectOptions& o, const Common& c);
int run_center(const CenterOptions& o, const Common& c);
int run_sample(const SampleOptions& o, const Common& c);
int run_ocp(const OcpOptions& o, const Common& c);
int run_opf(const OpfOptions& o, const Common& c);
int run_value_fn(const ValueFnOptions& o, const Common& c);

}  // namespace treedp::cli
