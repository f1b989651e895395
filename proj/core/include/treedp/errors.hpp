#pragma once

#include <stdexcept>
#include <string>

namespace treedp {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or unsupported input (CLI exit code 2).
class InputError : public Error {
 public:
  using Error::Error;
};

// Well-formed input whose mathematical content is infeasible, empty or
// unbounded (CLI exit code 1).
class DomainError : public Error {
 public:
  using Error::Error;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

#define TREEDP_ERROR(Name, Base)                  \
  class Name : public Base {                      \
   public:                                        \
    explicit Name(const std::string& what)        \
        : Base(std::string(#Name ": ") + what) {} \
  };

TREEDP_ERROR(InvalidArgument, InputError)
TREEDP_ERROR(DimensionMismatch, InputError)
TREEDP_ERROR(NotATree, InputError)
TREEDP_ERROR(Unsupported, InputError)
TREEDP_ERROR(ParseError, InputError)
TREEDP_ERROR(MultipleInterconnections, InputError)

TREEDP_ERROR(InconsistentEqualities, DomainError)
TREEDP_ERROR(EmptyPolyhedron, DomainError)
TREEDP_ERROR(UnboundedRadius, DomainError)
TREEDP_ERROR(EmptyOrLowerDimensional, DomainError)
TREEDP_ERROR(UnboundedSet, DomainError)
TREEDP_ERROR(DegenerateImage, DomainError)
TREEDP_ERROR(NoFeasibleSamples, DomainError)
TREEDP_ERROR(DegenerateHull, DomainError)
TREEDP_ERROR(ComponentUnbounded, DomainError)
TREEDP_ERROR(InfeasibleSet, DomainError)

TREEDP_ERROR(NumericalFailure, NumericalError)
TREEDP_ERROR(SingularJacobian, NumericalError)

#undef TREEDP_ERROR

class EmptyCouplingSet : public DomainError {
 public:
  EmptyCouplingSet(int id, const std::string& what)
      : DomainError("EmptyCouplingSet: subsystem " + std::to_string(id) + ": " + what), id_(id) {}
  int id() const { return id_; }

 private:
  int id_;
};

class SubproblemInfeasible : public DomainError {
 public:
  SubproblemInfeasible(int id, const std::string& what)
      : DomainError("SubproblemInfeasible: subsystem " + std::to_string(id) + ": " + what), id_(id) {}
  int id() const { return id_; }

 private:
  int id_;
};

}  // namespace treedp
