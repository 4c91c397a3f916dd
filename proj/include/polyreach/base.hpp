#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace polyreach {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

struct DimensionMismatch : Error {
  explicit DimensionMismatch(const std::string& what) : Error("DimensionMismatch: " + what) {}
};
struct EmptySetError : Error {
  explicit EmptySetError(const std::string& what) : Error("EmptySet: " + what) {}
};
struct UnboundedError : Error {
  explicit UnboundedError(const std::string& what) : Error("Unbounded: " + what) {}
};
struct NotCSet : Error {
  explicit NotCSet(const std::string& what) : Error("NotCSet: " + what) {}
};
struct NumericalFailure : Error {
  explicit NumericalFailure(const std::string& what) : Error("NumericalFailure: " + what) {}
};
struct EnumerationOverflow : Error {
  explicit EnumerationOverflow(const std::string& what) : Error("EnumerationOverflow: " + what) {}
};
struct DualInfeasible : Error {
  explicit DualInfeasible(const std::string& what) : Error("DualInfeasible: " + what) {}
};
struct InvalidDwell : Error {
  explicit InvalidDwell(const std::string& what) : Error("InvalidDwell: " + what) {}
};
struct IndexOutOfRange : Error {
  explicit IndexOutOfRange(const std::string& what) : Error("IndexOutOfRange: " + what) {}
};
struct Uncontrollable : Error {
  explicit Uncontrollable(const std::string& what) : Error("Uncontrollable: " + what) {}
};
struct EmptyConstraintSet : Error {
  explicit EmptyConstraintSet(const std::string& what) : Error("EmptyConstraintSet: " + what) {}
};
struct InitialStateOutsideZ : Error {
  explicit InitialStateOutsideZ(const std::string& what) : Error("InitialStateOutsideZ: " + what) {}
};
struct NotSubset : Error {
  explicit NotSubset(const std::string& what) : Error("NotSubset: " + what) {}
};
struct NominalEmpty : Error {
  explicit NominalEmpty(const std::string& what) : Error("NominalEmpty: " + what) {}
};
// Invalid scenario/config input; `path` points at the offending JSON
// location (empty when the failure is not tied to a specific field).
struct SchemaError : Error {
  std::string path;
  explicit SchemaError(const std::string& what) : Error("SchemaError: " + what) {}
  SchemaError(std::string where, const std::string& what)
      : Error("schema error at '" + where + "': " + what), path(std::move(where)) {}
};

// Numerical knobs shared across the library.  All set operations take these
// explicitly so runs are reproducible from a scenario file alone.
struct Tolerances {
  double eps_feas = 1e-9;      // LP feasibility / duality slack
  double eps_set = 1e-7;       // set containment and fixed-point detection
  double eps_vol = 0.02;       // relative Monte-Carlo volume error target
  int mc_samples = 10000;      // Monte-Carlo sample budget
  int max_union = 64;          // union piece cap before fallback
  std::uint64_t rng_seed = 12345;
};

}  // namespace polyreach
