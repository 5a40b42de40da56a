#pragma once

#include <stdexcept>
#include <string>

namespace nsdde {

// Process exit codes used by the CLI; library errors carry the code they map to.
enum class ExitCode : int {
  Ok = 0,
  Failure = 1,       // anything without a dedicated code (invalid coefficient, I/O, ...)
  Schema = 2,
  Guard = 3,
  Solver = 4,
  GridMismatch = 5,
};

class Error : public std::runtime_error {
 public:
  Error(ExitCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ExitCode code() const noexcept { return code_; }

 private:
  ExitCode code_;
};

// Malformed configuration or out-of-range parameter.
class SchemaError : public Error {
 public:
  explicit SchemaError(const std::string& what) : Error(ExitCode::Schema, what) {}
};

// Configured step size violates an admissibility bound in Strict mode.
class GuardError : public Error {
 public:
  explicit GuardError(const std::string& what) : Error(ExitCode::Guard, what) {}
};

// Implicit step solver exhausted its iteration budget.
class SolverError : public Error {
 public:
  SolverError(const std::string& what, int iterations, double last_residual,
              long long step_index = -1)
      : Error(ExitCode::Solver, what),
        iterations(iterations),
        last_residual(last_residual),
        step_index(step_index) {}
  int iterations;
  double last_residual;
  long long step_index;  // -1 when the failure is not tied to a scheme step
};

// Incompatible grids: non-divisible coarsening factor or level/delay mismatch.
class GridMismatchError : public Error {
 public:
  explicit GridMismatchError(const std::string& what) : Error(ExitCode::GridMismatch, what) {}
};

// A coefficient evaluated to a non-finite value; message names the point.
class InvalidCoefficientError : public Error {
 public:
  explicit InvalidCoefficientError(const std::string& what) : Error(ExitCode::Failure, what) {}
};

}  // namespace nsdde
