#pragma once

#include <stdexcept>
#include <string>

namespace jumplq {

// Everything the library throws on purpose derives from Error, so callers
// can catch one type at the boundary and still switch on the specific kind.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DimensionMismatch : Error { using Error::Error; };
struct NonInvertibleJumpMap : Error { using Error::Error; };
struct BadGrid : Error { using Error::Error; };
struct BadProbabilities : Error { using Error::Error; };
struct ShapeMismatch : Error { using Error::Error; };

struct NonFiniteState : Error {
  NonFiniteState(int path_, double time_)
      : Error("non-finite state on path " + std::to_string(path_) +
              " at t=" + std::to_string(time_)),
        path(path_), time(time_) {}
  int path;
  double time;
};

// Raised when the control-weight aggregate N(t) loses its positive floor
// during the backward sweep; carries the first offending stage time.
struct NotUniformlyConvex : Error {
  NotUniformlyConvex(double t_, double min_eig_)
      : Error("uniform convexity fails: min eig N = " + std::to_string(min_eig_) +
              " at t=" + std::to_string(t_)),
        t(t_), min_eig(min_eig_) {}
  double t;
  double min_eig;
};

struct NonFiniteKernel : Error { using Error::Error; };
struct SingularInnerMatrix : Error { using Error::Error; };
struct OutOfRange : Error { using Error::Error; };
struct ParseError : Error { using Error::Error; };
struct SchemaError : Error { using Error::Error; };

}  // namespace jumplq
