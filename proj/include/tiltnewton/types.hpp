#pragma once

#include <Eigen/Dense>
#include <limits>
#include <stdexcept>
#include <string>

namespace tiltnewton {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Thrown when a set handed to a constructor or projection has no point in it.
struct InfeasibleError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Point fails a required membership test (e.g. tangent cone at an outside point).
struct NotMemberError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Vector fails a normal-cone membership test.
struct NotNormalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// (z, mu) is not a graph point of the normal-cone map in question.
struct NotInGraphError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct UnsupportedSetError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InnerSolveFailed : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SingularSelectionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SubproblemUnboundedError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NotStationaryError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigInvalidError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DimensionMismatchError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline void require_dim(bool ok, const std::string& what) {
  if (!ok) throw DimensionMismatchError("dimension mismatch: " + what);
}

}  // namespace tiltnewton
