#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace perorbit {

using Vec = Eigen::VectorXd;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using CVec = Eigen::VectorXcd;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr const char* kVersion = "1.0.0";

enum class ErrorCode {
  invalid_argument = 1,
  parse = 2,
  not_converged = 3,
  numerical = 4,
  io = 5,
};

/// Exception type used across the core; the C API maps `code()` onto status values.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& msg) { throw Error(code, msg); }

inline void require(bool cond, const std::string& msg) {
  if (!cond) fail(ErrorCode::invalid_argument, msg);
}

}  // namespace perorbit
