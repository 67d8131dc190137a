#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace fllr {

/// Inputs defined on different grids were combined.
class GridMismatchError : public std::invalid_argument {
 public:
  GridMismatchError() : std::invalid_argument("curves are defined on different grids") {}
};

/// Requested more basis functions than the data covariance supports.
class RankError : public std::invalid_argument {
 public:
  RankError(std::size_t requested, std::size_t rank)
      : std::invalid_argument("requested " + std::to_string(requested) +
                              " basis functions but the covariance has rank " +
                              std::to_string(rank)),
        requested_(requested),
        rank_(rank) {}
  std::size_t requested() const noexcept { return requested_; }
  std::size_t rank() const noexcept { return rank_; }

 private:
  std::size_t requested_;
  std::size_t rank_;
};

/// A weighted local least-squares fit was rank deficient or too poorly
/// conditioned. condition() is +inf when the support was too small.
class SingularFitError : public std::runtime_error {
 public:
  SingularFitError(const std::string& what, double condition)
      : std::runtime_error(what), condition_(condition) {}
  double condition() const noexcept { return condition_; }

 private:
  double condition_;
};

/// The box-constrained least-squares solver hit its iteration cap.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(std::vector<double> last_iterate, double residual)
      : std::runtime_error("bounded least squares did not converge (KKT residual " +
                           std::to_string(residual) + ")"),
        last_iterate_(std::move(last_iterate)),
        residual_(residual) {}
  const std::vector<double>& last_iterate() const noexcept { return last_iterate_; }
  double residual() const noexcept { return residual_; }

 private:
  std::vector<double> last_iterate_;
  double residual_;
};

/// Malformed dataset input. Row and column are 1-based; 0 means "not applicable".
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& file, std::size_t row, std::size_t column, const std::string& msg)
      : std::runtime_error(file + ":" + std::to_string(row) + ":" + std::to_string(column) + ": " +
                           msg),
        row_(row),
        column_(column) {}
  std::size_t row() const noexcept { return row_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t row_;
  std::size_t column_;
};

}  // namespace fllr
