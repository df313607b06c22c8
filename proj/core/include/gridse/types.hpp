#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <vector>

namespace gridse {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Sensor/state index sets are kept sorted ascending throughout.
using IndexSet = std::vector<int>;

/// Bad input data: unparsable files, dimension mismatches, invalid parameters.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Failures of the numerics themselves: singular systems, infeasible
/// constructions, exhausted searches.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Rows of `m` selected by `idx`, in the order given.
Matrix select_rows(const Matrix& m, const IndexSet& idx);

/// Entries of `v` selected by `idx`, in the order given.
Vector select_entries(const Vector& v, const IndexSet& idx);

bool contains(const IndexSet& set, int value);

}  // namespace gridse
