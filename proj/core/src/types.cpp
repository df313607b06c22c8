#include "gridse/types.hpp"

#include <algorithm>

namespace gridse {

Matrix select_rows(const Matrix& m, const IndexSet& idx) {
  Matrix out(static_cast<Eigen::Index>(idx.size()), m.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = m.row(idx[i]);
  }
  return out;
}

Vector select_entries(const Vector& v, const IndexSet& idx) {
  Vector out(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) {
    out(static_cast<Eigen::Index>(i)) = v(idx[i]);
  }
  return out;
}

bool contains(const IndexSet& set, int value) {
  return std::binary_search(set.begin(), set.end(), value);
}

}  // namespace gridse
