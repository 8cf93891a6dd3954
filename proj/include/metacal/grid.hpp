#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace metacal {

/// Dense row-major time x segment grid.
struct Grid {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  Grid() = default;
  Grid(int r, int c, double fill = 0.0)
      : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, fill) {}

  double& at(int t, int s) { return data[static_cast<std::size_t>(t) * cols + s]; }
  double at(int t, int s) const { return data[static_cast<std::size_t>(t) * cols + s]; }

  bool same_shape(const Grid& other) const {
    return rows == other.rows && cols == other.cols;
  }
};

} // namespace metacal
