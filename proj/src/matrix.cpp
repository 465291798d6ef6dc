#include "sdgnn/matrix.hpp"

#include <algorithm>
#include <stdexcept>

namespace sdgnn {

void row_times(std::span<const double> row, const Matrix& m, std::span<double> out) {
  if (row.size() != m.rows() || out.size() != m.cols()) {
    throw std::invalid_argument("row_times: dimension mismatch");
  }
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t k = 0; k < row.size(); ++k) {
    const double a = row[k];
    if (a == 0.0) continue;
    auto w = m.row(k);
    for (std::size_t c = 0; c < out.size(); ++c) out[c] += a * w[c];
  }
}

}  // namespace sdgnn
