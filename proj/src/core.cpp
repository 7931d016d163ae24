#include "sbts/core.hpp"

namespace sbts {

TimeGrid make_time_grid(std::span<const double> dates) { return TimeGrid::make(dates); }

Dataset validate_dataset(const TimeGrid& grid, Index dim, std::span<const std::vector<double>> rows) {
  if (rows.empty()) throw InvalidData(Violation::EmptyDataset, "dataset needs at least one path");
  if (dim < 1) throw InvalidData(Violation::BadDimension, "dataset dimension must be at least 1");
  const Index width = grid.size() * dim;
  RowMatrixXd values(static_cast<Index>(rows.size()), width);
  for (std::size_t m = 0; m < rows.size(); ++m) {
    const auto& r = rows[m];
    if (static_cast<Index>(r.size()) != width) {
      throw InvalidData(Violation::LengthMismatch, "path " + std::to_string(m) + " has " + std::to_string(r.size()) +
                                                       " values, expected N*d = " + std::to_string(width));
    }
    for (Index c = 0; c < width; ++c) values(static_cast<Index>(m), c) = r[static_cast<std::size_t>(c)];
  }
  return Dataset(grid, dim, std::move(values));
}

void require_compatible(const Dataset& a, const Dataset& b) {
  if (!(a.grid() == b.grid())) throw Error(ErrorCategory::GridMismatch, "datasets are observed on different time grids");
  if (a.dim() != b.dim()) throw Error(ErrorCategory::GridMismatch, "datasets have different dimensions");
}

}  // namespace sbts
