#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace prosobench {

struct HistogramBin {
  double low = 0.0;
  double high = 0.0;  // +inf for the overflow bin
  std::size_t count = 0;
};

/// Fixed-width histogram over [0, upper) with one overflow bin above and a
/// marked threshold. Values below 0 are clamped into the first bin.
struct HistogramReport {
  std::vector<HistogramBin> bins;
  double threshold = 0.0;
  std::size_t below_threshold = 0;
  std::size_t at_or_above_threshold = 0;

  std::size_t total() const;
  /// `bin_low,bin_high,count` with a header row.
  std::string to_csv() const;
};

HistogramReport make_histogram(std::span<const double> values, double width, double upper, double threshold,
                               const std::string& module);

}  // namespace prosobench
