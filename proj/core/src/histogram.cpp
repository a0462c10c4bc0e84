#include "prosobench/histogram.hpp"

#include <cmath>
#include <limits>

#include "prosobench/error.hpp"
#include "prosobench/text.hpp"

namespace prosobench {

std::size_t HistogramReport::total() const {
  std::size_t n = 0;
  for (const auto& b : bins) n += b.count;
  return n;
}

std::string HistogramReport::to_csv() const {
  std::string out = "bin_low,bin_high,count\n";
  for (const auto& b : bins) {
    out += text::format_fixed(b.low, 2) + "," + (std::isinf(b.high) ? std::string("inf") : text::format_fixed(b.high, 2)) +
           "," + std::to_string(b.count) + "\n";
  }
  return out;
}

HistogramReport make_histogram(std::span<const double> values, double width, double upper, double threshold,
                               const std::string& module) {
  if (values.empty()) throw EmptyInput("histogram of zero records", module);
  if (!(width > 0.0) || !(upper > 0.0)) throw InvalidArgument(module, "histogram width and range must be positive");

  const auto n_regular = static_cast<std::size_t>(std::llround(upper / width));
  HistogramReport report;
  report.threshold = threshold;
  report.bins.resize(n_regular + 1);
  for (std::size_t i = 0; i < n_regular; ++i) {
    report.bins[i].low = static_cast<double>(i) * width;
    report.bins[i].high = static_cast<double>(i + 1) * width;
  }
  report.bins.back().low = static_cast<double>(n_regular) * width;
  report.bins.back().high = std::numeric_limits<double>::infinity();

  for (double v : values) {
    std::size_t idx;
    if (v >= upper) {
      idx = n_regular;
    } else if (v <= 0.0) {
      idx = 0;
    } else {
      // Bin edges are i*width; guard against v/width landing a hair below
      // an integer for values sitting exactly on an edge (0.6/0.05 -> 11.99..).
      auto i = static_cast<std::size_t>(std::floor(v / width + 1e-9));
      idx = std::min(i, n_regular - 1);
    }
    ++report.bins[idx].count;
    (v < threshold ? report.below_threshold : report.at_or_above_threshold)++;
  }
  return report;
}

}  // namespace prosobench
