#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace clickbait {

/// Confusion counts for the clickbait (positive) class and the scores derived
/// from them. A zero denominator yields 0 and a warning.
struct MetricsReport {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;
  std::size_t fn = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double accuracy = 0.0;
  double mse = 0.0;  // raw probabilities against 0/1 labels
  std::vector<std::string> warnings;

  std::size_t count() const { return tp + fp + tn + fn; }
};

/// p >= threshold counts as clickbait. Throws InvalidArgument on empty or
/// mismatched inputs and on labels other than 0 and 1.
MetricsReport compute_metrics(std::span<const double> probabilities, std::span<const double> labels,
                              double threshold = 0.5);

/// {"counts":{"tp","fp","tn","fn"},"precision","recall","f1","accuracy","mse"}
std::string report_to_json(const MetricsReport& report);

/// Aligned human-readable table, six decimals.
std::string report_to_text(const MetricsReport& report);

}  // namespace clickbait
