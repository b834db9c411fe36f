#include "clickbait/metrics.hpp"

#include <cstdio>

#include "json.hpp"

#include "clickbait/errors.hpp"

namespace clickbait {

MetricsReport compute_metrics(std::span<const double> probabilities, std::span<const double> labels,
                              double threshold) {
  if (probabilities.size() != labels.size()) {
    throw InvalidArgument("compute_metrics: " + std::to_string(probabilities.size()) + " predictions but " +
                          std::to_string(labels.size()) + " labels");
  }
  if (probabilities.empty()) throw InvalidArgument("compute_metrics: no predictions");

  MetricsReport r;
  double squared = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double y = labels[i];
    if (y != 0.0 && y != 1.0) throw InvalidArgument("compute_metrics: label must be 0 or 1");
    const bool predicted = probabilities[i] >= threshold;
    const bool actual = y == 1.0;
    if (predicted && actual) {
      ++r.tp;
    } else if (predicted) {
      ++r.fp;
    } else if (actual) {
      ++r.fn;
    } else {
      ++r.tn;
    }
    const double d = probabilities[i] - y;
    squared += d * d;
  }
  const double n = static_cast<double>(labels.size());
  if (r.tp + r.fp > 0) {
    r.precision = static_cast<double>(r.tp) / static_cast<double>(r.tp + r.fp);
  } else {
    r.warnings.emplace_back("precision undefined (no positive predictions); reported as 0");
  }
  if (r.tp + r.fn > 0) {
    r.recall = static_cast<double>(r.tp) / static_cast<double>(r.tp + r.fn);
  } else {
    r.warnings.emplace_back("recall undefined (no positive labels); reported as 0");
  }
  if (r.precision + r.recall > 0.0) r.f1 = 2.0 * r.precision * r.recall / (r.precision + r.recall);
  r.accuracy = static_cast<double>(r.tp + r.tn) / n;
  r.mse = squared / n;
  return r;
}

std::string report_to_json(const MetricsReport& report) {
  nlohmann::ordered_json j;
  j["counts"] = {{"tp", report.tp}, {"fp", report.fp}, {"tn", report.tn}, {"fn", report.fn}};
  j["precision"] = report.precision;
  j["recall"] = report.recall;
  j["f1"] = report.f1;
  j["accuracy"] = report.accuracy;
  j["mse"] = report.mse;
  return j.dump();
}

std::string report_to_text(const MetricsReport& report) {
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "records    %zu\n"
                "tp         %zu\n"
                "fp         %zu\n"
                "tn         %zu\n"
                "fn         %zu\n"
                "precision  %.6f\n"
                "recall     %.6f\n"
                "f1         %.6f\n"
                "accuracy   %.6f\n"
                "mse        %.6f\n",
                report.count(), report.tp, report.fp, report.tn, report.fn, report.precision, report.recall,
                report.f1, report.accuracy, report.mse);
  return buf;
}

}  // namespace clickbait
