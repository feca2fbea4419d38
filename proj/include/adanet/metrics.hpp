#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>

namespace adanet::metrics {

struct ConfusionCounts {
  std::uint64_t tp = 0, tn = 0, fp = 0, fn = 0;

  [[nodiscard]] std::uint64_t total() const { return tp + tn + fp + fn; }
  ConfusionCounts& operator+=(const ConfusionCounts& o);
  friend ConfusionCounts operator+(ConfusionCounts a, const ConfusionCounts& b) { return a += b; }
  friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

// Adds per-pixel counts of two binary masks. DimensionError on a length
// mismatch, DomainError on a value other than 0 or 1.
ConfusionCounts confusion_accumulate(ConfusionCounts counts, std::span<const std::uint8_t> predicted,
                                     std::span<const std::uint8_t> truth);

// Undefined ratios (0/0) are std::nullopt.
struct MetricReport {
  std::optional<double> dice, f2, iou, accuracy, precision, specificity, sensitivity;
};

// F_a = (1 + a^2) P S / (a^2 P + S). ContractError on an empty accumulator.
MetricReport metrics_compute(const ConfusionCounts& counts, double a = 2.0);

// Columns: Dice, F2, IoU, Accuracy, Precision, Specificity, Sensitivity.
std::string report_csv_header();
std::string report_csv_row(const MetricReport& r);
std::string report_table(const MetricReport& r);

}  // namespace adanet::metrics
