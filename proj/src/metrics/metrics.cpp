#include "adanet/metrics.hpp"

#include <cstdio>

#include "adanet/errors.hpp"

namespace adanet::metrics {

ConfusionCounts& ConfusionCounts::operator+=(const ConfusionCounts& o) {
  tp += o.tp;
  tn += o.tn;
  fp += o.fp;
  fn += o.fn;
  return *this;
}

ConfusionCounts confusion_accumulate(ConfusionCounts counts, std::span<const std::uint8_t> predicted,
                                     std::span<const std::uint8_t> truth) {
  if (predicted.size() != truth.size()) {
    throw DimensionError("confusion_accumulate: mask sizes differ (" + std::to_string(predicted.size()) + " vs " +
                         std::to_string(truth.size()) + ")");
  }
  ConfusionCounts add;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const std::uint8_t p = predicted[i], t = truth[i];
    if (p > 1 || t > 1) throw DomainError("confusion_accumulate: masks must be binary");
    if (p && t) ++add.tp;
    else if (p) ++add.fp;
    else if (t) ++add.fn;
    else ++add.tn;
  }
  return counts += add;
}

namespace {

std::optional<double> ratio(double num, double den) {
  if (den == 0.0) return std::nullopt;
  return num / den;
}

}  // namespace

MetricReport metrics_compute(const ConfusionCounts& c, double a) {
  if (c.total() == 0) throw ContractError("metrics_compute: no pixels accumulated");
  const double tp = static_cast<double>(c.tp), tn = static_cast<double>(c.tn);
  const double fp = static_cast<double>(c.fp), fn = static_cast<double>(c.fn);
  MetricReport r;
  r.iou = ratio(tp, tp + fp + fn);
  r.dice = ratio(2 * tp, 2 * tp + fp + fn);
  r.accuracy = ratio(tp + tn, tp + tn + fp + fn);
  r.specificity = ratio(tn, tn + fp);
  r.sensitivity = ratio(tp, tp + fn);
  r.precision = ratio(tp, tp + fp);
  if (r.precision && r.sensitivity) {
    const double p = *r.precision, s = *r.sensitivity;
    r.f2 = ratio((1 + a * a) * p * s, a * a * p + s);
  }
  return r;
}

namespace {

std::string fmt(const std::optional<double>& v) {
  if (!v) return "NA";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", *v);
  return buf;
}

}  // namespace

std::string report_csv_header() { return "Dice,F2,IoU,Accuracy,Precision,Specificity,Sensitivity"; }

std::string report_csv_row(const MetricReport& r) {
  return fmt(r.dice) + "," + fmt(r.f2) + "," + fmt(r.iou) + "," + fmt(r.accuracy) + "," + fmt(r.precision) + "," +
         fmt(r.specificity) + "," + fmt(r.sensitivity);
}

std::string report_table(const MetricReport& r) {
  const char* names[] = {"Dice", "F2", "IoU", "Accuracy", "Precision", "Specificity", "Sensitivity"};
  const std::optional<double>* vals[] = {&r.dice, &r.f2, &r.iou, &r.accuracy, &r.precision, &r.specificity,
                                         &r.sensitivity};
  std::string head, row;
  char buf[32];
  for (int i = 0; i < 7; ++i) {
    std::snprintf(buf, sizeof buf, "%12s", names[i]);
    head += buf;
    std::snprintf(buf, sizeof buf, "%12s", fmt(*vals[i]).c_str());
    row += buf;
  }
  return head + "\n" + row + "\n";
}

}  // namespace adanet::metrics
