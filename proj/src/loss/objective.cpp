#include "adanet/loss/objective.hpp"

#include <charconv>

#include "adanet/errors.hpp"
#include "adanet/ops.hpp"

namespace adanet::loss {

std::string_view preset_name(Preset p) {
  switch (p) {
    case Preset::kAdanet: return "adanet";
    case Preset::kCut: return "cut";
    case Preset::kFastCut: return "fastcut";
    case Preset::kCycleGan: return "cyclegan";
  }
  return "?";
}

Preset parse_preset(std::string_view s) {
  for (Preset p : {Preset::kAdanet, Preset::kCut, Preset::kFastCut, Preset::kCycleGan}) {
    if (preset_name(p) == s) return p;
  }
  throw ConfigError("unknown preset '" + std::string(s) + "' (adanet, cut, fastcut, cyclegan)");
}

std::string_view flavor_name(GanFlavor f) {
  return f == GanFlavor::kLeastSquares ? "least_squares" : "nonsaturating_bce";
}

GanFlavor parse_flavor(std::string_view s) {
  if (s == "least_squares") return GanFlavor::kLeastSquares;
  if (s == "nonsaturating_bce") return GanFlavor::kNonSaturatingBce;
  throw ParameterError("unknown gan flavor '" + std::string(s) + "'");
}

void LossWeights::validate() const {
  for (double v : {spatial, id_spatial, freq, id_freq, cycle}) {
    if (!(v >= 0.0)) throw ParameterError("loss weights must be non-negative");
  }
  if (!(tau > 0.0)) throw ParameterError("temperature must be positive");
}

LossWeights preset_weights(Preset p) {
  LossWeights w;
  switch (p) {
    case Preset::kAdanet: break;
    case Preset::kCut: w = {1.0, 1.0, 0.0, 0.0, 0.0}; break;
    case Preset::kFastCut: w = {1.0, 0.0, 0.0, 0.0, 0.0}; break;
    case Preset::kCycleGan: w = {0.0, 0.0, 0.0, 0.0, 10.0}; break;
  }
  return w;
}

template <typename T>
Tensor<T> adversarial_loss(const Tensor<T>& real_logits, const Tensor<T>& fake_logits, Role role, GanFlavor flavor) {
  if (!fake_logits.defined()) throw ContractError("adversarial_loss: fake logits are required");
  if (role == Role::kDiscriminator && !real_logits.defined()) {
    throw ContractError("adversarial_loss: discriminator role needs real logits");
  }
  switch (flavor) {
    case GanFlavor::kLeastSquares:
      if (role == Role::kGenerator) return ops::mean(ops::square(ops::add_scalar(fake_logits, T(-1))));
      return ops::add(ops::mean(ops::square(ops::add_scalar(real_logits, T(-1)))),
                      ops::mean(ops::square(fake_logits)));
    case GanFlavor::kNonSaturatingBce:
      if (role == Role::kGenerator) return ops::mean(ops::softplus(ops::mul_scalar(fake_logits, T(-1))));
      return ops::add(ops::mean(ops::softplus(ops::mul_scalar(real_logits, T(-1)))),
                      ops::mean(ops::softplus(fake_logits)));
  }
  throw ParameterError("adversarial_loss: unknown flavor");
}

template <typename T>
Tensor<T> mean_l1(const Tensor<T>& a, const Tensor<T>& b) {
  return ops::mean(ops::abs(ops::sub(a, b)));
}

template <typename T>
Tensor<T> cycle_consistency_loss(Preset preset, const Tensor<T>& low, const Tensor<T>& high,
                                 const nn::Generator<T>& g_forward, const nn::Generator<T>& g_inverse) {
  if (preset != Preset::kCycleGan) {
    throw ConfigError("cycle-consistency loss requested under preset '" + std::string(preset_name(preset)) + "'");
  }
  auto low_rec = g_inverse.translate(g_forward.translate(low));
  auto high_rec = g_forward.translate(g_inverse.translate(high));
  return ops::add(mean_l1(low, low_rec), mean_l1(high, high_rec));
}

namespace {

void append(std::string& s, const std::optional<double>& v) {
  s += ',';
  if (!v) {
    s += "NA";
    return;
  }
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, *v);
  s.append(buf, res.ptr);
}

}  // namespace

std::string LossReport::csv_header() { return "step,L_A_G,L_A_D,L_Spatial,L_IDSpatial,L_Freq,L_IDFreq,total"; }

std::string LossReport::csv_row() const {
  std::string s = std::to_string(step);
  append(s, adversarial_g);
  append(s, adversarial_d);
  append(s, spatial);
  append(s, id_spatial);
  append(s, freq);
  append(s, id_freq);
  append(s, total);
  return s;
}

template <typename T>
Objective<T> total_objective(const LossTerms<T>& terms, const LossWeights& w) {
  w.validate();
  if (!terms.adversarial_g.defined()) throw ConfigError("objective: adversarial term missing");
  Objective<T> out;
  out.total = terms.adversarial_g;
  out.report.adversarial_g = terms.adversarial_g.item();
  auto add_term = [&](const Tensor<T>& t, double weight, std::optional<double>& slot, const char* name) {
    if (weight <= 0.0) return;
    if (!t.defined()) throw ConfigError(std::string("objective: active term ") + name + " was not computed");
    slot = t.item();
    out.total = ops::add(out.total, ops::mul_scalar(t, static_cast<T>(weight)));
  };
  add_term(terms.spatial, w.spatial, out.report.spatial, "L_Spatial");
  add_term(terms.id_spatial, w.id_spatial, out.report.id_spatial, "L_IDSpatial");
  add_term(terms.freq, w.freq, out.report.freq, "L_Freq");
  add_term(terms.id_freq, w.id_freq, out.report.id_freq, "L_IDFreq");
  add_term(terms.cycle, w.cycle, out.report.cycle, "L_cycle");
  out.report.total = out.total.item();
  return out;
}

#define ADANET_INSTANTIATE_OBJECTIVE(T)                                                                    \
  template Tensor<T> adversarial_loss(const Tensor<T>&, const Tensor<T>&, Role, GanFlavor);                \
  template Tensor<T> mean_l1(const Tensor<T>&, const Tensor<T>&);                                          \
  template Tensor<T> cycle_consistency_loss(Preset, const Tensor<T>&, const Tensor<T>&,                    \
                                            const nn::Generator<T>&, const nn::Generator<T>&);             \
  template Objective<T> total_objective(const LossTerms<T>&, const LossWeights&);

ADANET_INSTANTIATE_OBJECTIVE(float)
ADANET_INSTANTIATE_OBJECTIVE(double)

}  // namespace adanet::loss
