#include "adanet/train/trainer.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "adanet/data/augment.hpp"
#include "adanet/data/raster.hpp"
#include "adanet/data/synth.hpp"
#include "adanet/errors.hpp"
#include "adanet/ops.hpp"

namespace adanet::train {

namespace {

using Named = std::vector<std::pair<std::string, Tensor<Real>>>;

void append_named(Named& out, const std::string& prefix, const nn::ParameterSet<Real>& set) {
  for (const auto& [name, t] : set.entries()) out.emplace_back(prefix + name, t);
}

std::string state_text(const Rng& rng) {
  char buf[96];
  const auto& s = rng.state();
  std::snprintf(buf, sizeof buf, "%016llx%016llx%016llx%016llx", static_cast<unsigned long long>(s[0]),
                static_cast<unsigned long long>(s[1]), static_cast<unsigned long long>(s[2]),
                static_cast<unsigned long long>(s[3]));
  return buf;
}

std::uint64_t parse_u64(const std::string& key, const std::string& s) {
  try {
    std::size_t pos = 0;
    const auto v = std::stoull(s, &pos);
    if (pos == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw FormatError("checkpoint meta '" + key + "' is not an integer: '" + s + "'");
}

constexpr std::uint64_t kEpochStreamOffset = std::uint64_t{1} << 40;

}  // namespace

nn::GeneratorConfig generator_config(const TrainConfig& cfg) {
  nn::GeneratorConfig g;
  g.in_channels = cfg.channels;
  g.base_channels = cfg.g_base;
  g.n_resblocks = cfg.n_resblocks;
  g.attention_after_resblocks = cfg.attention;
  g.decoder_attention = cfg.decoder_attention;
  return g;
}

nn::DiscriminatorConfig discriminator_config(const TrainConfig& cfg) {
  nn::DiscriminatorConfig d;
  d.in_channels = cfg.channels;
  d.base_channels = cfg.d_base;
  return d;
}

std::vector<std::string> declared_groups(const TrainConfig& cfg) {
  if (cfg.preset == loss::Preset::kCycleGan) return {"D", "D_L", "G", "G_I"};
  std::vector<std::string> out{"D", "G"};
  if (cfg.weights.spatial > 0 || cfg.weights.id_spatial > 0) out.push_back("Phi");
  if (cfg.weights.freq > 0 || cfg.weights.id_freq > 0) out.push_back("Theta");
  return out;
}

Trainer::Trainer(TrainConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  const Rng root(cfg_.seed);
  cyclegan_ = cfg_.preset == loss::Preset::kCycleGan;
  has_phi_ = !cyclegan_ && (cfg_.weights.spatial > 0 || cfg_.weights.id_spatial > 0);
  has_theta_ = !cyclegan_ && (cfg_.weights.freq > 0 || cfg_.weights.id_freq > 0);

  Rng init_g = root.substream(RngPurpose::kInit, 0);
  Rng init_d = root.substream(RngPurpose::kInit, 1);
  g_ = nn::Generator<Real>(generator_config(cfg_), init_g);
  d_ = nn::Discriminator<Real>(discriminator_config(cfg_), init_d);
  // Every group is built for every preset so that a step can be checked to
  // leave the undeclared ones untouched; only declared groups are optimized.
  Rng init_phi = root.substream(RngPurpose::kInit, 2);
  phi_ = loss::ProjectionHeads<Real>(g_.tap_channels(), init_phi, cfg_.head_width);
  Rng init_theta = root.substream(RngPurpose::kInit, 3);
  theta_ = loss::FreqHead<Real>(cfg_.channels, cfg_.freq_patch, init_theta, cfg_.freq_hidden, cfg_.freq_out);
  Rng init_gi = root.substream(RngPurpose::kInit, 4);
  Rng init_dl = root.substream(RngPurpose::kInit, 5);
  g_inv_ = nn::Generator<Real>(generator_config(cfg_), init_gi);
  d_low_ = nn::Discriminator<Real>(discriminator_config(cfg_), init_dl);

  auto gs = groups();
  Named gen, disc;
  for (const auto& name : declared_groups(cfg_)) {
    auto& dst = name[0] == 'D' ? disc : gen;
    for (auto& e : gs.at(name)) dst.push_back(e);
  }
  opt_g_ = make_optimizer(gen, cfg_.learning_rate);
  opt_d_ = make_optimizer(disc, cfg_.learning_rate);
}

Trainer::Optimizer Trainer::make_optimizer(const Named& named, double lr) {
  Optimizer o;
  std::vector<Tensor<Real>> params;
  for (const auto& [name, t] : named) {
    o.names.push_back(name);
    params.push_back(t);
  }
  AdamOptions opt;
  opt.learning_rate = lr;
  o.adam = Adam<Real>(std::move(params), opt);
  return o;
}

std::map<std::string, Named> Trainer::groups() const {
  std::map<std::string, Named> out;
  append_named(out["G"], "G.", g_.parameters());
  append_named(out["D"], "D.", d_.parameters());
  append_named(out["Phi"], "Phi.", phi_.parameters());
  append_named(out["Theta"], "Theta.", theta_.parameters());
  append_named(out["G_I"], "G_I.", g_inv_.parameters());
  append_named(out["D_L"], "D_L.", d_low_.parameters());
  return out;
}

void Trainer::check_finite(const char* term, double value) const {
  if (!std::isfinite(value)) {
    throw NumericalError(std::string("non-finite ") + term + " at step " + std::to_string(step_ + 1));
  }
}

std::vector<Shape> Trainer::tap_shapes(const Tensor<Real>& x) {
  auto it = tap_shape_cache_.find(x.shape());
  if (it != tap_shape_cache_.end()) return it->second;
  std::vector<Shape> shapes;
  {
    NoGradGuard ng;
    for (const auto& t : g_.encode(Tensor<Real>::zeros(x.shape()))) shapes.push_back(t.shape());
  }
  tap_shape_cache_.emplace(x.shape(), shapes);
  return shapes;
}

loss::LossReport Trainer::train_step(const Tensor<Real>& low, const Tensor<Real>& high, Rng& sampling) {
  if (low.shape() != high.shape()) {
    throw DimensionError("low/high patches differ in shape: " + shape_str(low.shape()) + " vs " +
                         shape_str(high.shape()));
  }
  auto report = cyclegan_ ? step_cyclegan(low, high) : step_contrastive(low, high, sampling);
  ++step_;
  report.step = step_;
  return report;
}

loss::LossReport Trainer::step_contrastive(const Tensor<Real>& low, const Tensor<Real>& high, Rng& sampling) {
  const auto& w = cfg_.weights;
  const Real tau = static_cast<Real>(w.tau);
  auto fake = g_.translate(low);

  auto ld = loss::adversarial_loss(d_.forward(high), d_.forward(fake.detach()), loss::Role::kDiscriminator, w.flavor);
  check_finite("L_A_D", ld.item());
  backward(ld);
  opt_d_.adam.step();
  if (observer_) observer_(StepPhase::kAfterDiscriminator);

  loss::SpatialSampleSet samples;
  loss::FreqPatchSet patches;
  if (has_phi_) samples = loss::sample_locations(tap_shapes(low), cfg_.n_spatial, sampling);
  if (has_theta_) patches = loss::sample_patches(low.dim(1), low.dim(2), cfg_.n_freq, cfg_.freq_patch, sampling);

  loss::LossTerms<Real> terms;
  terms.adversarial_g = loss::adversarial_loss(Tensor<Real>{}, d_.forward(fake), loss::Role::kGenerator, w.flavor);
  if (w.spatial > 0) terms.spatial = loss::spatial_contrastive(g_, phi_, low, fake, samples, tau);
  if (w.freq > 0) terms.freq = loss::freq_contrastive(theta_, low, fake, patches, tau);
  if (w.id_spatial > 0 || w.id_freq > 0) {
    auto id = loss::identity_losses(g_, w.id_spatial > 0 ? &phi_ : nullptr, w.id_freq > 0 ? &theta_ : nullptr, high,
                                    samples, patches, tau);
    terms.id_spatial = id.id_spatial;
    terms.id_freq = id.id_freq;
  }
  auto objective = loss::total_objective(terms, w);
  const auto& r = objective.report;
  const std::pair<const char*, const std::optional<double>*> reported[] = {
      {"L_A_G", &r.adversarial_g}, {"L_Spatial", &r.spatial}, {"L_IDSpatial", &r.id_spatial},
      {"L_Freq", &r.freq},         {"L_IDFreq", &r.id_freq}};
  for (const auto& [name, v] : reported) {
    if (v->has_value()) check_finite(name, **v);
  }
  check_finite("total", r.total);

  backward(objective.total);
  opt_g_.adam.step();
  d_.parameters().clear_grads();

  auto report = objective.report;
  report.adversarial_d = ld.item();
  return report;
}

loss::LossReport Trainer::step_cyclegan(const Tensor<Real>& low, const Tensor<Real>& high) {
  const auto& w = cfg_.weights;
  auto fake_high = g_.translate(low);
  auto fake_low = g_inv_.translate(high);

  auto ld = ops::add(
      loss::adversarial_loss(d_.forward(high), d_.forward(fake_high.detach()), loss::Role::kDiscriminator, w.flavor),
      loss::adversarial_loss(d_low_.forward(low), d_low_.forward(fake_low.detach()), loss::Role::kDiscriminator,
                             w.flavor));
  check_finite("L_A_D", ld.item());
  backward(ld);
  opt_d_.adam.step();
  if (observer_) observer_(StepPhase::kAfterDiscriminator);

  loss::LossTerms<Real> terms;
  terms.adversarial_g = ops::add(
      loss::adversarial_loss(Tensor<Real>{}, d_.forward(fake_high), loss::Role::kGenerator, w.flavor),
      loss::adversarial_loss(Tensor<Real>{}, d_low_.forward(fake_low), loss::Role::kGenerator, w.flavor));
  terms.cycle = loss::cycle_consistency_loss(loss::Preset::kCycleGan, low, high, g_, g_inv_);
  auto objective = loss::total_objective(terms, w);
  check_finite("L_A_G", terms.adversarial_g.item());
  check_finite("L_cycle", terms.cycle.item());

  backward(objective.total);
  opt_g_.adam.step();
  d_.parameters().clear_grads();
  d_low_.parameters().clear_grads();

  auto report = objective.report;
  report.adversarial_d = ld.item();
  return report;
}

nn::Checkpoint Trainer::to_checkpoint(const std::map<std::string, std::string>& meta) const {
  nn::Checkpoint ckpt;
  for (const auto& [group, named] : groups()) {
    for (const auto& [name, t] : named) ckpt.parameters.push_back(nn::to_entry(name, t));
  }
  for (auto* opt : {&opt_g_, &opt_d_}) {
    const std::string prefix = opt == &opt_g_ ? "opt_g." : "opt_d.";
    const auto& o = *opt;
    for (std::size_t i = 0; i < o.names.size(); ++i) {
      ckpt.optimizer.push_back(nn::to_entry(prefix + "m." + o.names[i], o.adam.first_moments()[i]));
      ckpt.optimizer.push_back(nn::to_entry(prefix + "v." + o.names[i], o.adam.second_moments()[i]));
    }
    ckpt.meta[prefix + "t"] = std::to_string(o.adam.t());
  }
  std::istringstream cfg_text(cfg_.to_text());
  for (std::string line; std::getline(cfg_text, line);) {
    const auto eq = line.find('=');
    ckpt.meta["config." + line.substr(0, eq)] = line.substr(eq + 1);
  }
  ckpt.meta["step"] = std::to_string(step_);
  ckpt.meta["rng.root"] = state_text(Rng(cfg_.seed));
  for (const auto& [k, v] : meta) ckpt.meta[k] = v;
  return ckpt;
}

void Trainer::restore(const nn::Checkpoint& ckpt) {
  for (auto& [group, named] : groups()) {
    for (auto& [name, t] : named) {
      const auto* e = ckpt.find_parameter(name);
      if (!e) throw FormatError("checkpoint has no parameter '" + name + "'");
      nn::assign_entry(*e, t);
    }
  }
  for (auto* opt : {&opt_g_, &opt_d_}) {
    const std::string prefix = opt == &opt_g_ ? "opt_g." : "opt_d.";
    for (std::size_t i = 0; i < opt->names.size(); ++i) {
      for (const char* which : {"m.", "v."}) {
        const auto key = prefix + which + opt->names[i];
        const auto* e = ckpt.find_optimizer(key);
        if (!e) throw FormatError("checkpoint has no optimizer entry '" + key + "'");
        auto& dst = which[0] == 'm' ? opt->adam.first_moments()[i] : opt->adam.second_moments()[i];
        nn::assign_entry(*e, dst);
      }
    }
    opt->adam.set_t(parse_u64(prefix + "t", ckpt.meta_value(prefix + "t")));
  }
  if (ckpt.meta_value("rng.root") != state_text(Rng(cfg_.seed))) {
    throw FormatError("checkpoint random state does not match seed " + std::to_string(cfg_.seed));
  }
  step_ = parse_u64("step", ckpt.meta_value("step"));
}

Trainer trainer_from_checkpoint(const nn::Checkpoint& ckpt) {
  std::map<std::string, std::string> settings;
  for (const auto& [k, v] : ckpt.meta) {
    if (k.rfind("config.", 0) == 0) settings[k.substr(7)] = v;
  }
  if (settings.empty()) throw FormatError("checkpoint carries no configuration");
  Trainer t(make_config(settings));
  t.restore(ckpt);
  return t;
}

std::vector<data::Patch> load_domain_patches(const std::filesystem::path& dir, std::size_t patch) {
  std::vector<data::Patch> out;
  for (const auto& path : data::list_scenes(dir)) {
    auto scene = data::read_msrb(path);
    for (auto& p : data::extract_patches(scene, patch, patch)) out.push_back(std::move(p));
  }
  if (out.empty()) throw ConfigError("no " + std::to_string(patch) + "-pixel patches fit the scenes in " + dir.string());
  return out;
}

DataSchedule::DataSchedule(std::vector<data::Patch> low, std::vector<data::Patch> high, std::uint64_t seed,
                           bool augment)
    : low_(std::move(low)), high_(std::move(high)), root_(seed), augment_(augment) {
  if (low_.empty() || high_.empty()) throw ConfigError("both domains need at least one patch");
}

std::vector<std::size_t> DataSchedule::epoch_order(std::uint64_t epoch) const {
  std::vector<std::size_t> order(low_.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng r = root_.substream(RngPurpose::kSampling, kEpochStreamOffset + epoch);
  shuffle(order.begin(), order.end(), r);
  return order;
}

DataSchedule::Item DataSchedule::at(std::uint64_t step) const {
  const auto epoch = step / low_.size();
  if (epoch != cached_epoch_) {
    cached_order_ = epoch_order(epoch);
    cached_epoch_ = epoch;
  }
  Rng sampling = root_.substream(RngPurpose::kSampling, step);
  const auto& lo = low_[cached_order_[step % low_.size()]];
  const auto& hi = high_[sampling.below(high_.size())];
  if (!augment_) return {lo.image, hi.image, sampling};
  Rng aug = root_.substream(RngPurpose::kAugmentation, step);
  data::AugmentConfig cfg;
  auto a = data::augment(lo, cfg, aug);
  auto b = data::augment(hi, cfg, aug);
  return {a.image, b.image, sampling};
}

LoopResult train_loop(Trainer& trainer, const DataSchedule& schedule) {
  const auto& cfg = trainer.config();
  std::filesystem::create_directories(cfg.out_dir);
  LoopResult result;
  result.csv = cfg.out_dir / "losses.csv";

  std::uint64_t total = cfg.epochs * schedule.steps_per_epoch();
  if (cfg.steps > 0) total = cfg.epochs > 0 ? std::min<std::uint64_t>(total, cfg.steps) : cfg.steps;

  const bool fresh = trainer.step() == 0 || !std::filesystem::exists(result.csv);
  std::ofstream csv(result.csv, fresh ? std::ios::trunc : std::ios::app);
  if (!csv) throw ConfigError("cannot write " + result.csv.string());
  if (fresh) csv << loss::LossReport::csv_header() << "\n";

  auto save = [&](const std::filesystem::path& path) {
    const auto epoch = trainer.step() / schedule.steps_per_epoch();
    nn::save_checkpoint(path, trainer.to_checkpoint({{"epoch", std::to_string(epoch)}}));
    return path;
  };

  const auto start = std::chrono::steady_clock::now();
  while (trainer.step() < total) {
    if (cfg.time_budget_seconds > 0) {
      const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
      if (elapsed.count() >= cfg.time_budget_seconds) break;
    }
    auto item = schedule.at(trainer.step());
    auto report = trainer.train_step(item.low, item.high, item.sampling);
    csv << report.csv_row() << "\n";
    result.reports.push_back(report);
    ++result.steps_run;
    if (cfg.checkpoint_every > 0 && trainer.step() % cfg.checkpoint_every == 0) {
      save(cfg.out_dir / ("step_" + std::to_string(trainer.step()) + ".adan"));
    }
  }
  csv.flush();
  result.final_step = trainer.step();
  result.checkpoint = save(cfg.out_dir / "final.adan");
  return result;
}

LoopResult run_training(const TrainConfig& cfg, const std::filesystem::path& resume) {
  const auto low_dir = resolve_data_path(cfg.low_dir);
  const auto high_dir = resolve_data_path(cfg.high_dir);
  if (low_dir.empty() || high_dir.empty()) throw ConfigError("low_dir and high_dir must both be set");
  DataSchedule schedule(load_domain_patches(low_dir, cfg.patch), load_domain_patches(high_dir, cfg.patch), cfg.seed,
                        cfg.augment);
  Trainer trainer(cfg);
  if (!resume.empty()) trainer.restore(nn::load_checkpoint(resume));
  return train_loop(trainer, schedule);
}

}  // namespace adanet::train
