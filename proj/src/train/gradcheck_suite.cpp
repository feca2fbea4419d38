#include "adanet/train/gradcheck_suite.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "adanet/errors.hpp"
#include "adanet/loss/contrastive.hpp"
#include "adanet/loss/objective.hpp"
#include "adanet/nn/attention.hpp"
#include "adanet/nn/generator.hpp"
#include "adanet/ops.hpp"
#include "adanet/rng.hpp"

namespace adanet::train {

namespace {

using T = double;
using Inputs = std::vector<Tensor<T>>;

Tensor<T> random_tensor(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  std::vector<T> v(shape_numel(shape));
  for (auto& x : v) x = rng.uniform(lo, hi);
  return Tensor<T>::from(std::move(shape), std::move(v));
}

// Values bounded away from 0 so a finite-difference stencil never straddles
// the kink of relu / leaky_relu / abs.
Tensor<T> away_from_zero(Shape shape, Rng& rng) {
  std::vector<T> v(shape_numel(shape));
  for (auto& x : v) x = (rng.bernoulli(0.5) ? 1.0 : -1.0) * rng.uniform(0.1, 1.0);
  return Tensor<T>::from(std::move(shape), std::move(v));
}

Rng case_rng(std::uint64_t seed, std::uint64_t salt) { return Rng(seed).substream(RngPurpose::kGradCheck, salt); }

SuiteCase make_case(std::string name, CheckScope scope, std::uint64_t salt,
                    std::function<std::pair<GradCheckFn, Inputs>(Rng&)> build) {
  return {name, scope, [name, salt, build](std::uint64_t seed, const GradCheckOptions& base) {
            Rng rng = case_rng(seed, salt);
            auto [fn, inputs] = build(rng);
            GradCheckOptions opt = base;
            opt.seed = seed;
            return grad_check(name, fn, std::move(inputs), opt);
          }};
}

Tensor<T> activation_case(const Tensor<T>& x, ops::ActivationKind kind) { return ops::activation(x, {kind, 0.2}); }

nn::GeneratorConfig tiny_generator_config() {
  nn::GeneratorConfig cfg;
  cfg.in_channels = 2;
  cfg.base_channels = 2;
  cfg.n_resblocks = 2;
  cfg.activation = ops::ActivationKind::kTanh;
  return cfg;
}

// Replaces the default small initialization so normalization layers are far
// from their eps regime, where a finite-difference stencil loses accuracy.
template <typename Set>
void randomize_parameters(const Set& params, Rng& rng) {
  for (const auto& [name, p] : params.entries()) {
    Tensor<T> handle = p;
    for (auto& v : handle.mutable_data()) v = rng.uniform(-0.5, 0.5);
  }
}

std::shared_ptr<nn::Generator<T>> tiny_generator(Rng& rng) {
  Rng init = rng.substream(RngPurpose::kInit, rng.next_u64());
  auto g = std::make_shared<nn::Generator<T>>(tiny_generator_config(), init);
  randomize_parameters(g->parameters(), rng);
  return g;
}

}  // namespace

CheckScope parse_scope(std::string_view s) {
  if (s == "ops") return CheckScope::kOps;
  if (s == "attention") return CheckScope::kAttention;
  if (s == "losses") return CheckScope::kLosses;
  if (s == "all") return CheckScope::kAll;
  throw ConfigError("unknown gradcheck scope '" + std::string(s) + "' (ops, attention, losses, all)");
}

std::vector<SuiteCase> gradcheck_cases(CheckScope scope, bool inject_fault) {
  std::vector<SuiteCase> all;
  const auto O = CheckScope::kOps, A = CheckScope::kAttention, L = CheckScope::kLosses;

  // --- ops ---
  for (std::size_t stride : {1, 2}) {
    all.push_back(make_case("conv2d/stride" + std::to_string(stride), O, 10 + stride, [stride, inject_fault](Rng& rng) {
      GradCheckFn fn = [stride, inject_fault](const Inputs& in) {
        auto w = inject_fault ? ops::testing::negate_grad(in[1]) : in[1];
        return ops::conv2d(in[0], w, in[2], stride, 1);
      };
      return std::pair{fn, Inputs{random_tensor({2, 6, 6}, rng), random_tensor({3, 2, 3, 3}, rng),
                                  random_tensor({3}, rng)}};
    }));
  }
  all.push_back(make_case("dense", O, 20, [](Rng& rng) {
    GradCheckFn fn = [](const Inputs& in) { return ops::dense(in[0], in[1], in[2]); };
    return std::pair{fn, Inputs{random_tensor({5}, rng), random_tensor({4, 5}, rng), random_tensor({4}, rng)}};
  }));
  all.push_back(make_case("dense/rows", O, 21, [](Rng& rng) {
    GradCheckFn fn = [](const Inputs& in) { return ops::dense(in[0], in[1], in[2]); };
    return std::pair{fn, Inputs{random_tensor({3, 5}, rng), random_tensor({4, 5}, rng), random_tensor({4}, rng)}};
  }));
  all.push_back(make_case("softmax", O, 30, [](Rng& rng) {
    GradCheckFn fn = [](const Inputs& in) { return ops::softmax(in[0], 1); };
    return std::pair{fn, Inputs{random_tensor({3, 5, 2}, rng, -2, 2)}};
  }));
  all.push_back(make_case("instance_norm", O, 40, [](Rng& rng) {
    GradCheckFn fn = [](const Inputs& in) { return ops::instance_norm(in[0], in[1], in[2]); };
    return std::pair{fn, Inputs{random_tensor({4, 8, 8}, rng), random_tensor({4}, rng), random_tensor({4}, rng)}};
  }));
  const std::pair<const char*, ops::ActivationKind> acts[] = {{"relu", ops::ActivationKind::kRelu},
                                                              {"leaky_relu", ops::ActivationKind::kLeakyRelu},
                                                              {"tanh", ops::ActivationKind::kTanh},
                                                              {"sigmoid", ops::ActivationKind::kSigmoid}};
  std::uint64_t salt = 50;
  for (const auto& [name, kind] : acts) {
    all.push_back(make_case(std::string("activation/") + name, O, salt++, [kind](Rng& rng) {
      GradCheckFn fn = [kind](const Inputs& in) { return activation_case(in[0], kind); };
      return std::pair{fn, Inputs{away_from_zero({4, 8, 8}, rng)}};
    }));
  }
  all.push_back(make_case("tanh_chain", O, 58, [](Rng& rng) {
    GradCheckFn fn = [](const Inputs& in) { return ops::tanh(ops::mul(ops::tanh(in[0]), in[0])); };
    return std::pair{fn, Inputs{random_tensor({3, 4}, rng, -2, 2)}};
  }));
  all.push_back(make_case("upsample_nearest", O, 60, [](Rng& rng) {
    GradCheckFn fn = [](const Inputs& in) { return ops::upsample_nearest(in[0], 2); };
    return std::pair{fn, Inputs{random_tensor({2, 4, 4}, rng)}};
  }));
  all.push_back(make_case("fft2d", O, 70, [](Rng& rng) {
    GradCheckFn fn = [](const Inputs& in) {
      auto s = ops::fft2d(in[0]);
      return ops::concat<T>({s.re, s.im}, 0);
    };
    return std::pair{fn, Inputs{random_tensor({4, 8, 8}, rng)}};
  }));
  all.push_back(make_case("reflect_pad", O, 80, [](Rng& rng) {
    GradCheckFn fn = [](const Inputs& in) { return ops::reflect_pad(in[0], 2); };
    return std::pair{fn, Inputs{random_tensor({2, 5, 4}, rng)}};
  }));
  all.push_back(make_case("matmul", O, 90, [](Rng& rng) {
    GradCheckFn fn = [](const Inputs& in) {
      return ops::add(ops::matmul(in[0], in[1], true, false), ops::matmul(in[0], in[2], true, true));
    };
    return std::pair{fn, Inputs{random_tensor({4, 3}, rng), random_tensor({4, 5}, rng), random_tensor({5, 4}, rng)}};
  }));
  all.push_back(make_case("l2_normalize_rows", O, 100, [](Rng& rng) {
    GradCheckFn fn = [](const Inputs& in) { return ops::l2_normalize_rows(in[0]); };
    return std::pair{fn, Inputs{random_tensor({3, 6}, rng)}};
  }));
  all.push_back(make_case("cross_entropy_rows", O, 110, [](Rng& rng) {
    GradCheckFn fn = [](const Inputs& in) { return ops::cross_entropy_rows(in[0], {2, 0, 1}); };
    return std::pair{fn, Inputs{random_tensor({3, 4}, rng, -3, 3)}};
  }));
  all.push_back(make_case("gather_crop", O, 120, [](Rng& rng) {
    GradCheckFn fn = [](const Inputs& in) {
      auto g = ops::reshape(ops::gather_positions(in[0], {0, 7, 12, 7}), {4, 2, 1, 1});
      auto c = ops::reshape(ops::crop_patches(in[0], {{0, 1}, {2, 2}}, 2), {4, 2, 2, 1});
      return ops::concat<T>({g, c}, 2);
    };
    return std::pair{fn, Inputs{random_tensor({2, 4, 4}, rng)}};
  }));
  all.push_back(make_case("softplus_exp_log", O, 130, [](Rng& rng) {
    GradCheckFn fn = [](const Inputs& in) { return ops::log(ops::add_scalar(ops::exp(ops::softplus(in[0])), 1.0)); };
    return std::pair{fn, Inputs{random_tensor({8}, rng, -3, 3)}};
  }));

  // --- attention ---
  all.push_back(make_case("conv_projection", A, 200, [](Rng& rng) {
    GradCheckFn fn = [](const Inputs& in) {
      auto p = nn::conv_projection(in[0], in[1], in[2], in[3], in[4], in[5], in[6]);
      return ops::concat<T>({p.q, p.k, p.v}, 0);
    };
    return std::pair{fn, Inputs{random_tensor({8, 3, 3}, rng), random_tensor({1, 8, 1, 1}, rng), random_tensor({1}, rng),
                                random_tensor({1, 8, 1, 1}, rng), random_tensor({1}, rng),
                                random_tensor({2, 8, 1, 1}, rng), random_tensor({2}, rng)}};
  }));
  all.push_back(make_case("residual_self_attention", A, 210, [](Rng& rng) {
    Rng init = rng.substream(RngPurpose::kInit);
    auto block = std::make_shared<nn::SelfAttention<T>>(16, init);
    Inputs inputs{random_tensor({16, 2, 3}, rng)};
    // Non-trivial weights and alpha so every path carries gradient.
    randomize_parameters(block->parameters(), rng);
    for (const auto& [name, p] : block->parameters().entries()) inputs.push_back(p);
    GradCheckFn fn = [block](const Inputs& in) { return block->forward(in[0]); };
    return std::pair{fn, inputs};
  }));

  // --- losses ---
  all.push_back(make_case("info_nce", L, 300, [](Rng& rng) {
    GradCheckFn fn = [](const Inputs& in) { return loss::info_nce(in[0], in[1], in[2], 0.5); };
    return std::pair{fn, Inputs{random_tensor({6}, rng), random_tensor({6}, rng), random_tensor({6, 4}, rng)}};
  }));
  all.push_back(make_case("patch_nce/normalized", L, 310, [](Rng& rng) {
    GradCheckFn fn = [](const Inputs& in) {
      return loss::patch_nce(ops::l2_normalize_rows(in[0]), ops::l2_normalize_rows(in[1]), 0.07);
    };
    return std::pair{fn, Inputs{random_tensor({5, 6}, rng), random_tensor({5, 6}, rng)}};
  }));
  for (auto flavor : {loss::GanFlavor::kLeastSquares, loss::GanFlavor::kNonSaturatingBce}) {
    for (auto role : {loss::Role::kGenerator, loss::Role::kDiscriminator}) {
      const std::string name = std::string("adversarial/") + std::string(loss::flavor_name(flavor)) +
                               (role == loss::Role::kGenerator ? "/G" : "/D");
      all.push_back(make_case(name, L, 320 + static_cast<int>(flavor) * 2 + static_cast<int>(role),
                              [flavor, role](Rng& rng) {
                                GradCheckFn fn = [flavor, role](const Inputs& in) {
                                  return loss::adversarial_loss(in[0], in[1], role, flavor);
                                };
                                return std::pair{fn, Inputs{random_tensor({1, 4, 4}, rng, -2, 2),
                                                            random_tensor({1, 4, 4}, rng, -2, 2)}};
                              }));
    }
  }
  all.push_back(make_case("cycle_consistency", L, 340, [](Rng& rng) {
    auto gf = tiny_generator(rng);
    auto gi = tiny_generator(rng);
    auto low = random_tensor({2, 8, 8}, rng), high = random_tensor({2, 8, 8}, rng);
    // Keep every residual of the L1 terms away from 0 (abs kink). Nudging one
    // pixel moves the reconstruction too, so repeat until none is close.
    {
      NoGradGuard ng;
      for (int pass = 0; pass < 50; ++pass) {
        bool moved = false;
        for (auto* x : {&low, &high}) {
          auto rec = x == &low ? gi->translate(gf->translate(low)) : gf->translate(gi->translate(high));
          auto d = x->mutable_data();
          for (std::size_t i = 0; i < d.size(); ++i) {
            const double r = d[i] - rec[i];
            if (std::abs(r) < 0.05) {
              d[i] += r >= 0 ? 0.1 : -0.1;
              moved = true;
            }
          }
        }
        if (!moved) break;
      }
    }
    Inputs inputs{low, high};
    for (const auto& [n, p] : gf->parameters().entries()) {
      if (n.rfind("out.", 0) == 0) inputs.push_back(p);
    }
    GradCheckFn fn = [gf, gi](const Inputs& in) {
      return loss::cycle_consistency_loss(loss::Preset::kCycleGan, in[0], in[1], *gf, *gi);
    };
    return std::pair{fn, inputs};
  }));

  all.push_back(make_case("spatial_contrastive", L, 350, [](Rng& rng) {
    auto g = tiny_generator(rng);
    Rng init = rng.substream(RngPurpose::kInit);
    auto phi = std::make_shared<loss::ProjectionHeads<T>>(g->tap_channels(), init, 8, ops::ActivationKind::kTanh);
    std::vector<Shape> shapes;
    for (const auto& t : g->encode(Tensor<T>::zeros({2, 8, 8}))) shapes.push_back(t.shape());
    auto samples = loss::sample_locations(shapes, 4, rng);
    GradCheckFn fn = [g, phi, samples](const Inputs& in) {
      return loss::spatial_contrastive(*g, *phi, in[0], in[1], samples, T(0.5));
    };
    return std::pair{fn, Inputs{random_tensor({2, 8, 8}, rng), random_tensor({2, 8, 8}, rng)}};
  }));
  all.push_back(make_case("freq_contrastive", L, 360, [](Rng& rng) {
    Rng init = rng.substream(RngPurpose::kInit);
    auto theta = std::make_shared<loss::FreqHead<T>>(2, 4, init, 16, 8, ops::ActivationKind::kTanh);
    auto patches = loss::sample_patches(8, 8, 4, 4, rng);
    GradCheckFn fn = [theta, patches](const Inputs& in) {
      return loss::freq_contrastive(*theta, in[0], in[1], patches, T(0.5));
    };
    return std::pair{fn, Inputs{random_tensor({2, 8, 8}, rng), random_tensor({2, 8, 8}, rng)}};
  }));

  std::vector<SuiteCase> out;
  for (auto& c : all) {
    if (scope == CheckScope::kAll || c.scope == scope) out.push_back(std::move(c));
  }
  return out;
}

SuiteSummary run_gradcheck_suite(CheckScope scope, std::size_t seeds, double tolerance, bool inject_fault) {
  SuiteSummary summary;
  GradCheckOptions opt;
  opt.tolerance = tolerance;
  for (const auto& c : gradcheck_cases(scope, inject_fault)) {
    GradCheckReport worst;
    worst.name = c.name;
    for (std::size_t s = 0; s < seeds; ++s) {
      auto r = c.run(s + 1, opt);
      worst.max_rel_error = std::max(worst.max_rel_error, r.max_rel_error);
      worst.checked += r.checked;
      worst.pass = worst.pass && r.pass;
    }
    summary.pass = summary.pass && worst.pass;
    summary.reports.push_back(worst);
  }
  return summary;
}

}  // namespace adanet::train
