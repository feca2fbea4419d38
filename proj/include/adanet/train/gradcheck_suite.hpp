#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "adanet/gradcheck.hpp"

namespace adanet::train {

enum class CheckScope { kOps, kAttention, kLosses, kAll };
CheckScope parse_scope(std::string_view s);  // ConfigError on unknown names

struct SuiteCase {
  std::string name;
  CheckScope scope;
  std::function<GradCheckReport(std::uint64_t seed, const GradCheckOptions&)> run;
};

// Every registered check in `scope` (kAll = everything). With inject_fault,
// the conv2d case is built on a sign-flipped backward pass.
std::vector<SuiteCase> gradcheck_cases(CheckScope scope, bool inject_fault = false);

struct SuiteSummary {
  std::vector<GradCheckReport> reports;  // one per case, worst over seeds
  bool pass = true;
};

SuiteSummary run_gradcheck_suite(CheckScope scope, std::size_t seeds, double tolerance = 1e-4,
                                 bool inject_fault = false);

}  // namespace adanet::train
