#ifndef REALID_GRADCHECK_HPP_
#define REALID_GRADCHECK_HPP_

#include <cstdint>
#include <string>
#include <vector>

namespace realid {

constexpr double kGradTolerance = 1e-5;
constexpr double kFdStep = 1e-5;

struct GradSuiteResult {
  std::string name;
  double max_rel_err = 0.0;
  std::size_t configs = 0;
  bool pass = false;
};

/// Compares every analytical gradient against the central-difference oracle
/// over randomly drawn, kink-free configurations: the four loss terms, the
/// extractor and head parameter paths, and the end-to-end batch total.
/// `corrupt` injects a deliberate error into one analytical gradient as a
/// negative control for the harness itself.
std::vector<GradSuiteResult> run_gradcheck(std::uint64_t seed, std::size_t configs_per_suite,
                                           bool corrupt);

bool gradcheck_passed(const std::vector<GradSuiteResult>& results);

}  // namespace realid

#endif  // REALID_GRADCHECK_HPP_
