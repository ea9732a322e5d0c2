#pragma once
// Central finite-difference check of the joint-network gradients.

#include <cstdint>
#include <string>
#include <vector>

namespace probation {

struct GroupError {
  std::string name;
  std::size_t entries = 0;
  double max_rel_error = 0.0;
};

struct GradCheckReport {
  std::vector<GroupError> groups;
  double max_rel_error = 0.0;
};

struct GradCheckConfig {
  std::size_t vocab_size = 10;
  std::size_t dim = 4;
  std::size_t hidden = 3;
  std::size_t docs = 2;
  double lambda = 0.1;
  double dropout = 0.3;
  double init_scale = 0.5;
  double step = 1e-5;
  // Denominator floor for the relative error.
  double floor = 1e-6;
};

inline constexpr double kGradCheckTolerance = 1e-4;

// Builds a tiny MT-DT instance from seed and checks every parameter entry.
GradCheckReport gradient_check(std::uint64_t seed, const GradCheckConfig& cfg = {});

}  // namespace probation
