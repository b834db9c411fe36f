#pragma once

// Central finite-difference verification of every differentiable operation.
//
// standard_cases() builds randomized scalar losses over small instances of
// each op, the embedding and model components, and one full-size model
// record. check() compares backward() against (L(x+h) - L(x-h)) / 2h.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "clickbait/tensor.hpp"

namespace clickbait::gradcheck {

inline constexpr double kStep = 1e-5;
inline constexpr double kOpTolerance = 1e-4;
inline constexpr double kEndToEndTolerance = 1e-3;
/// Denominator floor for the relative error, so that two gradients that are
/// both ~0 compare as equal.
inline constexpr double kRelativeFloor = 1e-6;

struct Case {
  std::string group;           // op or component under test
  std::vector<Tensor> inputs;  // leaves to perturb
  std::function<Tensor()> loss;
  std::size_t samples_per_input = 0;  // 0 checks every coordinate
  double tolerance = kOpTolerance;
};

struct Outcome {
  std::string group;
  std::size_t instances = 0;
  std::size_t coordinates = 0;
  double max_rel_error = 0.0;
  double tolerance = kOpTolerance;
  bool passed() const { return max_rel_error < tolerance; }
};

double relative_error(double analytic, double numeric);

/// Coordinates of each input to probe: all of them, or `samples_per_input`
/// drawn with replacement from a seeded generator.
std::vector<std::vector<std::size_t>> probe_coordinates(const Case& c, std::uint64_t seed);

Outcome check(const Case& c, std::uint64_t seed);

/// At least ten randomized instances per op/component, plus the end-to-end
/// model record.
std::vector<Case> standard_cases(std::uint64_t seed, std::size_t instances = 10);

/// Runs every case and merges outcomes per group, in first-seen order.
std::vector<Outcome> run_suite(std::uint64_t seed);

}  // namespace clickbait::gradcheck
