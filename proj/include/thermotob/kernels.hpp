#pragma once

// Data-parallel inner loops. Every kernel has a plain serial reference in
// kernels::serial and an OpenMP version in kernels::parallel. The parallel
// versions are what the library calls; the serial ones are kept for tests and
// the benchmark.
//
// Parallel reductions are blocked with a fixed block size and the partial
// results are combined in block order, so the output does not depend on the
// thread count.

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "thermotob/thermal_io.hpp"

namespace thermotob::kernels {

inline constexpr std::size_t kReductionBlock = 8192;

struct MixtureTerm {
  double mean = 0.0;
  double variance = 1.0;
  double log_weight = 0.0;
};

// Sufficient statistics of one E-step. `first` and `second` are the
// responsibility-weighted first and second moments about each component's
// current mean.
struct EStepSums {
  double log_likelihood = 0.0;
  std::vector<double> resp;
  std::vector<double> first;
  std::vector<double> second;

  explicit EStepSums(std::size_t m = 0) : resp(m, 0.0), first(m, 0.0), second(m, 0.0) {}
  void add(const EStepSums& other);
};

int max_threads();

namespace serial {

EStepSums estep(std::span<const double> x, std::span<const MixtureTerm> terms);
void normalize(std::span<const std::uint16_t> raw, const CalibrationMap& cal, double lo, double hi,
               std::span<double> out);
void maxmin_normalize(std::span<const std::uint16_t> raw, const CalibrationMap& cal,
                      std::span<double> out);
void fir_moving_average(std::span<const double> in, std::size_t k, std::span<double> out);

}  // namespace serial

namespace parallel {

EStepSums estep(std::span<const double> x, std::span<const MixtureTerm> terms);
void normalize(std::span<const std::uint16_t> raw, const CalibrationMap& cal, double lo, double hi,
               std::span<double> out);
void maxmin_normalize(std::span<const std::uint16_t> raw, const CalibrationMap& cal,
                      std::span<double> out);
void fir_moving_average(std::span<const double> in, std::size_t k, std::span<double> out);

}  // namespace parallel

}  // namespace thermotob::kernels
