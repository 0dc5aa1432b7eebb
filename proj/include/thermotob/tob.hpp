#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "thermotob/detector.hpp"
#include "thermotob/thermal_io.hpp"

namespace thermotob {

inline constexpr std::size_t kDefaultFilterLength = 25;
inline constexpr double kDefaultGamma = 0.9;

// Rectangular window, h(k) = 1/K.
struct FirFilter {
  std::size_t length = kDefaultFilterLength;

  std::vector<double> coefficients() const;
};

// Causal moving average with zero initial conditions; output length equals
// input length.
std::vector<double> fir_smooth(std::span<const double> series, std::size_t k = kDefaultFilterLength);
ScoreSeries fir_smooth(const ScoreSeries& series, std::size_t k = kDefaultFilterLength);

struct TobEstimate {
  bool found = false;
  std::size_t n_birth = 0;
  std::int64_t t_birth_s = 0;
  double gamma = kDefaultGamma;
};

// First frame with smoothed score >= gamma; seconds are floor(n / fps).
TobEstimate estimate_tob(std::span<const double> smoothed, double gamma, double frame_rate);
TobEstimate estimate_tob(const ScoreSeries& smoothed, double gamma = kDefaultGamma);

// Signed error in seconds; positive means the estimate is late.
double tob_error(const TobEstimate& estimate, double annotated_s);

struct ErrorStats {
  std::vector<double> errors;  // signed, seconds
  double q1 = 0.0;
  double q2 = 0.0;
  double q3 = 0.0;
  double mean = 0.0;
  double found_fraction = 0.0;
};

// Quartiles and mean of |err|.
ErrorStats error_stats(std::span<const double> errors, std::size_t found_count, std::size_t total);

enum class SweepLabel : std::uint8_t { Excluded = 0, Negative = 1, Positive = 2 };

// Pre-birth NNB frames are negatives, VNB frames positives, post-birth NNB
// frames are excluded.
std::vector<SweepLabel> sweep_labels(const AnnotationTrack& track);

struct LabeledSeries {
  std::span<const double> smoothed;
  std::span<const SweepLabel> labels;
};

struct FprPoint {
  double gamma = 0.0;
  double fpr = 0.0;
  bool degenerate = false;  // no negative frames
};

// FPR(gamma) = FP / (FP + TN), predicted positive iff smoothed >= gamma.
// Thresholds must be ascending.
std::vector<FprPoint> fpr_sweep(std::span<const LabeledSeries> videos, std::span<const double> thresholds);

// 0.10, 0.11, ..., 0.99 plus 0.9.
std::vector<double> default_threshold_grid();

}  // namespace thermotob
