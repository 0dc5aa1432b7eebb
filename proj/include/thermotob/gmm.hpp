#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <json.hpp>

#include "thermotob/thermal_io.hpp"

namespace thermotob {

struct GmmComponent {
  double weight = 0.0;
  double mean = 0.0;      // degrees C
  double variance = 0.0;  // degrees C squared

  bool operator==(const GmmComponent&) const = default;
};

struct GmmModel {
  std::vector<GmmComponent> components;
  double log_likelihood = 0.0;
  // Log-likelihood evaluated at the start of every EM iteration; the last
  // entry belongs to the returned parameters.
  std::vector<double> log_likelihood_history;
  int iterations = 0;
  bool converged = false;

  bool operator==(const GmmModel&) const = default;
};

struct EmConfig {
  double tolerance = 1e-6;  // relative log-likelihood change
  int max_iterations = 200;
  double variance_floor = 1e-4;
  // When non-zero and the input is larger, a seeded uniform subsample of this
  // size is fitted instead.
  std::size_t max_samples = 0;
};

struct SampleStats {
  double mean = 0.0;
  double variance = 0.0;  // population variance
  double max = 0.0;
  double min = 0.0;
  std::size_t count = 0;
};

SampleStats compute_sample_stats(std::span<const double> v);

// EM for a 1D mixture with deterministic quantile initialisation.
GmmModel fit_gmm(std::span<const double> v, std::size_t m = 3, const EmConfig& config = {},
                 std::uint64_t seed = 0);

// Mixture log-likelihood of v under the model.
double gmm_log_likelihood(std::span<const double> v, const GmmModel& model);

struct SkinConstraints {
  double max_variance_ratio = 2.0;  // sigma_i^2 <= ratio * sigma_v^2
  double min_weight = 0.15;
};

struct ComponentCheck {
  bool variance_ok = false;
  bool weight_ok = false;
  bool qualifies() const noexcept { return variance_ok && weight_ok; }
};

struct SkinSelection {
  double mu_hat = 0.0;
  std::size_t chosen_index = 0;
  bool fallback_used = false;
  std::vector<ComponentCheck> diagnostics;
};

// Highest-mean component among those with a bounded spread and a
// non-negligible weight. Falls back to the highest-mean component overall.
// Ties on the mean go to the lowest index.
SkinSelection select_skin_component(const GmmModel& model, const SampleStats& stats,
                                    const SkinConstraints& constraints = {});

struct RoomProfile {
  double lower_offset = -5.0;
  double upper_offset = 10.0;

  double span() const noexcept { return upper_offset - lower_offset; }
  void validate() const;
  bool operator==(const RoomProfile&) const = default;
};

RoomProfile default_room_profile(RoomType room);

struct RoiBounds {
  double lo = 0.0;
  double hi = 1.0;
};

RoiBounds roi_bounds(double mu_hat, const RoomProfile& profile);

struct NormalizedVideo {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  double frame_rate = kDefaultFrameRate;
  std::vector<std::vector<double>> frames;  // row-major, values in [0, 1]

  std::size_t frame_count() const noexcept { return frames.size(); }
};

// Clip to [lo, hi] then rescale to [0, 1].
std::vector<double> normalize_frame(const ThermalFrame& frame, const CalibrationMap& cal,
                                    const RoiBounds& bounds);
NormalizedVideo normalize_video(const ThermalVideo& video, const RoiBounds& bounds);

// Baseline: each frame rescaled by its own extremes. Flat frames map to 0.
std::vector<double> maxmin_normalize_frame(const ThermalFrame& frame, const CalibrationMap& cal);
NormalizedVideo maxmin_normalize_video(const ThermalVideo& video);

inline constexpr double kGmmSamplingInterval_s = 30.0;

struct GmmNormalization {
  GmmModel model;
  SampleStats stats;
  SkinSelection selection;
  RoiBounds bounds;
};

// Sampling, EM fit, skin selection and range of interest for one video.
GmmNormalization fit_gmm_normalization(const ThermalVideo& video, const RoomProfile& profile,
                                       const EmConfig& config = {}, std::uint64_t seed = 0,
                                       double interval_s = kGmmSamplingInterval_s);

struct NormalizationResult {
  NormalizedVideo normalized;
  GmmNormalization fit;
};

NormalizationResult normalize_pipeline(const ThermalVideo& video, const RoomProfile& profile,
                                       const EmConfig& config = {}, std::uint64_t seed = 0);

struct CalibrationSample {
  SampleStats stats;
  double mu_hat = 0.0;
};

// Median offsets of the skin mean from the sample mean and sample maximum,
// rounded half-up to multiples of `step`.
RoomProfile calibrate_profile(std::span<const CalibrationSample> corpus, double step = 2.5);

// {"weights":[],"means":[],"variances":[],"mu_hat":..,"fallback":..}
nlohmann::json gmm_diagnostics_json(const GmmModel& model, const SkinSelection& selection);

}  // namespace thermotob
