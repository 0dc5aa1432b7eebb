#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "thermotob/thermal_io.hpp"

namespace thermotob::sim {

// Axis-aligned ellipse in pixel coordinates.
struct Ellipse {
  double cx = 0.0;
  double cy = 0.0;
  double rx = 1.0;
  double ry = 1.0;

  bool contains(double x, double y) const;
};

enum class EntityKind : std::uint8_t { Adult, Object };

struct BodyEntity {
  std::string name;
  EntityKind kind = EntityKind::Adult;
  double temperature = 35.0;
  Ellipse shape;
  // Horizontal sway x(t) = cx + amplitude * sin(2 pi t / period + phase).
  double sway_amplitude_px = 0.0;
  double sway_period_s = 30.0;
  double sway_phase = 0.0;
};

struct NewbornSpec {
  double temperature = 37.5;
  Ellipse shape;
  double towel_temperature = 30.0;  // covered newborn after birth
  double towel_margin_px = 1.0;
};

// Half-open interval [start_s, end_s).
struct TimeWindow {
  double start_s = 0.0;
  double end_s = 0.0;
};

struct Distractor {
  std::string kind = "pot";
  double temperature = 40.0;
  Ellipse shape;
  TimeWindow active;
};

struct DriftKnot {
  double time_s = 0.0;
  double offset = 0.0;
};

struct SelfCalibrationJump {
  double time_s = 0.0;
  double step = 0.0;  // persists from time_s on
};

struct DistortionConfig {
  double noise_std = 0.15;
  std::vector<DriftKnot> drift;  // piecewise linear, held constant outside the knots
  std::vector<SelfCalibrationJump> selfcal_jumps;
  double miscalibration_offset = 0.0;

  // Additive offset in degrees C at time t (everything except the noise).
  double offset_at(double t) const;
};

struct Scenario {
  double duration_s = 180.0;
  double frame_rate = kDefaultFrameRate;
  std::uint32_t width = 84;
  std::uint32_t height = 63;
  RoomType room_type = RoomType::DeliveryRoom;
  double background_temp = 22.0;
  std::vector<BodyEntity> bodies;
  bool has_newborn = true;
  NewbornSpec newborn;
  double tob_s = 0.0;
  std::vector<TimeWindow> visibility;
  std::vector<Distractor> distractors;
  DistortionConfig distortion;
  double blur_sigma_px = 1.0;
  CalibrationMap calibration;
  std::uint64_t seed = 0;

  std::size_t frame_count() const;
  // Throws ValidationError on a broken invariant or an entity outside the frame.
  void validate() const;
};

struct GroundTruth {
  std::optional<std::size_t> tob_frame;
  std::optional<std::int64_t> tob_s;
  std::vector<std::uint8_t> vnb;                       // per frame
  std::vector<std::vector<std::uint8_t>> newborn_mask;  // per frame; empty when not visible

  AnnotationTrack to_annotations(double frame_rate) const;
};

// Per-frame VNB flags implied by the visibility windows.
std::vector<std::uint8_t> visibility_labels(const Scenario& scenario);

// Scene temperatures in degrees C before distortion and quantisation.
std::vector<double> render_clean_frame(const Scenario& scenario, std::size_t frame);

struct RenderResult {
  ThermalVideo video;
  GroundTruth truth;
};

RenderResult render_scene(const Scenario& scenario);
RenderResult render_scene_serial(const Scenario& scenario);

// Shifts every pixel by `offset` degrees C and re-quantises (clamped).
ThermalVideo apply_miscalibration(const ThermalVideo& video, double offset);

enum class RoomMix : std::uint8_t { Mixed, DeliveryOnly, TheatreOnly };

RoomMix room_mix_from_string(const std::string& name);

struct SuiteConfig {
  double duration_s = 180.0;
  double frame_rate = kDefaultFrameRate;
  std::uint32_t width = 84;
  std::uint32_t height = 63;
  double newborn_temp = 37.5;
  double delivery_skin_temp = 35.0;
  double theatre_skin_temp = 34.5;
  double noise_std = 0.15;
  double max_miscalibration = 3.0;
  int min_distractors = 2;
  int max_distractors = 4;
  double distractor_min_temp = 38.0;
  double distractor_max_temp = 42.0;
  double distractor_min_s = 4.0;
  double distractor_max_s = 25.0;
};

// Randomised, reproducible birth episodes. Mixed suites alternate delivery
// and theatre rooms.
std::vector<Scenario> scenario_suite(std::size_t n, RoomMix mix, std::uint64_t seed,
                                     const SuiteConfig& config = {});

nlohmann::json scenario_to_json(const Scenario& s);
Scenario scenario_from_json(const nlohmann::json& j);
nlohmann::json truth_to_json(const GroundTruth& truth);

}  // namespace thermotob::sim
