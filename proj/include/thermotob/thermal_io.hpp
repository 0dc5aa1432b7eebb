#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace thermotob {

inline constexpr std::uint16_t kMaxRaw = 16383;  // 14-bit sensor
inline constexpr double kDefaultFrameRate = 8.33;
inline constexpr std::size_t kContainerHeaderBytes = 45;

enum class RoomType : std::uint8_t { DeliveryRoom = 0, OperationTheatre = 1 };

std::string to_string(RoomType room);
RoomType room_type_from_string(const std::string& name);

// Affine raw -> Celsius map. Defaults span -40..125 C over the 14-bit range.
struct CalibrationMap {
  double scale = 165.0 / 16383.0;
  double offset = -40.0;

  bool operator==(const CalibrationMap&) const = default;
};

double raw_to_celsius(std::uint16_t raw, const CalibrationMap& cal);
// Nearest raw code, ties rounded away from zero, clamped to [0, kMaxRaw].
std::uint16_t celsius_to_raw(double celsius, const CalibrationMap& cal);

struct ThermalFrame {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::vector<std::uint16_t> data;  // row-major

  ThermalFrame() = default;
  ThermalFrame(std::uint32_t w, std::uint32_t h, std::vector<std::uint16_t> pixels);
  ThermalFrame(std::uint32_t w, std::uint32_t h) : width(w), height(h), data(std::size_t{w} * h, 0) {}

  std::size_t pixel_count() const noexcept { return data.size(); }
  std::uint16_t at(std::uint32_t x, std::uint32_t y) const { return data[std::size_t{y} * width + x]; }

  bool operator==(const ThermalFrame&) const = default;
};

struct ThermalVideo {
  std::vector<ThermalFrame> frames;
  double frame_rate = kDefaultFrameRate;
  RoomType room_type = RoomType::DeliveryRoom;
  CalibrationMap calibration;

  std::size_t frame_count() const noexcept { return frames.size(); }
  std::uint32_t width() const { return frames.empty() ? 0 : frames.front().width; }
  std::uint32_t height() const { return frames.empty() ? 0 : frames.front().height; }
  double duration_s() const { return static_cast<double>(frames.size()) / frame_rate; }

  // Throws ValidationError naming the first broken invariant.
  void validate() const;

  bool operator==(const ThermalVideo&) const = default;
};

// Binary ".thv" container, little-endian throughout.
std::uint64_t write_video(const ThermalVideo& video, std::ostream& sink);
ThermalVideo read_video(std::istream& source);
void save_video(const ThermalVideo& video, const std::string& path);
ThermalVideo load_video(const std::string& path);

// Frame indices 0, s, 2s, ... with s = max(1, floor(interval_s * frame_rate)).
std::vector<std::size_t> sampled_frame_indices(std::size_t frame_count, double frame_rate,
                                               double interval_s);
// All pixels of the sampled frames in Celsius, frame order then row-major.
std::vector<double> sample_temperatures(const ThermalVideo& video, double interval_s);

// Inclusive frame index range.
struct FrameInterval {
  std::size_t start = 0;
  std::size_t end = 0;

  bool contains(std::size_t n) const noexcept { return n >= start && n <= end; }
  bool operator==(const FrameInterval&) const = default;
};

// Visible-newborn intervals plus the manual ToB. NNB frames are the
// complement of the VNB intervals.
struct AnnotationTrack {
  double fps = kDefaultFrameRate;
  std::size_t n_frames = 0;
  std::vector<FrameInterval> vnb_intervals;
  std::optional<std::size_t> tob_frame;

  std::optional<std::int64_t> tob_seconds() const;
  bool is_vnb(std::size_t frame) const;
  std::vector<std::uint8_t> vnb_labels() const;

  bool operator==(const AnnotationTrack&) const = default;
};

// Sorts, merges adjacent intervals and validates. Throws ValidationError on
// overlap, reversed or out-of-range intervals, or a ToB outside [0, N-1].
AnnotationTrack normalize_annotations(AnnotationTrack track);

AnnotationTrack load_annotations(const std::string& json_text);
std::string save_annotations(const AnnotationTrack& track);
AnnotationTrack load_annotations_file(const std::string& path);
void save_annotations_file(const AnnotationTrack& track, const std::string& path);

// floor(frame / fps)
std::int64_t frame_to_seconds(std::size_t frame, double fps);
// First frame whose timestamp n / fps is at or after `seconds`.
std::size_t seconds_to_frame(double seconds, double fps);

}  // namespace thermotob
