#include "thermotob/thermal_io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "thermotob/error.hpp"

namespace thermotob {

namespace {

constexpr std::array<char, 8> kMagic = {'T', 'H', 'E', 'R', 'M', 'V', '0', '1'};

class LeWriter {
 public:
  explicit LeWriter(std::ostream& out) : out_(out) {}

  void bytes(const void* data, std::size_t n) {
    out_.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
    if (!out_) throw IoError("write failed", written_);
    written_ += n;
  }
  void u8(std::uint8_t v) { bytes(&v, 1); }
  void u32(std::uint32_t v) {
    std::array<std::uint8_t, 4> b{};
    for (int i = 0; i < 4; ++i) b[i] = static_cast<std::uint8_t>(v >> (8 * i));
    bytes(b.data(), b.size());
  }
  void f64(double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    std::array<std::uint8_t, 8> b{};
    for (int i = 0; i < 8; ++i) b[i] = static_cast<std::uint8_t>(bits >> (8 * i));
    bytes(b.data(), b.size());
  }
  std::uint64_t written() const { return written_; }

 private:
  std::ostream& out_;
  std::uint64_t written_ = 0;
};

class LeReader {
 public:
  explicit LeReader(std::istream& in) : in_(in) {}

  void bytes(void* data, std::size_t n, const char* what) {
    in_.read(static_cast<char*>(data), static_cast<std::streamsize>(n));
    const auto got = static_cast<std::size_t>(in_.gcount());
    if (got != n) {
      throw FormatError(std::string("truncated container while reading ") + what + ": expected " +
                        std::to_string(n) + " bytes at offset " + std::to_string(read_) + ", got " +
                        std::to_string(got));
    }
    read_ += n;
  }
  std::uint8_t u8(const char* what) {
    std::uint8_t v = 0;
    bytes(&v, 1, what);
    return v;
  }
  std::uint32_t u32(const char* what) {
    std::array<std::uint8_t, 4> b{};
    bytes(b.data(), b.size(), what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t{b[i]} << (8 * i);
    return v;
  }
  double f64(const char* what) {
    std::array<std::uint8_t, 8> b{};
    bytes(b.data(), b.size(), what);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t{b[i]} << (8 * i);
    return std::bit_cast<double>(v);
  }
  std::uint64_t offset() const { return read_; }

 private:
  std::istream& in_;
  std::uint64_t read_ = 0;
};

}  // namespace

std::string to_string(RoomType room) {
  return room == RoomType::DeliveryRoom ? "delivery" : "theatre";
}

RoomType room_type_from_string(const std::string& name) {
  if (name == "delivery") return RoomType::DeliveryRoom;
  if (name == "theatre") return RoomType::OperationTheatre;
  throw ValidationError("unknown room type '" + name + "' (expected delivery or theatre)");
}

double raw_to_celsius(std::uint16_t raw, const CalibrationMap& cal) {
  if (raw > kMaxRaw) throw DomainError("raw value " + std::to_string(raw) + " exceeds 14-bit range");
  return cal.offset + cal.scale * static_cast<double>(raw);
}

std::uint16_t celsius_to_raw(double celsius, const CalibrationMap& cal) {
  const double code = std::round((celsius - cal.offset) / cal.scale);
  if (!(code > 0.0)) return 0;  // also catches NaN
  if (code >= kMaxRaw) return kMaxRaw;
  return static_cast<std::uint16_t>(code);
}

ThermalFrame::ThermalFrame(std::uint32_t w, std::uint32_t h, std::vector<std::uint16_t> pixels)
    : width(w), height(h), data(std::move(pixels)) {
  if (data.size() != std::size_t{w} * h) {
    throw ValidationError("frame data length " + std::to_string(data.size()) + " != " +
                          std::to_string(w) + "x" + std::to_string(h));
  }
}

void ThermalVideo::validate() const {
  if (frames.empty()) throw ValidationError("video must contain at least one frame (N >= 1)");
  if (!(frame_rate > 0.0) || !std::isfinite(frame_rate)) {
    throw ValidationError("frame rate must be positive and finite");
  }
  if (!(calibration.scale > 0.0) || !std::isfinite(calibration.scale) ||
      !std::isfinite(calibration.offset)) {
    throw ValidationError("calibration scale must be positive and finite");
  }
  const auto w = frames.front().width;
  const auto h = frames.front().height;
  if (w == 0 || h == 0) throw ValidationError("frame resolution must be non-zero");
  for (std::size_t f = 0; f < frames.size(); ++f) {
    const auto& fr = frames[f];
    if (fr.width != w || fr.height != h) {
      throw ValidationError("frame " + std::to_string(f) + " resolution differs from frame 0");
    }
    if (fr.data.size() != std::size_t{w} * h) {
      throw ValidationError("frame " + std::to_string(f) + " has wrong data length");
    }
    for (std::size_t i = 0; i < fr.data.size(); ++i) {
      if (fr.data[i] > kMaxRaw) {
        throw ValidationError("raw value " + std::to_string(fr.data[i]) + " > 16383 at frame " +
                              std::to_string(f) + ", pixel (" + std::to_string(i % w) + "," +
                              std::to_string(i / w) + ")");
      }
    }
  }
}

std::uint64_t write_video(const ThermalVideo& video, std::ostream& sink) {
  video.validate();
  LeWriter out(sink);
  out.bytes(kMagic.data(), kMagic.size());
  out.u32(video.width());
  out.u32(video.height());
  out.u32(static_cast<std::uint32_t>(video.frame_count()));
  out.f64(video.frame_rate);
  out.u8(static_cast<std::uint8_t>(video.room_type));
  out.f64(video.calibration.scale);
  out.f64(video.calibration.offset);

  std::vector<std::uint8_t> buf;
  for (const auto& frame : video.frames) {
    buf.resize(frame.data.size() * 2);
    for (std::size_t i = 0; i < frame.data.size(); ++i) {
      buf[2 * i] = static_cast<std::uint8_t>(frame.data[i] & 0xFF);
      buf[2 * i + 1] = static_cast<std::uint8_t>(frame.data[i] >> 8);
    }
    out.bytes(buf.data(), buf.size());
  }
  return out.written();
}

ThermalVideo read_video(std::istream& source) {
  LeReader in(source);
  std::array<char, 8> magic{};
  in.bytes(magic.data(), magic.size(), "magic");
  if (magic != kMagic) throw FormatError("bad magic: not a THERMV01 container");

  const auto width = in.u32("width");
  const auto height = in.u32("height");
  const auto count = in.u32("frame count");
  ThermalVideo video;
  video.frame_rate = in.f64("frame rate");
  const auto room = in.u8("room type");
  if (room > 1) throw FormatError("invalid room type byte " + std::to_string(room));
  video.room_type = static_cast<RoomType>(room);
  video.calibration.scale = in.f64("calibration scale");
  video.calibration.offset = in.f64("calibration offset");
  if (count == 0) throw ValidationError("video must contain at least one frame (N >= 1)");
  if (width == 0 || height == 0) throw ValidationError("frame resolution must be non-zero");

  const std::size_t pixels = std::size_t{width} * height;
  const std::uint64_t expected_payload = std::uint64_t{2} * pixels * count;
  std::vector<std::uint8_t> buf(pixels * 2);
  video.frames.reserve(count);
  for (std::uint32_t f = 0; f < count; ++f) {
    source.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    const auto got = static_cast<std::uint64_t>(source.gcount());
    if (got != buf.size()) {
      const std::uint64_t actual = std::uint64_t{2} * pixels * f + got;
      throw FormatError("truncated payload: expected " + std::to_string(expected_payload) +
                        " payload bytes, got " + std::to_string(actual));
    }
    std::vector<std::uint16_t> data(pixels);
    for (std::size_t i = 0; i < pixels; ++i) {
      data[i] = static_cast<std::uint16_t>(buf[2 * i] | (std::uint16_t{buf[2 * i + 1]} << 8));
      if (data[i] > kMaxRaw) {
        throw ValidationError("raw value " + std::to_string(data[i]) + " > 16383 at frame " +
                              std::to_string(f) + ", pixel (" + std::to_string(i % width) + "," +
                              std::to_string(i / width) + ")");
      }
    }
    video.frames.emplace_back(width, height, std::move(data));
  }
  video.validate();
  return video;
}

void save_video(const ThermalVideo& video, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing", 0);
  write_video(video, out);
  out.flush();
  if (!out) throw IoError("flush failed for '" + path + "'", 0);
}

ThermalVideo load_video(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading", 0);
  return read_video(in);
}

std::vector<std::size_t> sampled_frame_indices(std::size_t frame_count, double frame_rate,
                                               double interval_s) {
  if (!(interval_s > 0.0)) throw DomainError("sampling interval must be positive");
  const auto step = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(interval_s * frame_rate)));
  std::vector<std::size_t> idx;
  for (std::size_t n = 0; n < frame_count; n += step) idx.push_back(n);
  return idx;
}

std::vector<double> sample_temperatures(const ThermalVideo& video, double interval_s) {
  const auto idx = sampled_frame_indices(video.frame_count(), video.frame_rate, interval_s);
  std::vector<double> v;
  if (!video.frames.empty()) v.reserve(idx.size() * video.frames.front().pixel_count());
  for (const auto n : idx) {
    for (const auto raw : video.frames[n].data) v.push_back(raw_to_celsius(raw, video.calibration));
  }
  return v;
}

std::int64_t frame_to_seconds(std::size_t frame, double fps) {
  return static_cast<std::int64_t>(std::floor(static_cast<double>(frame) / fps));
}

std::size_t seconds_to_frame(double seconds, double fps) {
  if (seconds <= 0.0) return 0;
  auto n = static_cast<std::size_t>(std::ceil(seconds * fps));
  while (n > 0 && static_cast<double>(n - 1) / fps >= seconds) --n;
  while (static_cast<double>(n) / fps < seconds) ++n;
  return n;
}

}  // namespace thermotob
