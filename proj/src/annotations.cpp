#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "thermotob/error.hpp"
#include "thermotob/thermal_io.hpp"

namespace thermotob {

using nlohmann::json;

std::optional<std::int64_t> AnnotationTrack::tob_seconds() const {
  if (!tob_frame) return std::nullopt;
  return frame_to_seconds(*tob_frame, fps);
}

bool AnnotationTrack::is_vnb(std::size_t frame) const {
  return std::any_of(vnb_intervals.begin(), vnb_intervals.end(),
                     [frame](const FrameInterval& iv) { return iv.contains(frame); });
}

std::vector<std::uint8_t> AnnotationTrack::vnb_labels() const {
  std::vector<std::uint8_t> labels(n_frames, 0);
  for (const auto& iv : vnb_intervals) {
    for (std::size_t n = iv.start; n <= iv.end && n < n_frames; ++n) labels[n] = 1;
  }
  return labels;
}

AnnotationTrack normalize_annotations(AnnotationTrack track) {
  if (!(track.fps > 0.0) || !std::isfinite(track.fps)) throw ValidationError("fps must be positive");
  if (track.n_frames == 0) throw ValidationError("n_frames must be >= 1");
  for (const auto& iv : track.vnb_intervals) {
    if (iv.start > iv.end) {
      throw ValidationError("interval [" + std::to_string(iv.start) + "," + std::to_string(iv.end) +
                            "] is reversed");
    }
    if (iv.end >= track.n_frames) {
      throw ValidationError("interval [" + std::to_string(iv.start) + "," + std::to_string(iv.end) +
                            "] exceeds last frame " + std::to_string(track.n_frames - 1));
    }
  }
  std::sort(track.vnb_intervals.begin(), track.vnb_intervals.end(),
            [](const FrameInterval& a, const FrameInterval& b) { return a.start < b.start; });
  std::vector<FrameInterval> merged;
  for (const auto& iv : track.vnb_intervals) {
    if (!merged.empty()) {
      auto& last = merged.back();
      if (iv.start <= last.end) {
        throw ValidationError("overlapping intervals [" + std::to_string(last.start) + "," +
                              std::to_string(last.end) + "] and [" + std::to_string(iv.start) + "," +
                              std::to_string(iv.end) + "]");
      }
      if (iv.start == last.end + 1) {
        last.end = iv.end;
        continue;
      }
    }
    merged.push_back(iv);
  }
  track.vnb_intervals = std::move(merged);
  if (track.tob_frame && *track.tob_frame >= track.n_frames) {
    throw ValidationError("tob_frame " + std::to_string(*track.tob_frame) + " outside [0," +
                          std::to_string(track.n_frames - 1) + "]");
  }
  return track;
}

AnnotationTrack load_annotations(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("annotation document is not valid JSON: ") + e.what());
  }
  try {
    AnnotationTrack track;
    track.fps = doc.at("fps").get<double>();
    const auto n = doc.at("n_frames").get<std::int64_t>();
    if (n <= 0) throw ValidationError("n_frames must be >= 1");
    track.n_frames = static_cast<std::size_t>(n);
    for (const auto& pair : doc.at("vnb")) {
      if (!pair.is_array() || pair.size() != 2) throw FormatError("vnb entries must be [start,end]");
      const auto s = pair[0].get<std::int64_t>();
      const auto e = pair[1].get<std::int64_t>();
      if (s < 0 || e < 0) throw ValidationError("negative frame index in vnb interval");
      track.vnb_intervals.push_back({static_cast<std::size_t>(s), static_cast<std::size_t>(e)});
    }
    if (doc.contains("tob_frame") && !doc.at("tob_frame").is_null()) {
      const auto t = doc.at("tob_frame").get<std::int64_t>();
      if (t < 0) throw ValidationError("tob_frame must be >= 0");
      track.tob_frame = static_cast<std::size_t>(t);
    }
    return normalize_annotations(std::move(track));
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed annotation document: ") + e.what());
  }
}

std::string save_annotations(const AnnotationTrack& track) {
  const auto norm = normalize_annotations(track);
  json doc;
  doc["fps"] = norm.fps;
  doc["n_frames"] = norm.n_frames;
  doc["vnb"] = json::array();
  for (const auto& iv : norm.vnb_intervals) doc["vnb"].push_back({iv.start, iv.end});
  doc["tob_frame"] = norm.tob_frame ? json(*norm.tob_frame) : json(nullptr);
  return doc.dump(2) + "\n";
}

AnnotationTrack load_annotations_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "' for reading", 0);
  std::ostringstream ss;
  ss << in.rdbuf();
  return load_annotations(ss.str());
}

void save_annotations_file(const AnnotationTrack& track, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing", 0);
  out << save_annotations(track);
  if (!out) throw IoError("write failed for '" + path + "'", 0);
}

}  // namespace thermotob
