#include "thermotob/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <set>

#include "thermotob/error.hpp"

namespace thermotob::sim {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

double sway_x(const BodyEntity& b, double t) {
  if (b.sway_amplitude_px == 0.0) return b.shape.cx;
  return b.shape.cx +
         b.sway_amplitude_px * std::sin(2.0 * std::numbers::pi * t / b.sway_period_s + b.sway_phase);
}

void paint(std::vector<double>& field, std::uint32_t w, std::uint32_t h, const Ellipse& e, double temp) {
  const auto x0 = static_cast<std::int64_t>(std::floor(e.cx - e.rx));
  const auto x1 = static_cast<std::int64_t>(std::ceil(e.cx + e.rx));
  const auto y0 = static_cast<std::int64_t>(std::floor(e.cy - e.ry));
  const auto y1 = static_cast<std::int64_t>(std::ceil(e.cy + e.ry));
  for (std::int64_t y = std::max<std::int64_t>(0, y0); y <= std::min<std::int64_t>(h - 1, y1); ++y) {
    for (std::int64_t x = std::max<std::int64_t>(0, x0); x <= std::min<std::int64_t>(w - 1, x1); ++x) {
      if (e.contains(static_cast<double>(x), static_cast<double>(y))) {
        field[static_cast<std::size_t>(y) * w + static_cast<std::size_t>(x)] = temp;
      }
    }
  }
}

std::vector<double> gaussian_kernel(double sigma) {
  if (sigma <= 0.0) return {1.0};
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    const double v = std::exp(-0.5 * (i * i) / (sigma * sigma));
    k[static_cast<std::size_t>(i + radius)] = v;
    sum += v;
  }
  for (auto& v : k) v /= sum;
  return k;
}

// Separable blur with clamp-to-edge borders.
void blur(std::vector<double>& field, std::uint32_t w, std::uint32_t h, double sigma) {
  const auto k = gaussian_kernel(sigma);
  if (k.size() == 1) return;
  const int r = static_cast<int>(k.size() / 2);
  std::vector<double> tmp(field.size());
  for (std::uint32_t y = 0; y < h; ++y) {
    for (std::uint32_t x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = -r; i <= r; ++i) {
        const auto xx = std::clamp<std::int64_t>(std::int64_t{x} + i, 0, w - 1);
        acc += k[static_cast<std::size_t>(i + r)] * field[std::size_t{y} * w + static_cast<std::size_t>(xx)];
      }
      tmp[std::size_t{y} * w + x] = acc;
    }
  }
  for (std::uint32_t y = 0; y < h; ++y) {
    for (std::uint32_t x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = -r; i <= r; ++i) {
        const auto yy = std::clamp<std::int64_t>(std::int64_t{y} + i, 0, h - 1);
        acc += k[static_cast<std::size_t>(i + r)] * tmp[static_cast<std::size_t>(yy) * w + x];
      }
      field[std::size_t{y} * w + x] = acc;
    }
  }
}

std::vector<std::pair<std::size_t, std::size_t>> window_frames(const Scenario& s) {
  std::vector<std::pair<std::size_t, std::size_t>> out;  // half-open frame ranges
  const std::size_t n = s.frame_count();
  for (const auto& w : s.visibility) {
    const auto a = std::min(seconds_to_frame(w.start_s, s.frame_rate), n);
    const auto b = std::min(seconds_to_frame(w.end_s, s.frame_rate), n);
    if (a < b) out.emplace_back(a, b);
  }
  return out;
}

std::optional<std::size_t> tob_frame_of(const Scenario& s) {
  if (!s.has_newborn) return std::nullopt;
  return seconds_to_frame(s.tob_s, s.frame_rate);
}

std::vector<std::uint8_t> newborn_mask(const Scenario& s) {
  std::vector<std::uint8_t> mask(std::size_t{s.width} * s.height, 0);
  for (std::uint32_t y = 0; y < s.height; ++y) {
    for (std::uint32_t x = 0; x < s.width; ++x) {
      mask[std::size_t{y} * s.width + x] = s.newborn.shape.contains(x, y) ? 1 : 0;
    }
  }
  return mask;
}

std::vector<double> clean_frame(const Scenario& s, std::size_t n, bool visible,
                                std::optional<std::size_t> tob_frame) {
  const double t = static_cast<double>(n) / s.frame_rate;
  std::vector<double> field(std::size_t{s.width} * s.height, s.background_temp);
  for (const auto kind : {EntityKind::Object, EntityKind::Adult}) {
    for (const auto& b : s.bodies) {
      if (b.kind != kind) continue;
      Ellipse e = b.shape;
      e.cx = sway_x(b, t);
      paint(field, s.width, s.height, e, b.temperature);
    }
  }
  if (s.has_newborn && tob_frame && n >= *tob_frame) {
    if (visible) {
      paint(field, s.width, s.height, s.newborn.shape, s.newborn.temperature);
    } else {
      Ellipse towel = s.newborn.shape;
      towel.rx += s.newborn.towel_margin_px;
      towel.ry += s.newborn.towel_margin_px;
      paint(field, s.width, s.height, towel, s.newborn.towel_temperature);
    }
  }
  for (const auto& d : s.distractors) {
    if (t >= d.active.start_s && t < d.active.end_s) paint(field, s.width, s.height, d.shape, d.temperature);
  }
  blur(field, s.width, s.height, s.blur_sigma_px);
  return field;
}

ThermalFrame distort_and_quantise(const Scenario& s, std::size_t n, const std::vector<double>& clean) {
  const double t = static_cast<double>(n) / s.frame_rate;
  const double offset = s.distortion.offset_at(t);
  std::mt19937_64 rng(splitmix64(s.seed ^ splitmix64(n + 1)));
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<std::uint16_t> data(clean.size());
  for (std::size_t i = 0; i < clean.size(); ++i) {
    double temp = clean[i] + offset;
    if (s.distortion.noise_std > 0.0) temp += s.distortion.noise_std * noise(rng);
    data[i] = celsius_to_raw(temp, s.calibration);
  }
  return ThermalFrame(s.width, s.height, std::move(data));
}

RenderResult render(const Scenario& s, bool parallel) {
  s.validate();
  const std::size_t n_frames = s.frame_count();
  RenderResult r;
  r.truth.vnb = visibility_labels(s);
  r.truth.tob_frame = tob_frame_of(s);
  if (r.truth.tob_frame) r.truth.tob_s = frame_to_seconds(*r.truth.tob_frame, s.frame_rate);
  const auto mask = newborn_mask(s);
  r.truth.newborn_mask.resize(n_frames);
  for (std::size_t n = 0; n < n_frames; ++n) {
    if (r.truth.vnb[n]) r.truth.newborn_mask[n] = mask;
  }

  r.video.frame_rate = s.frame_rate;
  r.video.room_type = s.room_type;
  r.video.calibration = s.calibration;
  r.video.frames.resize(n_frames);
  const auto count = static_cast<std::int64_t>(n_frames);
  if (parallel) {
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < count; ++i) {
      const auto n = static_cast<std::size_t>(i);
      r.video.frames[n] = distort_and_quantise(s, n, clean_frame(s, n, r.truth.vnb[n] != 0, r.truth.tob_frame));
    }
  } else {
    for (std::size_t n = 0; n < n_frames; ++n) {
      r.video.frames[n] = distort_and_quantise(s, n, clean_frame(s, n, r.truth.vnb[n] != 0, r.truth.tob_frame));
    }
  }
  return r;
}

void check_inside(const Scenario& s, const std::string& what, double x, double y) {
  if (!(x >= 0.0 && y >= 0.0 && x <= s.width - 1.0 && y <= s.height - 1.0)) {
    throw ValidationError(what + " centre (" + std::to_string(x) + "," + std::to_string(y) +
                          ") lies outside the " + std::to_string(s.width) + "x" +
                          std::to_string(s.height) + " frame");
  }
}

}  // namespace

bool Ellipse::contains(double x, double y) const {
  const double dx = (x - cx) / rx;
  const double dy = (y - cy) / ry;
  return dx * dx + dy * dy <= 1.0;
}

double DistortionConfig::offset_at(double t) const {
  double off = miscalibration_offset;
  if (!drift.empty()) {
    if (t <= drift.front().time_s) {
      off += drift.front().offset;
    } else if (t >= drift.back().time_s) {
      off += drift.back().offset;
    } else {
      for (std::size_t i = 1; i < drift.size(); ++i) {
        if (t <= drift[i].time_s) {
          const auto& a = drift[i - 1];
          const auto& b = drift[i];
          const double u = (t - a.time_s) / (b.time_s - a.time_s);
          off += a.offset + u * (b.offset - a.offset);
          break;
        }
      }
    }
  }
  for (const auto& j : selfcal_jumps) {
    if (t >= j.time_s) off += j.step;
  }
  return off;
}

std::size_t Scenario::frame_count() const {
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(duration_s * frame_rate)));
}

void Scenario::validate() const {
  if (!(duration_s > 0.0) || !(frame_rate > 0.0)) throw ValidationError("duration and frame rate must be positive");
  if (width == 0 || height == 0) throw ValidationError("scenario resolution must be non-zero");
  if (!(calibration.scale > 0.0)) throw ValidationError("calibration scale must be positive");
  for (const auto& b : bodies) {
    check_inside(*this, "entity '" + b.name + "'", b.shape.cx - std::abs(b.sway_amplitude_px), b.shape.cy);
    check_inside(*this, "entity '" + b.name + "'", b.shape.cx + std::abs(b.sway_amplitude_px), b.shape.cy);
    if (!(b.shape.rx > 0.0 && b.shape.ry > 0.0)) throw ValidationError("entity '" + b.name + "' has a degenerate shape");
  }
  for (const auto& d : distractors) {
    check_inside(*this, "distractor '" + d.kind + "'", d.shape.cx, d.shape.cy);
    if (!(d.shape.rx > 0.0 && d.shape.ry > 0.0)) throw ValidationError("distractor has a degenerate shape");
  }
  if (!std::isfinite(distortion.noise_std) || distortion.noise_std < 0.0 ||
      !std::isfinite(distortion.miscalibration_offset)) {
    throw ValidationError("distortion magnitudes must be finite and noise_std >= 0");
  }
  for (std::size_t i = 1; i < distortion.drift.size(); ++i) {
    if (!(distortion.drift[i].time_s > distortion.drift[i - 1].time_s)) {
      throw ValidationError("drift knots must have increasing times");
    }
  }
  if (!has_newborn) {
    if (!visibility.empty()) throw ValidationError("visibility windows given for a scenario without a newborn");
    return;
  }
  check_inside(*this, "newborn", newborn.shape.cx, newborn.shape.cy);
  if (!(newborn.shape.rx > 0.0 && newborn.shape.ry > 0.0)) throw ValidationError("newborn has a degenerate shape");
  if (!(tob_s >= 0.0 && tob_s < duration_s)) throw ValidationError("tob_s must lie in [0, duration)");
  if (seconds_to_frame(tob_s, frame_rate) >= frame_count()) throw ValidationError("tob_s falls after the last frame");
  for (const auto& b : bodies) {
    if (b.kind == EntityKind::Adult && !(newborn.temperature > b.temperature)) {
      throw ValidationError("newborn temperature must exceed adult skin temperature of '" + b.name + "'");
    }
  }
  if (visibility.empty() || visibility.front().start_s != tob_s) {
    throw ValidationError("first visibility window must start at tob_s");
  }
  for (std::size_t i = 0; i < visibility.size(); ++i) {
    if (!(visibility[i].end_s > visibility[i].start_s)) throw ValidationError("empty visibility window");
    if (i > 0 && visibility[i].start_s < visibility[i - 1].end_s) {
      throw ValidationError("visibility windows must be sorted and non-overlapping");
    }
  }
}

AnnotationTrack GroundTruth::to_annotations(double frame_rate) const {
  AnnotationTrack track;
  track.fps = frame_rate;
  track.n_frames = vnb.size();
  track.tob_frame = tob_frame;
  for (std::size_t n = 0; n < vnb.size(); ++n) {
    if (!vnb[n]) continue;
    if (!track.vnb_intervals.empty() && track.vnb_intervals.back().end + 1 == n) {
      track.vnb_intervals.back().end = n;
    } else {
      track.vnb_intervals.push_back({n, n});
    }
  }
  return normalize_annotations(std::move(track));
}

std::vector<std::uint8_t> visibility_labels(const Scenario& scenario) {
  std::vector<std::uint8_t> labels(scenario.frame_count(), 0);
  if (!scenario.has_newborn) return labels;
  for (const auto& [a, b] : window_frames(scenario)) {
    for (std::size_t n = a; n < b; ++n) labels[n] = 1;
  }
  return labels;
}

std::vector<double> render_clean_frame(const Scenario& scenario, std::size_t frame) {
  scenario.validate();
  const auto labels = visibility_labels(scenario);
  if (frame >= labels.size()) throw DomainError("frame index beyond scenario length");
  return clean_frame(scenario, frame, labels[frame] != 0, tob_frame_of(scenario));
}

RenderResult render_scene(const Scenario& scenario) { return render(scenario, true); }
RenderResult render_scene_serial(const Scenario& scenario) { return render(scenario, false); }

ThermalVideo apply_miscalibration(const ThermalVideo& video, double offset) {
  if (!std::isfinite(offset)) throw DomainError("miscalibration offset must be finite");
  ThermalVideo out = video;
  for (auto& f : out.frames) {
    for (auto& px : f.data) px = celsius_to_raw(raw_to_celsius(px, video.calibration) + offset, video.calibration);
  }
  return out;
}

RoomMix room_mix_from_string(const std::string& name) {
  if (name == "mixed") return RoomMix::Mixed;
  if (name == "delivery") return RoomMix::DeliveryOnly;
  if (name == "theatre") return RoomMix::TheatreOnly;
  throw ValidationError("unknown room mix '" + name + "' (expected mixed, delivery or theatre)");
}

std::vector<Scenario> scenario_suite(std::size_t n, RoomMix mix, std::uint64_t seed, const SuiteConfig& cfg) {
  if (n == 0) throw DomainError("scenario suite needs n >= 1");
  std::vector<Scenario> suite;
  suite.reserve(n);
  std::set<long long> used_tobs;
  const double W = cfg.width;
  const double H = cfg.height;
  const double px = W / 84.0;  // sizes are tuned at 84 px width
  const auto lo_tob = static_cast<long long>(std::ceil(0.2 * cfg.duration_s));
  const auto hi_tob = static_cast<long long>(std::floor(0.8 * cfg.duration_s));

  for (std::size_t i = 0; i < n; ++i) {
    std::mt19937_64 rng(splitmix64(seed) ^ splitmix64(i + 0x51ULL));
    const auto uni = [&rng](double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng); };

    Scenario s;
    s.seed = splitmix64(seed + 7919 * (i + 1));
    s.duration_s = cfg.duration_s;
    s.frame_rate = cfg.frame_rate;
    s.width = cfg.width;
    s.height = cfg.height;
    s.room_type = mix == RoomMix::DeliveryOnly   ? RoomType::DeliveryRoom
                  : mix == RoomMix::TheatreOnly ? RoomType::OperationTheatre
                  : (i % 2 == 0 ? RoomType::DeliveryRoom : RoomType::OperationTheatre);
    const bool delivery = s.room_type == RoomType::DeliveryRoom;
    s.background_temp = delivery ? uni(21.0, 24.0) : uni(20.0, 22.0);
    const double skin = delivery ? cfg.delivery_skin_temp : cfg.theatre_skin_temp;

    s.bodies.push_back({"bed", EntityKind::Object, uni(26.0, 29.0),
                        {0.5 * W, 0.55 * H, 0.38 * W, 0.30 * H}, 0.0, 30.0, 0.0});
    const double mother_cx = 0.5 * W + uni(-0.05, 0.05) * W;
    s.bodies.push_back({"mother", EntityKind::Adult, skin + uni(-0.3, 0.3),
                        {mother_cx, 0.45 * H, 0.22 * W, 0.16 * H}, 0.0, 30.0, 0.0});
    s.bodies.push_back({"provider-1", EntityKind::Adult, skin + uni(-0.3, 0.3),
                        {0.15 * W + uni(-0.02, 0.02) * W, 0.30 * H, 0.10 * W, 0.12 * H},
                        uni(0.01, 0.04) * W, uni(15.0, 40.0), uni(0.0, 6.28)});
    s.bodies.push_back({"provider-2", EntityKind::Adult, skin + uni(-0.3, 0.3),
                        {0.85 * W + uni(-0.02, 0.02) * W, 0.35 * H, 0.10 * W, 0.12 * H},
                        uni(0.01, 0.04) * W, uni(15.0, 40.0), uni(0.0, 6.28)});

    s.has_newborn = true;
    s.newborn.temperature = cfg.newborn_temp + uni(-0.3, 0.3);
    s.newborn.shape = {mother_cx + uni(-0.05, 0.05) * W, 0.72 * H, 0.07 * W, 0.055 * H};
    s.newborn.towel_temperature = uni(28.0, 31.0);
    s.newborn.towel_margin_px = 1.0 * px;

    long long tob = 0;
    for (int attempt = 0;; ++attempt) {
      tob = std::uniform_int_distribution<long long>(lo_tob, hi_tob)(rng);
      if (!used_tobs.count(tob) || attempt > 1000) break;
    }
    used_tobs.insert(tob);
    s.tob_s = static_cast<double>(tob);

    double t = s.tob_s;
    double len = uni(6.0, 14.0);
    while (t < s.duration_s) {
      s.visibility.push_back({t, std::min(t + len, s.duration_s)});
      t += len + uni(5.0, 25.0);
      len = uni(2.0, 10.0);
    }

    const int n_distractors = std::uniform_int_distribution<int>(cfg.min_distractors, cfg.max_distractors)(rng);
    for (int d = 0; d < n_distractors; ++d) {
      const double r = uni(1.2, 2.0) * px;
      const double start = uni(0.0, s.duration_s - cfg.distractor_min_s);
      s.distractors.push_back({"pot", uni(cfg.distractor_min_temp, cfg.distractor_max_temp),
                               {uni(0.1, 0.9) * W, uni(0.1, 0.9) * H, r, r},
                               {start, std::min(start + uni(cfg.distractor_min_s, cfg.distractor_max_s), s.duration_s)}});
    }

    s.distortion.noise_std = cfg.noise_std;
    for (double k = 0.0; k <= s.duration_s + 1e-9; k += 60.0) s.distortion.drift.push_back({k, uni(-0.75, 0.75)});
    s.distortion.selfcal_jumps.push_back({uni(0.0, s.duration_s), uni(-0.5, 0.5)});
    s.distortion.miscalibration_offset = uni(-cfg.max_miscalibration, cfg.max_miscalibration);

    s.validate();
    suite.push_back(std::move(s));
  }
  return suite;
}

namespace {

nlohmann::json ellipse_json(const Ellipse& e) { return {{"cx", e.cx}, {"cy", e.cy}, {"rx", e.rx}, {"ry", e.ry}}; }
Ellipse ellipse_from(const nlohmann::json& j) {
  return {j.at("cx").get<double>(), j.at("cy").get<double>(), j.at("rx").get<double>(), j.at("ry").get<double>()};
}
nlohmann::json window_json(const TimeWindow& w) { return {w.start_s, w.end_s}; }
TimeWindow window_from(const nlohmann::json& j) { return {j.at(0).get<double>(), j.at(1).get<double>()}; }

}  // namespace

nlohmann::json scenario_to_json(const Scenario& s) {
  nlohmann::json j;
  j["duration_s"] = s.duration_s;
  j["frame_rate"] = s.frame_rate;
  j["width"] = s.width;
  j["height"] = s.height;
  j["room_type"] = to_string(s.room_type);
  j["background_temp"] = s.background_temp;
  j["bodies"] = nlohmann::json::array();
  for (const auto& b : s.bodies) {
    j["bodies"].push_back({{"name", b.name},
                           {"kind", b.kind == EntityKind::Adult ? "adult" : "object"},
                           {"temperature", b.temperature},
                           {"shape", ellipse_json(b.shape)},
                           {"sway_amplitude_px", b.sway_amplitude_px},
                           {"sway_period_s", b.sway_period_s},
                           {"sway_phase", b.sway_phase}});
  }
  j["has_newborn"] = s.has_newborn;
  j["newborn"] = {{"temperature", s.newborn.temperature},
                  {"shape", ellipse_json(s.newborn.shape)},
                  {"towel_temperature", s.newborn.towel_temperature},
                  {"towel_margin_px", s.newborn.towel_margin_px}};
  j["tob_s"] = s.tob_s;
  j["visibility"] = nlohmann::json::array();
  for (const auto& w : s.visibility) j["visibility"].push_back(window_json(w));
  j["distractors"] = nlohmann::json::array();
  for (const auto& d : s.distractors) {
    j["distractors"].push_back({{"kind", d.kind},
                                {"temperature", d.temperature},
                                {"shape", ellipse_json(d.shape)},
                                {"active", window_json(d.active)}});
  }
  nlohmann::json dist;
  dist["noise_std"] = s.distortion.noise_std;
  dist["drift"] = nlohmann::json::array();
  for (const auto& k : s.distortion.drift) dist["drift"].push_back({k.time_s, k.offset});
  dist["selfcal_jumps"] = nlohmann::json::array();
  for (const auto& k : s.distortion.selfcal_jumps) dist["selfcal_jumps"].push_back({k.time_s, k.step});
  dist["miscalibration_offset"] = s.distortion.miscalibration_offset;
  j["distortion"] = dist;
  j["blur_sigma_px"] = s.blur_sigma_px;
  j["calibration"] = {{"scale", s.calibration.scale}, {"offset", s.calibration.offset}};
  j["seed"] = s.seed;
  return j;
}

Scenario scenario_from_json(const nlohmann::json& j) {
  try {
    Scenario s;
    s.duration_s = j.at("duration_s").get<double>();
    s.frame_rate = j.at("frame_rate").get<double>();
    s.width = j.at("width").get<std::uint32_t>();
    s.height = j.at("height").get<std::uint32_t>();
    s.room_type = room_type_from_string(j.at("room_type").get<std::string>());
    s.background_temp = j.at("background_temp").get<double>();
    for (const auto& b : j.at("bodies")) {
      const auto kind = b.at("kind").get<std::string>();
      if (kind != "adult" && kind != "object") throw ValidationError("unknown entity kind '" + kind + "'");
      s.bodies.push_back({b.at("name").get<std::string>(), kind == "adult" ? EntityKind::Adult : EntityKind::Object,
                          b.at("temperature").get<double>(), ellipse_from(b.at("shape")),
                          b.value("sway_amplitude_px", 0.0), b.value("sway_period_s", 30.0),
                          b.value("sway_phase", 0.0)});
    }
    s.has_newborn = j.at("has_newborn").get<bool>();
    const auto& nb = j.at("newborn");
    s.newborn.temperature = nb.at("temperature").get<double>();
    s.newborn.shape = ellipse_from(nb.at("shape"));
    s.newborn.towel_temperature = nb.value("towel_temperature", 30.0);
    s.newborn.towel_margin_px = nb.value("towel_margin_px", 1.0);
    s.tob_s = j.at("tob_s").get<double>();
    for (const auto& w : j.at("visibility")) s.visibility.push_back(window_from(w));
    for (const auto& d : j.at("distractors")) {
      s.distractors.push_back({d.at("kind").get<std::string>(), d.at("temperature").get<double>(),
                               ellipse_from(d.at("shape")), window_from(d.at("active"))});
    }
    const auto& dist = j.at("distortion");
    s.distortion.noise_std = dist.at("noise_std").get<double>();
    for (const auto& k : dist.at("drift")) s.distortion.drift.push_back({k.at(0).get<double>(), k.at(1).get<double>()});
    for (const auto& k : dist.at("selfcal_jumps")) {
      s.distortion.selfcal_jumps.push_back({k.at(0).get<double>(), k.at(1).get<double>()});
    }
    s.distortion.miscalibration_offset = dist.at("miscalibration_offset").get<double>();
    s.blur_sigma_px = j.value("blur_sigma_px", 1.0);
    if (j.contains("calibration")) {
      s.calibration.scale = j.at("calibration").at("scale").get<double>();
      s.calibration.offset = j.at("calibration").at("offset").get<double>();
    }
    s.seed = j.at("seed").get<std::uint64_t>();
    s.validate();
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed scenario document: ") + e.what());
  }
}

nlohmann::json truth_to_json(const GroundTruth& truth) {
  nlohmann::json j;
  j["tob_frame"] = truth.tob_frame ? nlohmann::json(*truth.tob_frame) : nlohmann::json(nullptr);
  j["tob_s"] = truth.tob_s ? nlohmann::json(*truth.tob_s) : nlohmann::json(nullptr);
  std::size_t visible = 0;
  for (const auto v : truth.vnb) visible += v;
  j["n_frames"] = truth.vnb.size();
  j["vnb_frames"] = visible;
  return j;
}

}  // namespace thermotob::sim
