#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "thermotob/error.hpp"
#include "thermotob/gmm.hpp"
#include "thermotob/simulator.hpp"

using namespace thermotob;
using namespace thermotob::sim;

namespace {

SuiteConfig short_config(double duration = 40.0) {
  SuiteConfig c;
  c.duration_s = duration;
  return c;
}

Scenario quiet_scenario() {
  auto s = scenario_suite(1, RoomMix::DeliveryOnly, 5, short_config())[0];
  s.distortion = {};
  s.distortion.noise_std = 0.0;
  return s;
}

}  // namespace

TEST_CASE("suite ToBs are distinct, inside the middle 60% and reproducible") {
  const auto a = scenario_suite(20, RoomMix::Mixed, 42);
  const auto b = scenario_suite(20, RoomMix::Mixed, 42);
  std::set<double> tobs;
  std::size_t theatre = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].tob_s >= 0.2 * a[i].duration_s);
    CHECK(a[i].tob_s <= 0.8 * a[i].duration_s);
    CHECK(scenario_to_json(a[i]) == scenario_to_json(b[i]));
    tobs.insert(a[i].tob_s);
    theatre += a[i].room_type == RoomType::OperationTheatre;
  }
  CHECK(tobs.size() == 20);
  CHECK(theatre == 10);
  const auto one = scenario_suite(1, RoomMix::Mixed, 1);
  CHECK(one[0].tob_s >= 36.0);
  CHECK(one[0].tob_s <= 144.0);
  for (const auto& s : scenario_suite(6, RoomMix::TheatreOnly, 3)) CHECK(s.room_type == RoomType::OperationTheatre);
  CHECK_THROWS_AS(scenario_suite(0, RoomMix::Mixed, 1), DomainError);
}

TEST_CASE("scenario JSON round trip") {
  const auto s = scenario_suite(1, RoomMix::Mixed, 7)[0];
  const auto back = scenario_from_json(scenario_to_json(s));
  CHECK(scenario_to_json(back) == scenario_to_json(s));
  CHECK_THROWS_AS(scenario_from_json(nlohmann::json::object()), FormatError);
}

TEST_CASE("scenario validation") {
  auto s = quiet_scenario();
  CHECK_NOTHROW(s.validate());
  SUBCASE("entity outside the frame") {
    s.bodies[1].shape.cx = -3.0;
    CHECK_THROWS_AS(s.validate(), ValidationError);
  }
  SUBCASE("newborn not warmer than adults") {
    s.newborn.temperature = 34.0;
    CHECK_THROWS_AS(s.validate(), ValidationError);
  }
  SUBCASE("first window must start at the ToB") {
    s.visibility[0].start_s += 1.0;
    CHECK_THROWS_AS(s.validate(), ValidationError);
  }
  SUBCASE("ToB outside the video") {
    s.tob_s = s.duration_s;
    s.visibility[0].start_s = s.tob_s;
    CHECK_THROWS_AS(s.validate(), ValidationError);
  }
  SUBCASE("non-finite distortion") {
    s.distortion.miscalibration_offset = std::nan("");
    CHECK_THROWS_AS(s.validate(), ValidationError);
  }
}

TEST_CASE("rendering is deterministic and the seed only moves the noise") {
  const auto s = scenario_suite(1, RoomMix::Mixed, 9, short_config())[0];
  const auto a = render_scene(s);
  const auto b = render_scene(s);
  CHECK(a.video == b.video);
  CHECK(a.truth.vnb == b.truth.vnb);
  auto t = s;
  t.seed ^= 0x1234;
  const auto c = render_scene(t);
  CHECK(c.truth.vnb == a.truth.vnb);
  CHECK(c.truth.tob_frame == a.truth.tob_frame);
  CHECK_FALSE(c.video == a.video);
}

TEST_CASE("no newborn means every frame is NNB") {
  auto s = quiet_scenario();
  s.has_newborn = false;
  s.visibility.clear();
  const auto r = render_scene(s);
  CHECK(std::all_of(r.truth.vnb.begin(), r.truth.vnb.end(), [](auto v) { return v == 0; }));
  CHECK_FALSE(r.truth.tob_frame.has_value());
  CHECK_FALSE(r.truth.to_annotations(s.frame_rate).tob_frame.has_value());
}

TEST_CASE("ground truth agrees with the visibility windows") {
  const auto s = scenario_suite(1, RoomMix::Mixed, 11, short_config(90.0))[0];
  const auto r = render_scene(s);
  const auto track = r.truth.to_annotations(s.frame_rate);
  REQUIRE(r.truth.tob_frame.has_value());
  CHECK(*r.truth.tob_frame == seconds_to_frame(s.tob_s, s.frame_rate));
  CHECK(*r.truth.tob_s == frame_to_seconds(*r.truth.tob_frame, s.frame_rate));
  CHECK(track.tob_seconds() == r.truth.tob_s);
  CHECK(r.truth.vnb[*r.truth.tob_frame] == 1);
  for (std::size_t n = 0; n < r.truth.vnb.size(); ++n) {
    const double t = static_cast<double>(n) / s.frame_rate;
    bool in_window = false;
    for (const auto& w : s.visibility) in_window = in_window || (t >= w.start_s && t < w.end_s);
    REQUIRE(static_cast<bool>(r.truth.vnb[n]) == in_window);
    REQUIRE(track.is_vnb(n) == in_window);
    if (in_window) {
      REQUIRE(std::any_of(r.truth.newborn_mask[n].begin(), r.truth.newborn_mask[n].end(), [](auto v) { return v; }));
    } else {
      REQUIRE(r.truth.newborn_mask[n].empty());
    }
  }
}

TEST_CASE("before distortion the hottest pixel after birth lies on the newborn") {
  auto s = quiet_scenario();
  s.distractors.clear();
  const auto labels = visibility_labels(s);
  const auto r = render_scene(s);
  const auto tob = *r.truth.tob_frame;
  const auto clean = render_clean_frame(s, tob);
  const auto hottest = static_cast<std::size_t>(std::max_element(clean.begin(), clean.end()) - clean.begin());
  CHECK(r.truth.newborn_mask[tob][hottest] == 1);
  CHECK(labels[tob] == 1);
}

TEST_CASE("temperature ordering at mask centres") {
  auto s = quiet_scenario();
  s.distractors.clear();
  const auto tob = seconds_to_frame(s.tob_s, s.frame_rate);
  const auto clean = render_clean_frame(s, tob);
  const auto at = [&](double x, double y) {
    return clean[static_cast<std::size_t>(std::lround(y)) * s.width + static_cast<std::size_t>(std::lround(x))];
  };
  const double newborn = at(s.newborn.shape.cx, s.newborn.shape.cy);
  const auto& mother = s.bodies[1];
  const double adult = at(mother.shape.cx, mother.shape.cy);
  const double background = at(1.0, 1.0);
  CHECK(newborn > adult);
  CHECK(adult > background);
}

TEST_CASE("drift adds up to within one raw step") {
  auto base = quiet_scenario();
  base.distortion.drift = {{0.0, 0.3}, {40.0, -0.4}};
  auto shifted = base;
  for (auto& k : shifted.distortion.drift) k.offset += 0.7;
  const auto a = render_scene(shifted).video;
  const auto b = apply_miscalibration(render_scene(base).video, 0.7);
  for (std::size_t n = 0; n < a.frames.size(); ++n) {
    for (std::size_t i = 0; i < a.frames[n].data.size(); ++i) {
      REQUIRE(std::abs(int(a.frames[n].data[i]) - int(b.frames[n].data[i])) <= 1);
    }
  }
}

TEST_CASE("offset profile combines drift, jumps and miscalibration") {
  DistortionConfig d;
  d.drift = {{0.0, 0.0}, {10.0, 1.0}};
  d.selfcal_jumps = {{5.0, -0.5}};
  d.miscalibration_offset = 2.0;
  CHECK(d.offset_at(0.0) == 2.0);
  CHECK(d.offset_at(5.0) == doctest::Approx(2.0 + 0.5 - 0.5));
  CHECK(d.offset_at(20.0) == doctest::Approx(2.0 + 1.0 - 0.5));
}

TEST_CASE("miscalibration shifts readings") {
  ThermalVideo v;
  v.frames.emplace_back(2, 1, std::vector<std::uint16_t>{celsius_to_raw(35.0, {}), celsius_to_raw(22.0, {})});
  const auto same = apply_miscalibration(v, 0.0);
  CHECK(same == v);
  const auto hot = apply_miscalibration(v, 30.0);
  CHECK(raw_to_celsius(hot.frames[0].data[0], hot.calibration) > 60.0);
  CHECK(raw_to_celsius(hot.frames[0].data[0], hot.calibration) == doctest::Approx(65.0).epsilon(1e-3));
  const auto clamped = apply_miscalibration(v, 500.0);
  CHECK(clamped.frames[0].data[0] == kMaxRaw);
  CHECK_THROWS_AS(apply_miscalibration(v, std::nan("")), DomainError);
}

TEST_CASE("GMM normalization is unchanged by a constant offset") {
  const auto s = scenario_suite(1, RoomMix::Mixed, 21, short_config(60.0))[0];
  const auto video = render_scene(s).video;
  const auto profile = default_room_profile(video.room_type);
  const auto base = normalize_pipeline(video, profile);
  const double step = video.calibration.scale / profile.span();
  for (double c : {-20.0, 5.0, 30.0}) {
    const auto shifted = normalize_pipeline(apply_miscalibration(video, c), profile);
    double worst = 0.0;
    for (std::size_t n = 0; n < base.normalized.frames.size(); ++n) {
      for (std::size_t i = 0; i < base.normalized.frames[n].size(); ++i) {
        worst = std::max(worst, std::abs(base.normalized.frames[n][i] - shifted.normalized.frames[n][i]));
      }
    }
    CHECK(worst <= step * (1.0 + 1e-6));
  }
}
