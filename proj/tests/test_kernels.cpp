#include <doctest.h>

#include <cmath>
#include <random>

#include <omp.h>

#include "thermotob/features.hpp"
#include "thermotob/kernels.hpp"
#include "thermotob/simulator.hpp"

using namespace thermotob;

namespace {

std::vector<double> random_values(std::size_t n, std::uint64_t seed, double lo, double hi) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

std::vector<std::uint16_t> random_raw(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> u(0, kMaxRaw);
  std::vector<std::uint16_t> v(n);
  for (auto& x : v) x = static_cast<std::uint16_t>(u(rng));
  return v;
}

}  // namespace

TEST_CASE("E-step: parallel matches serial and ignores the thread count") {
  const auto x = random_values(50000, 1, 15.0, 40.0);
  const std::vector<kernels::MixtureTerm> terms = {{22.0, 2.0, std::log(0.5)}, {30.0, 1.0, std::log(0.3)},
                                                   {36.0, 0.5, std::log(0.2)}};
  const auto a = kernels::serial::estep(x, terms);
  const auto b = kernels::parallel::estep(x, terms);
  // blocked summation differs from a running sum only by rounding
  CHECK(b.log_likelihood == doctest::Approx(a.log_likelihood).epsilon(1e-12));
  for (std::size_t k = 0; k < terms.size(); ++k) {
    CHECK(b.resp[k] == doctest::Approx(a.resp[k]).epsilon(1e-12));
    CHECK(b.first[k] == doctest::Approx(a.first[k]).epsilon(1e-9));
    CHECK(b.second[k] == doctest::Approx(a.second[k]).epsilon(1e-12));
  }
  const int saved = omp_get_max_threads();
  omp_set_num_threads(1);
  const auto one = kernels::parallel::estep(x, terms);
  omp_set_num_threads(4);
  const auto four = kernels::parallel::estep(x, terms);
  omp_set_num_threads(saved);
  CHECK(one.log_likelihood == four.log_likelihood);
  CHECK(one.resp == four.resp);
  CHECK(one.first == four.first);
  CHECK(one.second == four.second);
  double total = 0.0;
  for (const double r : a.resp) total += r;
  CHECK(total == doctest::Approx(50000.0));
}

TEST_CASE("normalization kernels agree") {
  const auto raw = random_raw(70000, 2);
  const CalibrationMap cal;
  std::vector<double> a(raw.size());
  std::vector<double> b(raw.size());
  kernels::serial::normalize(raw, cal, 30.0, 45.0, a);
  kernels::parallel::normalize(raw, cal, 30.0, 45.0, b);
  CHECK(a == b);
  kernels::serial::maxmin_normalize(raw, cal, a);
  kernels::parallel::maxmin_normalize(raw, cal, b);
  CHECK(a == b);
}

TEST_CASE("moving average kernels agree") {
  const auto x = random_values(20000, 3, 0.0, 1.0);
  for (std::size_t k : {1, 7, 25, 300}) {
    std::vector<double> a(x.size());
    std::vector<double> b(x.size());
    kernels::serial::fir_moving_average(x, k, a);
    kernels::parallel::fir_moving_average(x, k, b);
    CHECK(a == b);
  }
}

TEST_CASE("feature kernels agree") {
  std::vector<std::vector<double>> frames;
  for (std::uint64_t s = 0; s < 40; ++s) frames.push_back(random_values(30 * 20, s, 0.0, 1.0));
  CHECK(kernels::serial::frame_features(frames, 30, 20) == kernels::parallel::frame_features(frames, 30, 20));
}

TEST_CASE("serial and parallel rendering agree") {
  sim::SuiteConfig cfg;
  cfg.duration_s = 20.0;
  const auto s = sim::scenario_suite(1, sim::RoomMix::Mixed, 4, cfg)[0];
  const auto a = sim::render_scene(s);
  const auto b = sim::render_scene_serial(s);
  CHECK(a.video == b.video);
  CHECK(a.truth.vnb == b.truth.vnb);
}
