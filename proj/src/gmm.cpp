#include "thermotob/gmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <random>

#include "thermotob/error.hpp"
#include "thermotob/kernels.hpp"
#include "thermotob/stats.hpp"

namespace thermotob {

SampleStats compute_sample_stats(std::span<const double> v) {
  if (v.empty()) throw DomainError("sample statistics of an empty vector");
  SampleStats s;
  s.count = v.size();
  s.min = v[0];
  s.max = v[0];
  double sum = 0.0;
  for (const double x : v) {
    sum += x;
    s.min = std::min(s.min, x);
    s.max = std::max(s.max, x);
  }
  s.mean = sum / static_cast<double>(v.size());
  double ss = 0.0;
  for (const double x : v) ss += (x - s.mean) * (x - s.mean);
  s.variance = ss / static_cast<double>(v.size());
  s.mean = std::clamp(s.mean, s.min, s.max);
  return s;
}

namespace {

std::vector<double> subsample(std::span<const double> v, std::size_t cap, std::uint64_t seed) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < cap; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, idx.size() - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  idx.resize(cap);
  std::sort(idx.begin(), idx.end());
  std::vector<double> out;
  out.reserve(cap);
  for (const auto i : idx) out.push_back(v[i]);
  return out;
}

std::vector<kernels::MixtureTerm> to_terms(const std::vector<GmmComponent>& comps) {
  std::vector<kernels::MixtureTerm> terms;
  terms.reserve(comps.size());
  for (const auto& c : comps) {
    terms.push_back({c.mean, c.variance,
                     c.weight > 0.0 ? std::log(c.weight) : -std::numeric_limits<double>::infinity()});
  }
  return terms;
}

}  // namespace

double gmm_log_likelihood(std::span<const double> v, const GmmModel& model) {
  const auto terms = to_terms(model.components);
  return kernels::parallel::estep(v, terms).log_likelihood;
}

GmmModel fit_gmm(std::span<const double> input, std::size_t m, const EmConfig& config,
                 std::uint64_t seed) {
  if (m < 1) throw DomainError("component count must be >= 1");
  if (input.size() < 10 * m) {
    throw DomainError("too few samples for " + std::to_string(m) + " components: got " +
                      std::to_string(input.size()) + ", need >= " + std::to_string(10 * m));
  }
  std::vector<double> owned;
  std::span<const double> v = input;
  if (config.max_samples != 0 && input.size() > config.max_samples) {
    owned = subsample(input, std::max(config.max_samples, 10 * m), seed);
    v = owned;
  }

  const auto stats = compute_sample_stats(v);
  if (!(stats.max > stats.min)) throw DomainError("all samples identical; variance is zero");

  std::vector<double> sorted(v.begin(), v.end());
  std::sort(sorted.begin(), sorted.end());
  const double init_var = std::max(stats.variance / static_cast<double>(m), config.variance_floor);

  GmmModel model;
  model.components.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    const double p = static_cast<double>(2 * i + 1) / static_cast<double>(2 * m);
    model.components[i] = {1.0 / static_cast<double>(m), quantile_sorted(sorted, p), init_var};
  }

  const double n = static_cast<double>(v.size());
  for (int iter = 0;; ++iter) {
    const auto sums = kernels::parallel::estep(v, to_terms(model.components));
    const double ll = sums.log_likelihood;
    model.log_likelihood = ll;
    model.log_likelihood_history.push_back(ll);
    if (iter > 0) {
      const double prev = model.log_likelihood_history[model.log_likelihood_history.size() - 2];
      if (std::abs(ll - prev) < config.tolerance * std::abs(prev)) {
        model.converged = true;
        break;
      }
    }
    if (iter >= config.max_iterations) break;

    // M-step on moments about the previous means.
    double weight_total = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
      auto& c = model.components[k];
      const double nk = sums.resp[k];
      if (nk > 1e-12 * n) {
        const double shift = sums.first[k] / nk;
        c.mean += shift;
        c.variance = std::max(sums.second[k] / nk - shift * shift, config.variance_floor);
      }
      c.weight = nk / n;
      weight_total += c.weight;
    }
    for (auto& c : model.components) c.weight /= weight_total;
    model.iterations = iter + 1;
  }
  return model;
}

SkinSelection select_skin_component(const GmmModel& model, const SampleStats& stats,
                                    const SkinConstraints& constraints) {
  if (model.components.empty()) throw DomainError("model has no components");
  SkinSelection sel;
  sel.diagnostics.reserve(model.components.size());
  std::optional<std::size_t> best;
  std::size_t highest = 0;
  for (std::size_t i = 0; i < model.components.size(); ++i) {
    const auto& c = model.components[i];
    ComponentCheck check;
    check.variance_ok = c.variance <= constraints.max_variance_ratio * stats.variance;
    check.weight_ok = c.weight >= constraints.min_weight;
    sel.diagnostics.push_back(check);
    if (c.mean > model.components[highest].mean) highest = i;
    if (check.qualifies() && (!best || c.mean > model.components[*best].mean)) best = i;
  }
  sel.fallback_used = !best.has_value();
  sel.chosen_index = best.value_or(highest);
  sel.mu_hat = model.components[sel.chosen_index].mean;
  return sel;
}

void RoomProfile::validate() const {
  if (!std::isfinite(lower_offset) || !std::isfinite(upper_offset)) {
    throw ValidationError("room profile offsets must be finite");
  }
  if (lower_offset > 0.0) throw ValidationError("room profile lower offset must be <= 0");
  if (!(upper_offset > 0.0)) throw ValidationError("room profile upper offset must be > 0");
}

RoomProfile default_room_profile(RoomType room) {
  return room == RoomType::DeliveryRoom ? RoomProfile{-5.0, 10.0} : RoomProfile{-2.5, 12.5};
}

RoiBounds roi_bounds(double mu_hat, const RoomProfile& profile) {
  profile.validate();
  return {mu_hat + profile.lower_offset, mu_hat + profile.upper_offset};
}

std::vector<double> normalize_frame(const ThermalFrame& frame, const CalibrationMap& cal,
                                    const RoiBounds& bounds) {
  if (!(bounds.lo < bounds.hi)) throw DomainError("range of interest requires lo < hi");
  std::vector<double> out(frame.pixel_count());
  kernels::parallel::normalize(frame.data, cal, bounds.lo, bounds.hi, out);
  return out;
}

NormalizedVideo normalize_video(const ThermalVideo& video, const RoiBounds& bounds) {
  if (!(bounds.lo < bounds.hi)) throw DomainError("range of interest requires lo < hi");
  NormalizedVideo out{video.width(), video.height(), video.frame_rate, {}};
  out.frames.reserve(video.frame_count());
  for (const auto& f : video.frames) out.frames.push_back(normalize_frame(f, video.calibration, bounds));
  return out;
}

std::vector<double> maxmin_normalize_frame(const ThermalFrame& frame, const CalibrationMap& cal) {
  std::vector<double> out(frame.pixel_count());
  kernels::parallel::maxmin_normalize(frame.data, cal, out);
  return out;
}

NormalizedVideo maxmin_normalize_video(const ThermalVideo& video) {
  NormalizedVideo out{video.width(), video.height(), video.frame_rate, {}};
  out.frames.reserve(video.frame_count());
  for (const auto& f : video.frames) out.frames.push_back(maxmin_normalize_frame(f, video.calibration));
  return out;
}

GmmNormalization fit_gmm_normalization(const ThermalVideo& video, const RoomProfile& profile,
                                       const EmConfig& config, std::uint64_t seed,
                                       double interval_s) {
  video.validate();
  const auto v = sample_temperatures(video, interval_s);
  GmmNormalization fit;
  fit.model = fit_gmm(v, 3, config, seed);
  fit.stats = compute_sample_stats(v);
  fit.selection = select_skin_component(fit.model, fit.stats);
  fit.bounds = roi_bounds(fit.selection.mu_hat, profile);
  return fit;
}

NormalizationResult normalize_pipeline(const ThermalVideo& video, const RoomProfile& profile,
                                       const EmConfig& config, std::uint64_t seed) {
  NormalizationResult r;
  r.fit = fit_gmm_normalization(video, profile, config, seed);
  r.normalized = normalize_video(video, r.fit.bounds);
  return r;
}

RoomProfile calibrate_profile(std::span<const CalibrationSample> corpus, double step) {
  if (corpus.empty()) throw DomainError("calibration corpus is empty");
  if (!(step > 0.0)) throw DomainError("rounding step must be positive");
  std::vector<double> below;
  std::vector<double> above;
  for (const auto& s : corpus) {
    below.push_back(s.mu_hat - s.stats.mean);
    above.push_back(s.stats.max - s.mu_hat);
  }
  const auto round_to_step = [step](double x) { return std::floor(x / step + 0.5) * step; };
  RoomProfile profile{-round_to_step(median(below)), round_to_step(median(above))};
  if (profile.lower_offset == 0.0) profile.lower_offset = 0.0;  // drop the sign of -0
  profile.validate();
  return profile;
}

nlohmann::json gmm_diagnostics_json(const GmmModel& model, const SkinSelection& selection) {
  nlohmann::json j;
  j["weights"] = nlohmann::json::array();
  j["means"] = nlohmann::json::array();
  j["variances"] = nlohmann::json::array();
  for (const auto& c : model.components) {
    j["weights"].push_back(c.weight);
    j["means"].push_back(c.mean);
    j["variances"].push_back(c.variance);
  }
  j["mu_hat"] = selection.mu_hat;
  j["fallback"] = selection.fallback_used;
  return j;
}

}  // namespace thermotob
