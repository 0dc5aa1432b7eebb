#include "thermotob/tob.hpp"

#include <algorithm>
#include <cmath>

#include "thermotob/error.hpp"
#include "thermotob/kernels.hpp"
#include "thermotob/stats.hpp"

namespace thermotob {

std::vector<double> FirFilter::coefficients() const {
  if (length < 1) throw DomainError("filter length must be >= 1");
  return std::vector<double>(length, 1.0 / static_cast<double>(length));
}

std::vector<double> fir_smooth(std::span<const double> series, std::size_t k) {
  if (k < 1) throw DomainError("filter length must be >= 1");
  std::vector<double> out(series.size());
  kernels::parallel::fir_moving_average(series, k, out);
  return out;
}

ScoreSeries fir_smooth(const ScoreSeries& series, std::size_t k) {
  return {series.video_id, series.frame_rate, fir_smooth(std::span<const double>(series.scores), k)};
}

TobEstimate estimate_tob(std::span<const double> smoothed, double gamma, double frame_rate) {
  if (!(gamma > 0.0 && gamma <= 1.0)) throw DomainError("gamma must lie in (0, 1]");
  if (!(frame_rate > 0.0)) throw DomainError("frame rate must be positive");
  TobEstimate est;
  est.gamma = gamma;
  const auto it = std::find_if(smoothed.begin(), smoothed.end(), [gamma](double s) { return s >= gamma; });
  if (it == smoothed.end()) return est;
  est.found = true;
  est.n_birth = static_cast<std::size_t>(it - smoothed.begin());
  est.t_birth_s = frame_to_seconds(est.n_birth, frame_rate);
  return est;
}

TobEstimate estimate_tob(const ScoreSeries& smoothed, double gamma) {
  return estimate_tob(smoothed.scores, gamma, smoothed.frame_rate);
}

double tob_error(const TobEstimate& estimate, double annotated_s) {
  if (!estimate.found) throw DomainError("no ToB estimate to compare against the annotation");
  return static_cast<double>(estimate.t_birth_s) - annotated_s;
}

ErrorStats error_stats(std::span<const double> errors, std::size_t found_count, std::size_t total) {
  if (errors.empty()) throw DomainError("error statistics need at least one error");
  if (total == 0 || found_count > total) throw DomainError("found count must lie in [0, total]");
  ErrorStats s;
  s.errors.assign(errors.begin(), errors.end());
  std::vector<double> abs_err;
  abs_err.reserve(errors.size());
  for (const double e : errors) abs_err.push_back(std::abs(e));
  std::sort(abs_err.begin(), abs_err.end());
  s.q1 = quantile_sorted(abs_err, 0.25);
  s.q2 = quantile_sorted(abs_err, 0.5);
  s.q3 = quantile_sorted(abs_err, 0.75);
  double sum = 0.0;
  for (const double e : abs_err) sum += e;
  s.mean = sum / static_cast<double>(abs_err.size());
  s.found_fraction = static_cast<double>(found_count) / static_cast<double>(total);
  return s;
}

std::vector<SweepLabel> sweep_labels(const AnnotationTrack& track) {
  const auto vnb = track.vnb_labels();
  const std::size_t birth = track.tob_frame.value_or(track.n_frames);
  std::vector<SweepLabel> labels(track.n_frames, SweepLabel::Excluded);
  for (std::size_t n = 0; n < track.n_frames; ++n) {
    if (vnb[n]) labels[n] = SweepLabel::Positive;
    else if (n < birth) labels[n] = SweepLabel::Negative;
  }
  return labels;
}

std::vector<FprPoint> fpr_sweep(std::span<const LabeledSeries> videos, std::span<const double> thresholds) {
  if (!std::is_sorted(thresholds.begin(), thresholds.end())) {
    throw DomainError("thresholds must be sorted ascending");
  }
  std::vector<double> negatives;
  for (const auto& v : videos) {
    if (v.smoothed.size() != v.labels.size()) throw ValidationError("series and labels differ in length");
    for (std::size_t n = 0; n < v.smoothed.size(); ++n) {
      if (v.labels[n] == SweepLabel::Negative) negatives.push_back(v.smoothed[n]);
    }
  }
  std::sort(negatives.begin(), negatives.end());
  std::vector<FprPoint> out;
  out.reserve(thresholds.size());
  for (const double g : thresholds) {
    FprPoint p{g, 0.0, negatives.empty()};
    if (!negatives.empty()) {
      const auto below = std::lower_bound(negatives.begin(), negatives.end(), g) - negatives.begin();
      const auto fp = negatives.size() - static_cast<std::size_t>(below);
      p.fpr = static_cast<double>(fp) / static_cast<double>(negatives.size());
    }
    out.push_back(p);
  }
  return out;
}

std::vector<double> default_threshold_grid() {
  std::vector<double> grid;
  for (int i = 10; i <= 99; ++i) grid.push_back(static_cast<double>(i) / 100.0);
  grid.push_back(0.9);
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

}  // namespace thermotob
