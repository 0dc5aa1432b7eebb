#include "thermotob/features.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "thermotob/error.hpp"

namespace thermotob {

bool FeatureVector::finite() const {
  return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

std::string_view feature_name(std::size_t index) {
  static constexpr std::array<std::string_view, kFeatureCount> names = {
      "hot_fraction", "top_mean", "blob_area", "blob_compactness", "mean", "stddev"};
  return names.at(index);
}

BlobSummary largest_blob(std::span<const std::uint8_t> mask, std::uint32_t width,
                         std::uint32_t height) {
  const std::size_t n = std::size_t{width} * height;
  if (mask.size() != n) throw DomainError("mask size does not match frame resolution");
  std::vector<std::uint8_t> seen(n, 0);
  std::vector<std::size_t> stack;
  BlobSummary best;
  for (std::size_t seed = 0; seed < n; ++seed) {
    if (!mask[seed] || seen[seed]) continue;
    BlobSummary blob;
    stack.push_back(seed);
    seen[seed] = 1;
    while (!stack.empty()) {
      const std::size_t p = stack.back();
      stack.pop_back();
      ++blob.area;
      const std::size_t x = p % width;
      const std::size_t y = p / width;
      const auto visit = [&](bool inside, std::size_t q) {
        if (!inside || !mask[q]) {
          ++blob.perimeter;
          return;
        }
        if (!seen[q]) {
          seen[q] = 1;
          stack.push_back(q);
        }
      };
      visit(x > 0, x > 0 ? p - 1 : p);
      visit(x + 1 < width, x + 1 < width ? p + 1 : p);
      visit(y > 0, y > 0 ? p - width : p);
      visit(y + 1 < height, y + 1 < height ? p + width : p);
    }
    if (blob.area > best.area) best = blob;
  }
  return best;
}

FeatureVector frame_features(std::span<const double> frame, std::uint32_t width,
                             std::uint32_t height, const FeatureConfig& config) {
  const std::size_t n = std::size_t{width} * height;
  if (frame.size() != n || n == 0) throw DomainError("frame size does not match resolution");

  std::vector<double> sorted(frame.begin(), frame.end());
  std::sort(sorted.begin(), sorted.end());
  const double pos = config.reference_quantile * static_cast<double>(n - 1);
  const auto lo = static_cast<std::size_t>(pos);
  const auto hi = std::min(lo + 1, n - 1);
  const double reference = sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
  const double hot_level = reference + config.hot_margin;

  std::vector<std::uint8_t> mask(n);
  std::size_t hot = 0;
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mask[i] = frame[i] > hot_level ? 1 : 0;
    hot += mask[i];
    sum += frame[i];
  }
  const double mean = sum / static_cast<double>(n);
  double ss = 0.0;
  for (const double v : frame) ss += (v - mean) * (v - mean);

  const auto top_count = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::ceil(config.top_fraction * static_cast<double>(n))));
  double top_sum = 0.0;
  for (std::size_t i = n - top_count; i < n; ++i) top_sum += sorted[i];

  const auto blob = largest_blob(mask, width, height);
  const double compactness =
      blob.area == 0 ? 0.0
                     : 4.0 * std::numbers::pi * static_cast<double>(blob.area) /
                           (static_cast<double>(blob.perimeter) * static_cast<double>(blob.perimeter));

  FeatureVector f;
  f.values = {static_cast<double>(hot) / static_cast<double>(n),
              top_sum / static_cast<double>(top_count),
              static_cast<double>(blob.area) / static_cast<double>(n),
              compactness,
              mean,
              std::sqrt(ss / static_cast<double>(n))};
  return f;
}

namespace kernels {

namespace serial {
std::vector<FeatureVector> frame_features(const std::vector<std::vector<double>>& frames,
                                          std::uint32_t width, std::uint32_t height,
                                          const FeatureConfig& config) {
  std::vector<FeatureVector> out;
  out.reserve(frames.size());
  for (const auto& f : frames) out.push_back(thermotob::frame_features(f, width, height, config));
  return out;
}
}  // namespace serial

namespace parallel {
std::vector<FeatureVector> frame_features(const std::vector<std::vector<double>>& frames,
                                          std::uint32_t width, std::uint32_t height,
                                          const FeatureConfig& config) {
  const std::size_t pixels = std::size_t{width} * height;
  for (const auto& f : frames) {
    if (f.size() != pixels || pixels == 0) throw DomainError("frame size does not match resolution");
  }
  std::vector<FeatureVector> out(frames.size());
  const auto n = static_cast<std::int64_t>(frames.size());
#pragma omp parallel for schedule(dynamic, 16)
  for (std::int64_t i = 0; i < n; ++i) {
    const auto idx = static_cast<std::size_t>(i);
    out[idx] = thermotob::frame_features(frames[idx], width, height, config);
  }
  return out;
}
}  // namespace parallel

}  // namespace kernels

}  // namespace thermotob
