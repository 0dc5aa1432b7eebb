#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace thermotob {

inline constexpr int kFeatureVersion = 1;
inline constexpr std::size_t kFeatureCount = 6;

// Handcrafted descriptors of one normalized frame.
struct FeatureVector {
  std::array<double, kFeatureCount> values{};

  double hot_fraction() const { return values[0]; }
  double top_mean() const { return values[1]; }
  double blob_area() const { return values[2]; }
  double blob_compactness() const { return values[3]; }
  double mean() const { return values[4]; }
  double stddev() const { return values[5]; }

  bool finite() const;
  bool operator==(const FeatureVector&) const = default;
};

std::string_view feature_name(std::size_t index);

// A pixel is "hot" when it exceeds the frame's reference quantile by
// `hot_margin` normalized units. The reference quantile sits on adult skin in
// a typical scene, so the mask picks out bodies warmer than the adults.
struct FeatureConfig {
  double reference_quantile = 0.90;
  double hot_margin = 0.10;
  double top_fraction = 0.01;
};

struct BlobSummary {
  std::size_t area = 0;
  std::size_t perimeter = 0;  // pixel edges bordering non-blob pixels or the frame edge
};

// Largest 4-connected component of `mask` (row-major). Ties keep the first
// component in scan order.
BlobSummary largest_blob(std::span<const std::uint8_t> mask, std::uint32_t width,
                         std::uint32_t height);

FeatureVector frame_features(std::span<const double> frame, std::uint32_t width,
                             std::uint32_t height, const FeatureConfig& config = {});

namespace kernels {
namespace serial {
std::vector<FeatureVector> frame_features(const std::vector<std::vector<double>>& frames,
                                          std::uint32_t width, std::uint32_t height,
                                          const FeatureConfig& config = {});
}
namespace parallel {
std::vector<FeatureVector> frame_features(const std::vector<std::vector<double>>& frames,
                                          std::uint32_t width, std::uint32_t height,
                                          const FeatureConfig& config = {});
}
}  // namespace kernels

}  // namespace thermotob
