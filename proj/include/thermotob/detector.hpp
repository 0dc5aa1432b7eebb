#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "thermotob/features.hpp"
#include "thermotob/gmm.hpp"
#include "thermotob/thermal_io.hpp"

namespace thermotob {

enum class FrameClass : std::uint8_t { NoNewborn = 0, VisibleNewborn = 1 };

struct Sample {
  FeatureVector features;
  std::uint8_t label = 0;  // 1 = VNB
  std::string video_id;
  std::size_t frame = 0;
};

struct Dataset {
  std::vector<Sample> samples;
  std::array<std::size_t, 2> counts{};  // indexed by label

  void add(Sample s);
  void append(const Dataset& other);
  std::size_t size() const noexcept { return samples.size(); }
};

struct FrameSelection {
  std::size_t frame = 0;
  std::uint8_t label = 0;
};

// Labelling rules: every VNB frame is kept; NNB frames before the ToB are
// kept at one frame per floor(fps / nnb_hz) frames, restarting at the first
// frame of every maximal NNB run; NNB frames at or after the ToB are dropped.
std::vector<FrameSelection> select_training_frames(const AnnotationTrack& track,
                                                   double nnb_downsample_hz = 1.0);

Dataset build_dataset(std::span<const NormalizedVideo> videos, std::span<const AnnotationTrack> tracks,
                      std::span<const std::string> video_ids, double nnb_downsample_hz = 1.0,
                      const FeatureConfig& features = {});

// Inverse class frequency S / (C * s_c). Throws naming the first empty class.
std::vector<double> class_weights(std::span<const std::size_t> counts);

struct ClassWeights {
  double negative = 1.0;  // w0
  double positive = 1.0;  // w1
};

inline constexpr double kBceEpsilon = 1e-7;

// -(w1 y log(p) + w0 (1 - y) log(1 - p)) with p clamped to [eps, 1 - eps].
double weighted_bce(double y, double y_hat, const ClassWeights& w);

struct TrainConfig {
  double learning_rate = 0.05;
  int epochs = 40;
  std::size_t batch_size = 16;
  double momentum = 0.9;
  std::uint64_t seed = 0;
};

struct TrainingInfo {
  int epochs = 0;
  double learning_rate = 0.0;
  std::size_t batch_size = 0;
  double initial_loss = 0.0;
  double final_loss = 0.0;
  int best_epoch = 0;
};

// Logistic scorer over standardized features.
struct DetectorModel {
  std::array<double, kFeatureCount> weights{};
  double bias = 0.0;
  std::array<double, kFeatureCount> feature_mean{};
  std::array<double, kFeatureCount> feature_scale = {1, 1, 1, 1, 1, 1};
  FeatureConfig feature_config;
  TrainingInfo training;

  double logit(const FeatureVector& f) const;
};

struct LossGradient {
  double loss = 0.0;
  std::array<double, kFeatureCount> d_weights{};
  double d_bias = 0.0;
};

// Mean weighted BCE over `samples` and its gradient with respect to the
// weights and bias.
LossGradient loss_and_gradient(const DetectorModel& model, std::span<const Sample> samples,
                               const ClassWeights& w);

ClassWeights dataset_class_weights(const Dataset& data);

DetectorModel train_detector(const Dataset& data, const TrainConfig& config = {},
                             const FeatureConfig& features = {});

struct ScoreSeries {
  std::string video_id;
  double frame_rate = kDefaultFrameRate;
  std::vector<double> scores;

  std::size_t size() const noexcept { return scores.size(); }
};

double score_features(const DetectorModel& model, const FeatureVector& f);
double score_frame(const DetectorModel& model, std::span<const double> frame, std::uint32_t width,
                   std::uint32_t height);
ScoreSeries score_video(const DetectorModel& model, const NormalizedVideo& video,
                        const std::string& video_id = {});

// CSV with header "frame,score"; indices must run 0..N-1 without gaps.
ScoreSeries import_scores(const std::string& csv_text, double frame_rate = kDefaultFrameRate,
                          const std::string& video_id = {});
std::string export_scores(const ScoreSeries& series);

struct ConfusionCounts {
  std::size_t tp = 0;
  std::size_t tn = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
};

struct DetectionMetrics {
  ConfusionCounts counts;
  double precision = 0.0;
  double recall = 0.0;
  double mcc = 0.0;
  bool precision_degenerate = false;
  bool recall_degenerate = false;
  bool mcc_degenerate = false;
};

DetectionMetrics metrics_from_counts(const ConfusionCounts& c);
// Positive (VNB) prediction iff score >= threshold.
DetectionMetrics evaluate_detector(std::span<const double> scores,
                                   std::span<const std::uint8_t> labels, double threshold = 0.5);

// Deterministic shuffled split of video indices (e.g. 85 / 15).
struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
};
SplitIndices train_validation_split(std::size_t count, double train_fraction = 0.85,
                                    std::uint64_t seed = 0);

nlohmann::json model_to_json(const DetectorModel& model);
DetectorModel model_from_json(const nlohmann::json& j);
void save_model(const DetectorModel& model, const std::string& path);
DetectorModel load_model(const std::string& path);

}  // namespace thermotob
