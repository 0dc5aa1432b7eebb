#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "thermotob/detector.hpp"
#include "thermotob/features.hpp"
#include "thermotob/gmm.hpp"
#include "thermotob/thermal_io.hpp"
#include "thermotob/tob.hpp"

namespace thermotob {

enum class NormalizationKind : std::uint8_t { Gmm, MaxMin };

std::string to_string(NormalizationKind kind);
NormalizationKind normalization_kind_from_string(const std::string& name);

struct PipelineConfig {
  NormalizationKind norm = NormalizationKind::Gmm;
  // Overrides the per-room default when set.
  std::optional<RoomProfile> room_profile;
  EmConfig em;
  std::uint64_t seed = 0;
  std::size_t filter_k = kDefaultFilterLength;
  double gamma = kDefaultGamma;
  FeatureConfig features;
};

// Features of every frame, computed frame by frame so the normalized video is
// never held in memory.
struct VideoFeatures {
  std::string id;
  double frame_rate = kDefaultFrameRate;
  std::vector<FeatureVector> frames;
  std::optional<GmmNormalization> gmm;  // set for the GMM variant
};

VideoFeatures extract_features(const ThermalVideo& video, const std::string& id,
                               const PipelineConfig& config);

struct CorpusItem {
  std::string id;
  ThermalVideo video;
  AnnotationTrack track;
};

// Lazily materialised corpus; `load(i)` must be safe to call concurrently.
struct Corpus {
  std::size_t size = 0;
  std::function<CorpusItem(std::size_t)> load;
  std::vector<std::string> ids;  // optional; names failures that happen before loading completes
};

Corpus in_memory_corpus(std::vector<CorpusItem> items);

Dataset dataset_from_features(std::span<const VideoFeatures> videos,
                              std::span<const AnnotationTrack> tracks, double nnb_downsample_hz = 1.0);

struct TrainingResult {
  DetectorModel model;
  Dataset dataset;
};

TrainingResult train_on_corpus(const Corpus& corpus, const PipelineConfig& config,
                               const TrainConfig& train = {}, double nnb_downsample_hz = 1.0,
                               int workers = 0);

struct VideoRun {
  std::string id;
  double frame_rate = kDefaultFrameRate;
  std::vector<double> scores;
  std::vector<double> smoothed;
  TobEstimate estimate;
  std::optional<std::int64_t> t_ann;
  std::optional<double> err;  // set when both the estimate and the annotation exist
  std::vector<SweepLabel> sweep;  // empty when unannotated
  std::optional<GmmNormalization> gmm;
};

// Normalize, score, smooth and estimate for one video.
VideoRun run_video(const ThermalVideo& video, const std::string& id, const AnnotationTrack* track,
                   const DetectorModel& model, const PipelineConfig& config);
VideoRun run_scores(const ScoreSeries& scores, const AnnotationTrack* track, const PipelineConfig& config);

struct VideoOutcome {
  std::string id;
  std::optional<std::int64_t> t_hat;
  std::optional<std::int64_t> t_ann;
  std::optional<double> err;
  std::string failure;  // non-empty when the video could not be processed
};

struct EvaluationReport {
  std::string variant;
  double gamma = kDefaultGamma;
  std::size_t filter_k = kDefaultFilterLength;
  std::vector<VideoOutcome> per_video;  // sorted by id
  std::optional<ErrorStats> stats;       // absent when no video produced an error value
  double found_fraction = 0.0;
  std::size_t failures = 0;
};

EvaluationReport summarise(const std::string& variant, const PipelineConfig& config,
                           std::vector<VideoOutcome> outcomes);

struct CorpusRun {
  EvaluationReport report;
  std::vector<VideoRun> runs;  // same order as report.per_video; empty entries for failures
};

// Runs every video, continuing past per-video failures. `workers` <= 0 uses
// the OpenMP default.
CorpusRun run_corpus(const Corpus& corpus, const DetectorModel& model, const PipelineConfig& config,
                     const std::string& variant, int workers = 0);

struct NormalizationVariant {
  std::string name;
  PipelineConfig config;
  DetectorModel model;
};

// One report per variant, each on identical inputs.
std::vector<EvaluationReport> compare_normalizations(const Corpus& corpus,
                                                     std::span<const NormalizationVariant> variants,
                                                     int workers = 0);

// FPR over pre-birth NNB and VNB frames of every annotated run.
std::vector<FprPoint> sweep_runs(std::span<const VideoRun> runs, std::span<const double> thresholds);

nlohmann::json report_to_json(const EvaluationReport& report);
std::string report_to_csv(const EvaluationReport& report);
// "frame,t_s,score,smoothed,label" with label empty when unannotated.
std::string timeline_csv(const VideoRun& run, const AnnotationTrack* track);
std::string sweep_csv(std::span<const FprPoint> points);
std::string comparison_csv(std::span<const EvaluationReport> reports);

}  // namespace thermotob
