#include "thermotob/pipeline.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <sstream>

#include <memory>

#include "thermotob/error.hpp"
#include "thermotob/kernels.hpp"

namespace thermotob {

namespace {

int worker_count(int workers) { return workers > 0 ? workers : kernels::max_threads(); }

// Shortest text that reads back to the same double.
std::string fmt(double v) {
  std::array<char, 32> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return {buf.data(), res.ptr};
}

RoomProfile profile_for(const ThermalVideo& video, const PipelineConfig& config) {
  return config.room_profile.value_or(default_room_profile(video.room_type));
}

}  // namespace

std::string to_string(NormalizationKind kind) { return kind == NormalizationKind::Gmm ? "gmm" : "maxmin"; }

NormalizationKind normalization_kind_from_string(const std::string& name) {
  if (name == "gmm") return NormalizationKind::Gmm;
  if (name == "maxmin") return NormalizationKind::MaxMin;
  throw ValidationError("unknown normalization '" + name + "' (expected gmm or maxmin)");
}

VideoFeatures extract_features(const ThermalVideo& video, const std::string& id, const PipelineConfig& config) {
  video.validate();
  VideoFeatures out;
  out.id = id;
  out.frame_rate = video.frame_rate;
  RoiBounds bounds;
  if (config.norm == NormalizationKind::Gmm) {
    out.gmm = fit_gmm_normalization(video, profile_for(video, config), config.em, config.seed);
    bounds = out.gmm->bounds;
  }
  const std::uint32_t w = video.width();
  const std::uint32_t h = video.height();
  out.frames.resize(video.frame_count());
  const auto count = static_cast<std::int64_t>(video.frame_count());
  const bool gmm = config.norm == NormalizationKind::Gmm;
#pragma omp parallel
  {
    std::vector<double> buf(std::size_t{w} * h);
#pragma omp for schedule(static)
    for (std::int64_t i = 0; i < count; ++i) {
      const auto& frame = video.frames[static_cast<std::size_t>(i)];
      if (gmm) {
        kernels::serial::normalize(frame.data, video.calibration, bounds.lo, bounds.hi, buf);
      } else {
        kernels::serial::maxmin_normalize(frame.data, video.calibration, buf);
      }
      out.frames[static_cast<std::size_t>(i)] = frame_features(buf, w, h, config.features);
    }
  }
  return out;
}

Corpus in_memory_corpus(std::vector<CorpusItem> items) {
  auto shared = std::make_shared<const std::vector<CorpusItem>>(std::move(items));
  std::vector<std::string> ids;
  for (const auto& item : *shared) ids.push_back(item.id);
  return {shared->size(), [shared](std::size_t i) { return shared->at(i); }, std::move(ids)};
}

Dataset dataset_from_features(std::span<const VideoFeatures> videos, std::span<const AnnotationTrack> tracks,
                              double nnb_downsample_hz) {
  if (videos.size() != tracks.size()) throw ValidationError("videos and annotation tracks differ in count");
  Dataset data;
  for (std::size_t v = 0; v < videos.size(); ++v) {
    const auto& feats = videos[v];
    const auto& track = tracks[v];
    if (track.n_frames != feats.frames.size()) {
      throw ValidationError("annotation for '" + feats.id + "' covers " + std::to_string(track.n_frames) +
                            " frames, video has " + std::to_string(feats.frames.size()));
    }
    for (const auto& sel : select_training_frames(track, nnb_downsample_hz)) {
      data.add({feats.frames[sel.frame], sel.label, feats.id, sel.frame});
    }
  }
  return data;
}

TrainingResult train_on_corpus(const Corpus& corpus, const PipelineConfig& config, const TrainConfig& train,
                               double nnb_downsample_hz, int workers) {
  if (corpus.size == 0) throw DomainError("training corpus is empty");
  std::vector<VideoFeatures> feats(corpus.size);
  std::vector<AnnotationTrack> tracks(corpus.size);
  std::vector<std::string> errors(corpus.size);
  const auto n = static_cast<std::int64_t>(corpus.size);
#pragma omp parallel for num_threads(worker_count(workers)) schedule(dynamic, 1)
  for (std::int64_t i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    try {
      auto item = corpus.load(k);
      feats[k] = extract_features(item.video, item.id, config);
      tracks[k] = std::move(item.track);
    } catch (const std::exception& e) {
      errors[k] = e.what();
    }
  }
  for (std::size_t k = 0; k < errors.size(); ++k) {
    if (!errors[k].empty()) throw Error("training video " + std::to_string(k) + ": " + errors[k]);
  }
  TrainingResult r;
  r.dataset = dataset_from_features(feats, tracks, nnb_downsample_hz);
  r.model = train_detector(r.dataset, train, config.features);
  return r;
}

VideoRun run_scores(const ScoreSeries& scores, const AnnotationTrack* track, const PipelineConfig& config) {
  VideoRun run;
  run.id = scores.video_id;
  run.frame_rate = scores.frame_rate;
  run.scores = scores.scores;
  run.smoothed = fir_smooth(std::span<const double>(run.scores), config.filter_k);
  run.estimate = estimate_tob(run.smoothed, config.gamma, run.frame_rate);
  if (track != nullptr) {
    if (track->n_frames != run.scores.size()) {
      throw ValidationError("annotation for '" + run.id + "' covers " + std::to_string(track->n_frames) +
                            " frames, score series has " + std::to_string(run.scores.size()));
    }
    run.sweep = sweep_labels(*track);
    if (const auto t = track->tob_seconds()) {
      run.t_ann = *t;
      if (run.estimate.found) run.err = tob_error(run.estimate, static_cast<double>(*t));
    }
  }
  return run;
}

VideoRun run_video(const ThermalVideo& video, const std::string& id, const AnnotationTrack* track,
                   const DetectorModel& model, const PipelineConfig& config) {
  PipelineConfig cfg = config;
  cfg.features = model.feature_config;
  auto feats = extract_features(video, id, cfg);
  ScoreSeries series{id, video.frame_rate, {}};
  series.scores.reserve(feats.frames.size());
  for (const auto& f : feats.frames) series.scores.push_back(score_features(model, f));
  auto run = run_scores(series, track, cfg);
  run.gmm = std::move(feats.gmm);
  return run;
}

EvaluationReport summarise(const std::string& variant, const PipelineConfig& config,
                           std::vector<VideoOutcome> outcomes) {
  std::sort(outcomes.begin(), outcomes.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  EvaluationReport r;
  r.variant = variant;
  r.gamma = config.gamma;
  r.filter_k = config.filter_k;
  std::vector<double> errors;
  std::size_t found = 0;
  for (const auto& o : outcomes) {
    if (!o.failure.empty()) {
      ++r.failures;
      continue;
    }
    if (o.t_hat) ++found;
    if (o.err) errors.push_back(*o.err);
  }
  const std::size_t total = outcomes.size();
  r.found_fraction = total == 0 ? 0.0 : static_cast<double>(found) / static_cast<double>(total);
  if (!errors.empty()) r.stats = error_stats(errors, found, total);
  r.per_video = std::move(outcomes);
  return r;
}

CorpusRun run_corpus(const Corpus& corpus, const DetectorModel& model, const PipelineConfig& config,
                     const std::string& variant, int workers) {
  if (corpus.size == 0) throw DomainError("corpus is empty");
  std::vector<VideoOutcome> outcomes(corpus.size);
  std::vector<VideoRun> runs(corpus.size);
  const auto n = static_cast<std::int64_t>(corpus.size);
#pragma omp parallel for num_threads(worker_count(workers)) schedule(dynamic, 1)
  for (std::int64_t i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    VideoOutcome& o = outcomes[k];
    o.id = k < corpus.ids.size() ? corpus.ids[k] : "#" + std::to_string(k);
    try {
      auto item = corpus.load(k);
      o.id = item.id;
      runs[k] = run_video(item.video, item.id, &item.track, model, config);
      if (runs[k].estimate.found) o.t_hat = runs[k].estimate.t_birth_s;
      o.t_ann = runs[k].t_ann;
      o.err = runs[k].err;
    } catch (const std::exception& e) {
      o.failure = e.what();
      runs[k] = VideoRun{};
      runs[k].id = o.id;
    }
  }
  std::vector<std::size_t> order(corpus.size);
  for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
  std::stable_sort(order.begin(), order.end(),
                   [&outcomes](std::size_t a, std::size_t b) { return outcomes[a].id < outcomes[b].id; });
  CorpusRun out;
  out.runs.reserve(runs.size());
  for (const auto k : order) out.runs.push_back(std::move(runs[k]));
  out.report = summarise(variant, config, std::move(outcomes));
  return out;
}

std::vector<EvaluationReport> compare_normalizations(const Corpus& corpus,
                                                     std::span<const NormalizationVariant> variants,
                                                     int workers) {
  if (variants.empty()) throw DomainError("compare_normalizations needs at least one variant");
  std::vector<EvaluationReport> out;
  for (const auto& v : variants) out.push_back(run_corpus(corpus, v.model, v.config, v.name, workers).report);
  return out;
}

std::vector<FprPoint> sweep_runs(std::span<const VideoRun> runs, std::span<const double> thresholds) {
  std::vector<LabeledSeries> series;
  for (const auto& r : runs) {
    if (!r.sweep.empty()) series.push_back({r.smoothed, r.sweep});
  }
  return fpr_sweep(series, thresholds);
}

nlohmann::json report_to_json(const EvaluationReport& r) {
  nlohmann::json j;
  j["variant"] = r.variant;
  j["gamma"] = r.gamma;
  j["filter_k"] = r.filter_k;
  j["per_video"] = nlohmann::json::array();
  nlohmann::json failed = nlohmann::json::array();
  const auto opt = [](const auto& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
  for (const auto& o : r.per_video) {
    if (!o.failure.empty()) {
      failed.push_back({{"id", o.id}, {"error", o.failure}});
      continue;
    }
    j["per_video"].push_back({{"id", o.id}, {"t_hat", opt(o.t_hat)}, {"t_ann", opt(o.t_ann)}, {"err", opt(o.err)}});
  }
  j["q1"] = r.stats ? nlohmann::json(r.stats->q1) : nlohmann::json(nullptr);
  j["q2"] = r.stats ? nlohmann::json(r.stats->q2) : nlohmann::json(nullptr);
  j["q3"] = r.stats ? nlohmann::json(r.stats->q3) : nlohmann::json(nullptr);
  j["mean"] = r.stats ? nlohmann::json(r.stats->mean) : nlohmann::json(nullptr);
  j["found_fraction"] = r.found_fraction;
  j["failed"] = failed;
  return j;
}

std::string report_to_csv(const EvaluationReport& r) {
  std::ostringstream os;
  os << "id,t_hat,t_ann,err,abs_err,status\n";
  for (const auto& o : r.per_video) {
    os << o.id << ',';
    if (o.t_hat) os << *o.t_hat;
    os << ',';
    if (o.t_ann) os << *o.t_ann;
    os << ',';
    if (o.err) os << fmt(*o.err);
    os << ',';
    if (o.err) os << fmt(std::abs(*o.err));
    os << ',' << (!o.failure.empty() ? "failed" : o.t_hat ? "found" : "not_found") << '\n';
  }
  return os.str();
}

std::string timeline_csv(const VideoRun& run, const AnnotationTrack* track) {
  std::vector<std::uint8_t> labels;
  if (track != nullptr) labels = track->vnb_labels();
  std::ostringstream os;
  os << "frame,t_s,score,smoothed,label\n";
  for (std::size_t n = 0; n < run.scores.size(); ++n) {
    os << n << ',' << fmt(static_cast<double>(n) / run.frame_rate) << ',' << fmt(run.scores[n]) << ','
       << fmt(run.smoothed[n]) << ',';
    if (n < labels.size()) os << (labels[n] ? "VNB" : "NNB");
    os << '\n';
  }
  return os.str();
}

std::string sweep_csv(std::span<const FprPoint> points) {
  std::ostringstream os;
  os << "gamma,fpr\n";
  for (const auto& p : points) os << fmt(p.gamma) << ',' << fmt(p.fpr) << '\n';
  return os.str();
}

std::string comparison_csv(std::span<const EvaluationReport> reports) {
  std::ostringstream os;
  os << "variant,q1,q2,q3,mean,found_fraction,failures\n";
  for (const auto& r : reports) {
    os << r.variant << ',';
    if (r.stats) os << fmt(r.stats->q1) << ',' << fmt(r.stats->q2) << ',' << fmt(r.stats->q3) << ',' << fmt(r.stats->mean);
    else os << ",,,";
    os << ',' << fmt(r.found_fraction) << ',' << r.failures << '\n';
  }
  return os.str();
}

}  // namespace thermotob
