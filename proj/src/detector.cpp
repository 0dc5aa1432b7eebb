#include "thermotob/detector.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <random>
#include <sstream>

#include "thermotob/error.hpp"

namespace thermotob {

namespace {

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace

void Dataset::add(Sample s) {
  if (s.label > 1) throw ValidationError("sample label must be 0 or 1");
  ++counts[s.label];
  samples.push_back(std::move(s));
}

void Dataset::append(const Dataset& other) {
  for (const auto& s : other.samples) add(s);
}

std::vector<FrameSelection> select_training_frames(const AnnotationTrack& track,
                                                   double nnb_downsample_hz) {
  if (!(nnb_downsample_hz > 0.0)) throw DomainError("NNB downsampling rate must be positive");
  const auto stride = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::floor(track.fps / nnb_downsample_hz)));
  const auto labels = track.vnb_labels();
  const std::size_t nnb_end = track.tob_frame.value_or(track.n_frames);

  std::vector<FrameSelection> out;
  std::size_t run_pos = 0;  // position inside the current NNB run
  for (std::size_t n = 0; n < track.n_frames; ++n) {
    if (labels[n]) {
      out.push_back({n, 1});
      run_pos = 0;
      continue;
    }
    if (n >= nnb_end) continue;
    if (run_pos % stride == 0) out.push_back({n, 0});
    ++run_pos;
  }
  return out;
}

Dataset build_dataset(std::span<const NormalizedVideo> videos, std::span<const AnnotationTrack> tracks,
                      std::span<const std::string> video_ids, double nnb_downsample_hz,
                      const FeatureConfig& features) {
  if (videos.size() != tracks.size()) throw ValidationError("one annotation track per video required");
  Dataset data;
  for (std::size_t v = 0; v < videos.size(); ++v) {
    const auto& video = videos[v];
    const auto& track = tracks[v];
    const std::string id = v < video_ids.size() ? video_ids[v] : std::to_string(v);
    if (track.n_frames != video.frame_count()) {
      throw ValidationError("video '" + id + "' has " + std::to_string(video.frame_count()) +
                            " frames but its track declares " + std::to_string(track.n_frames));
    }
    for (const auto& sel : select_training_frames(track, nnb_downsample_hz)) {
      data.add({frame_features(video.frames[sel.frame], video.width, video.height, features), sel.label,
                id, sel.frame});
    }
  }
  return data;
}

std::vector<double> class_weights(std::span<const std::size_t> counts) {
  if (counts.empty()) throw DomainError("class weights need at least one class");
  const double total = std::accumulate(counts.begin(), counts.end(), 0.0,
                                       [](double a, std::size_t c) { return a + static_cast<double>(c); });
  std::vector<double> w;
  w.reserve(counts.size());
  for (std::size_t c = 0; c < counts.size(); ++c) {
    if (counts[c] == 0) throw DomainError("class " + std::to_string(c) + " has no samples");
    w.push_back(total / (static_cast<double>(counts.size()) * static_cast<double>(counts[c])));
  }
  return w;
}

double weighted_bce(double y, double y_hat, const ClassWeights& w) {
  const double p = std::clamp(y_hat, kBceEpsilon, 1.0 - kBceEpsilon);
  return -(w.positive * y * std::log(p) + w.negative * (1.0 - y) * std::log(1.0 - p));
}

double DetectorModel::logit(const FeatureVector& f) const {
  double z = bias;
  for (std::size_t j = 0; j < kFeatureCount; ++j) {
    z += weights[j] * (f.values[j] - feature_mean[j]) / feature_scale[j];
  }
  return z;
}

LossGradient loss_and_gradient(const DetectorModel& model, std::span<const Sample> samples,
                               const ClassWeights& w) {
  LossGradient out;
  if (samples.empty()) return out;
  for (const auto& s : samples) {
    const double p = sigmoid(model.logit(s.features));
    const double y = s.label;
    out.loss += weighted_bce(y, p, w);
    // d/dz of the weighted loss for the logistic link
    const double dz = y * w.positive * (p - 1.0) + (1.0 - y) * w.negative * p;
    for (std::size_t j = 0; j < kFeatureCount; ++j) {
      out.d_weights[j] += dz * (s.features.values[j] - model.feature_mean[j]) / model.feature_scale[j];
    }
    out.d_bias += dz;
  }
  const double inv = 1.0 / static_cast<double>(samples.size());
  out.loss *= inv;
  for (auto& g : out.d_weights) g *= inv;
  out.d_bias *= inv;
  return out;
}

ClassWeights dataset_class_weights(const Dataset& data) {
  const auto w = class_weights(data.counts);
  return {w[0], w[1]};
}

DetectorModel train_detector(const Dataset& data, const TrainConfig& config,
                             const FeatureConfig& features) {
  if (data.counts[0] == 0 || data.counts[1] == 0) {
    throw DomainError("training needs both classes (NNB " + std::to_string(data.counts[0]) +
                      ", VNB " + std::to_string(data.counts[1]) + ")");
  }
  if (config.batch_size == 0) throw DomainError("batch size must be >= 1");
  const auto weights = dataset_class_weights(data);

  DetectorModel model;
  model.feature_config = features;
  const double n = static_cast<double>(data.size());
  for (std::size_t j = 0; j < kFeatureCount; ++j) {
    double mean = 0.0;
    for (const auto& s : data.samples) mean += s.features.values[j];
    mean /= n;
    double var = 0.0;
    for (const auto& s : data.samples) var += (s.features.values[j] - mean) * (s.features.values[j] - mean);
    const double sd = std::sqrt(var / n);
    model.feature_mean[j] = mean;
    model.feature_scale[j] = sd > 1e-12 ? sd : 1.0;
  }

  model.training.epochs = config.epochs;
  model.training.learning_rate = config.learning_rate;
  model.training.batch_size = config.batch_size;
  model.training.initial_loss = loss_and_gradient(model, data.samples, weights).loss;

  DetectorModel best = model;
  double best_loss = model.training.initial_loss;

  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(config.seed);
  std::array<double, kFeatureCount> vel_w{};
  double vel_b = 0.0;
  std::vector<Sample> batch;
  batch.reserve(config.batch_size);

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      batch.clear();
      const std::size_t stop = std::min(order.size(), start + config.batch_size);
      for (std::size_t i = start; i < stop; ++i) batch.push_back(data.samples[order[i]]);
      const auto g = loss_and_gradient(model, batch, weights);
      for (std::size_t j = 0; j < kFeatureCount; ++j) {
        vel_w[j] = config.momentum * vel_w[j] - config.learning_rate * g.d_weights[j];
        model.weights[j] += vel_w[j];
      }
      vel_b = config.momentum * vel_b - config.learning_rate * g.d_bias;
      model.bias += vel_b;
    }
    const double loss = loss_and_gradient(model, data.samples, weights).loss;
    if (loss < best_loss) {
      best_loss = loss;
      best = model;
      best.training.best_epoch = epoch;
    }
  }
  best.training.final_loss = best_loss;
  return best;
}

double score_features(const DetectorModel& model, const FeatureVector& f) {
  if (!f.finite()) throw DomainError("non-finite feature vector");
  return sigmoid(model.logit(f));
}

double score_frame(const DetectorModel& model, std::span<const double> frame, std::uint32_t width,
                   std::uint32_t height) {
  return score_features(model, frame_features(frame, width, height, model.feature_config));
}

ScoreSeries score_video(const DetectorModel& model, const NormalizedVideo& video,
                        const std::string& video_id) {
  const auto feats = kernels::parallel::frame_features(video.frames, video.width, video.height,
                                                       model.feature_config);
  ScoreSeries series{video_id, video.frame_rate, {}};
  series.scores.reserve(feats.size());
  for (const auto& f : feats) series.scores.push_back(score_features(model, f));
  return series;
}

ScoreSeries import_scores(const std::string& csv_text, double frame_rate, const std::string& video_id) {
  std::istringstream in(csv_text);
  std::string line;
  if (!std::getline(in, line)) throw FormatError("score file is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "frame,score") throw FormatError("score file must start with header 'frame,score'");
  ScoreSeries series{video_id, frame_rate, {}};
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw FormatError("row " + std::to_string(row) + " lacks a comma");
    std::size_t frame = 0;
    double score = 0.0;
    try {
      std::size_t used = 0;
      const auto frame_text = line.substr(0, comma);
      const long long f = std::stoll(frame_text, &used);
      if (used != frame_text.size() || f < 0) throw std::invalid_argument("frame");
      frame = static_cast<std::size_t>(f);
      const auto score_text = line.substr(comma + 1);
      score = std::stod(score_text, &used);
      if (used != score_text.size()) throw std::invalid_argument("score");
    } catch (const std::exception&) {
      throw FormatError("row " + std::to_string(row) + " is not 'frame,score': " + line);
    }
    if (frame != series.scores.size()) {
      throw ValidationError("frame indices not contiguous: expected " +
                            std::to_string(series.scores.size()) + ", got " + std::to_string(frame));
    }
    if (!(score >= 0.0 && score <= 1.0)) {
      throw ValidationError("score " + std::to_string(score) + " at frame " + std::to_string(frame) +
                            " outside [0,1]");
    }
    series.scores.push_back(score);
  }
  return series;
}

std::string export_scores(const ScoreSeries& series) {
  std::ostringstream out;
  out << "frame,score\n" << std::setprecision(17);
  for (std::size_t n = 0; n < series.scores.size(); ++n) out << n << ',' << series.scores[n] << '\n';
  return out.str();
}

DetectionMetrics metrics_from_counts(const ConfusionCounts& c) {
  DetectionMetrics m;
  m.counts = c;
  const double tp = static_cast<double>(c.tp);
  const double tn = static_cast<double>(c.tn);
  const double fp = static_cast<double>(c.fp);
  const double fn = static_cast<double>(c.fn);
  if (tp + fp > 0.0) {
    m.precision = tp / (tp + fp);
  } else {
    m.precision_degenerate = true;
  }
  if (tp + fn > 0.0) {
    m.recall = tp / (tp + fn);
  } else {
    m.recall_degenerate = true;
  }
  const double denom = (tn + fn) * (fp + tp) * (tn + fp) * (fn + tp);
  if (denom > 0.0) {
    m.mcc = (tn * tp - fp * fn) / std::sqrt(denom);
  } else {
    m.mcc_degenerate = true;
  }
  return m;
}

DetectionMetrics evaluate_detector(std::span<const double> scores, std::span<const std::uint8_t> labels,
                                   double threshold) {
  if (scores.size() != labels.size()) {
    throw ValidationError("scores (" + std::to_string(scores.size()) + ") and labels (" +
                          std::to_string(labels.size()) + ") differ in length");
  }
  ConfusionCounts c;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool predicted = scores[i] >= threshold;
    const bool actual = labels[i] != 0;
    if (predicted && actual) ++c.tp;
    else if (predicted) ++c.fp;
    else if (actual) ++c.fn;
    else ++c.tn;
  }
  return metrics_from_counts(c);
}

SplitIndices train_validation_split(std::size_t count, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction <= 1.0)) {
    throw DomainError("train fraction must lie in (0, 1]");
  }
  std::vector<std::size_t> idx(count);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  const auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(count)));
  SplitIndices s;
  s.train.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
  s.validation.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_train), idx.end());
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.validation.begin(), s.validation.end());
  return s;
}

nlohmann::json model_to_json(const DetectorModel& model) {
  nlohmann::json j;
  j["weights"] = model.weights;
  j["bias"] = model.bias;
  j["feature_version"] = kFeatureVersion;
  j["feature_mean"] = model.feature_mean;
  j["feature_scale"] = model.feature_scale;
  j["feature_config"] = {{"reference_quantile", model.feature_config.reference_quantile},
                         {"hot_margin", model.feature_config.hot_margin},
                         {"top_fraction", model.feature_config.top_fraction}};
  j["training"] = {{"epochs", model.training.epochs},
                   {"learning_rate", model.training.learning_rate},
                   {"batch_size", model.training.batch_size},
                   {"initial_loss", model.training.initial_loss},
                   {"final_loss", model.training.final_loss},
                   {"best_epoch", model.training.best_epoch}};
  return j;
}

DetectorModel model_from_json(const nlohmann::json& j) {
  try {
    if (j.at("feature_version").get<int>() != kFeatureVersion) {
      throw FormatError("unsupported feature_version " + j.at("feature_version").dump());
    }
    DetectorModel m;
    m.weights = j.at("weights").get<std::array<double, kFeatureCount>>();
    m.bias = j.at("bias").get<double>();
    if (j.contains("feature_mean")) m.feature_mean = j.at("feature_mean").get<std::array<double, kFeatureCount>>();
    if (j.contains("feature_scale")) m.feature_scale = j.at("feature_scale").get<std::array<double, kFeatureCount>>();
    if (j.contains("feature_config")) {
      const auto& fc = j.at("feature_config");
      m.feature_config.reference_quantile = fc.at("reference_quantile").get<double>();
      m.feature_config.hot_margin = fc.at("hot_margin").get<double>();
      m.feature_config.top_fraction = fc.at("top_fraction").get<double>();
    }
    if (j.contains("training")) {
      const auto& t = j.at("training");
      m.training.epochs = t.value("epochs", 0);
      m.training.learning_rate = t.value("learning_rate", 0.0);
      m.training.batch_size = t.value("batch_size", std::size_t{0});
      m.training.initial_loss = t.value("initial_loss", 0.0);
      m.training.final_loss = t.value("final_loss", 0.0);
      m.training.best_epoch = t.value("best_epoch", 0);
    }
    for (const double s : m.feature_scale) {
      if (!(s > 0.0)) throw ValidationError("feature_scale entries must be positive");
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed model file: ") + e.what());
  }
}

void save_model(const DetectorModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing", 0);
  out << model_to_json(model).dump(2) << '\n';
  if (!out) throw IoError("write failed for '" + path + "'", 0);
}

DetectorModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open model file '" + path + "'", 0);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError("model file '" + path + "' is not valid JSON: " + e.what());
  }
  return model_from_json(j);
}

}  // namespace thermotob
