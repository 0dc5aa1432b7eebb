#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "thermotob/detector.hpp"
#include "thermotob/error.hpp"

using namespace thermotob;

namespace {

// Brute-force metrics straight from the label/prediction pairs.
struct Oracle {
  double precision;
  double recall;
  double mcc;
};

Oracle brute_force(const std::vector<int>& pred, const std::vector<int>& label) {
  double tp = 0, tn = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    tp += pred[i] == 1 && label[i] == 1;
    tn += pred[i] == 0 && label[i] == 0;
    fp += pred[i] == 1 && label[i] == 0;
    fn += pred[i] == 0 && label[i] == 1;
  }
  const double d = std::sqrt((tp + fp) * (tp + fn) * (tn + fp) * (tn + fn));
  return {tp / (tp + fp), tp / (tp + fn), (tp * tn - fp * fn) / d};
}

Sample make_sample(std::mt19937_64& rng, std::uint8_t label) {
  std::normal_distribution<double> g(0.0, 1.0);
  Sample s;
  s.label = label;
  for (auto& v : s.features.values) v = g(rng) + (label ? 0.8 : -0.3);
  return s;
}

Dataset toy_dataset(std::size_t n_pos, std::size_t n_neg, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Dataset d;
  for (std::size_t i = 0; i < n_pos; ++i) d.add(make_sample(rng, 1));
  for (std::size_t i = 0; i < n_neg; ++i) d.add(make_sample(rng, 0));
  return d;
}

}  // namespace

TEST_CASE("balanced classes weigh exactly one") {
  const std::vector<std::size_t> counts = {500, 500};
  const auto w = class_weights(counts);
  CHECK(w[0] == 1.0);
  CHECK(w[1] == 1.0);
}

TEST_CASE("class weights follow S / (C * s_c)") {
  // training split counts: VNB 20887, NNB 78848
  const std::vector<std::size_t> counts = {78848, 20887};
  const auto w = class_weights(counts);
  const double s = 78848.0 + 20887.0;
  CHECK(s == 99735.0);
  CHECK(std::abs(w[0] - 99735.0 / 157696.0) < 1e-9);
  CHECK(std::abs(w[1] - 99735.0 / 41774.0) < 1e-9);
  CHECK(std::abs(w[1] - 2.387489826) < 1e-9);
  CHECK(std::abs(w[0] - 0.632451045) < 1e-9);
  // the weighted class totals come out equal
  CHECK(w[0] * 78848.0 == doctest::Approx(w[1] * 20887.0).epsilon(1e-12));
  const std::vector<std::size_t> empty_class = {10, 0};
  CHECK_THROWS_AS(class_weights(empty_class), DomainError);
}

TEST_CASE("weighted BCE values") {
  const ClassWeights unit;
  CHECK(weighted_bce(1.0, 0.5, unit) == doctest::Approx(std::log(2.0)));
  CHECK(weighted_bce(0.0, 0.25, unit) == doctest::Approx(-std::log(0.75)));
  const ClassWeights w{0.5, 3.0};
  CHECK(weighted_bce(1.0, 0.8, w) == doctest::Approx(-3.0 * std::log(0.8)));
  CHECK(weighted_bce(0.0, 0.8, w) == doctest::Approx(-0.5 * std::log(0.2)));
  // clamped, so finite at the extremes
  CHECK(std::isfinite(weighted_bce(1.0, 0.0, unit)));
  CHECK(weighted_bce(1.0, 0.0, unit) == doctest::Approx(-std::log(kBceEpsilon)));
  CHECK(weighted_bce(1.0, 1.0, unit) >= 0.0);
}

TEST_CASE("analytic gradient matches central differences") {
  const auto data = toy_dataset(40, 60, 3);
  const ClassWeights w{0.8, 1.7};
  std::mt19937_64 rng(21);
  std::normal_distribution<double> g(0.0, 0.7);
  const double h = 1e-5;
  const auto rel = [](double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-6}); };
  for (int point = 0; point < 10; ++point) {
    DetectorModel m;
    for (auto& x : m.weights) x = g(rng);
    m.bias = g(rng);
    for (std::size_t j = 0; j < kFeatureCount; ++j) {
      m.feature_mean[j] = 0.1 * g(rng);
      m.feature_scale[j] = 1.0 + std::abs(g(rng));
    }
    const auto grad = loss_and_gradient(m, data.samples, w);
    for (std::size_t j = 0; j < kFeatureCount; ++j) {
      auto plus = m;
      auto minus = m;
      plus.weights[j] += h;
      minus.weights[j] -= h;
      const double fd = (loss_and_gradient(plus, data.samples, w).loss - loss_and_gradient(minus, data.samples, w).loss) /
                        (2 * h);
      CHECK(rel(grad.d_weights[j], fd) < 1e-5);
    }
    auto plus = m;
    auto minus = m;
    plus.bias += h;
    minus.bias -= h;
    const double fd =
        (loss_and_gradient(plus, data.samples, w).loss - loss_and_gradient(minus, data.samples, w).loss) / (2 * h);
    CHECK(rel(grad.d_bias, fd) < 1e-5);
  }
}

TEST_CASE("training lowers the loss and is seed-deterministic") {
  const auto data = toy_dataset(50, 200, 9);
  TrainConfig cfg;
  cfg.seed = 4;
  const auto a = train_detector(data, cfg);
  CHECK(a.training.final_loss <= a.training.initial_loss);
  CHECK(a.training.final_loss < 0.9 * a.training.initial_loss);
  const auto b = train_detector(data, cfg);
  CHECK(a.weights == b.weights);
  CHECK(a.bias == b.bias);
  std::vector<double> scores;
  std::vector<std::uint8_t> labels;
  for (const auto& s : data.samples) {
    scores.push_back(score_features(a, s.features));
    labels.push_back(s.label);
  }
  CHECK(evaluate_detector(scores, labels).mcc > 0.5);

  Dataset one_class = toy_dataset(10, 0, 1);
  CHECK_THROWS_AS(train_detector(one_class), DomainError);
}

TEST_CASE("metrics hand case") {
  const auto m = metrics_from_counts({2, 2, 1, 1});
  CHECK(std::abs(m.mcc - 1.0 / 3.0) < 1e-9);
  CHECK(m.precision == doctest::Approx(2.0 / 3.0));
  CHECK(m.recall == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("metrics agree with brute force on random predictions") {
  std::mt19937_64 rng(1);
  std::bernoulli_distribution coin(0.4);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> scores;
    std::vector<std::uint8_t> labels;
    std::vector<int> pred;
    std::vector<int> lab;
    for (int i = 0; i < 50; ++i) {
      const double s = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
      const int y = coin(rng);
      scores.push_back(s);
      labels.push_back(static_cast<std::uint8_t>(y));
      pred.push_back(s >= 0.5);
      lab.push_back(y);
    }
    const auto m = evaluate_detector(scores, labels);
    const auto o = brute_force(pred, lab);
    if (m.mcc_degenerate || m.precision_degenerate || m.recall_degenerate) continue;
    CHECK(std::abs(m.precision - o.precision) < 1e-12);
    CHECK(std::abs(m.recall - o.recall) < 1e-12);
    CHECK(std::abs(m.mcc - o.mcc) < 1e-12);
  }
}

TEST_CASE("degenerate metrics are flagged") {
  const auto m = metrics_from_counts({0, 10, 0, 0});
  CHECK(m.precision_degenerate);
  CHECK(m.recall_degenerate);
  CHECK(m.mcc_degenerate);
  const std::vector<double> s = {0.1};
  const std::vector<std::uint8_t> l = {1, 0};
  CHECK_THROWS_AS(evaluate_detector(s, l), ValidationError);
}

TEST_CASE("threshold comparison is inclusive") {
  const std::vector<double> s = {0.5, 0.49};
  const std::vector<std::uint8_t> l = {1, 0};
  const auto m = evaluate_detector(s, l, 0.5);
  CHECK(m.counts.tp == 1);
  CHECK(m.counts.tn == 1);
}

TEST_CASE("training frames: VNB kept, NNB downsampled, post-birth NNB dropped") {
  AnnotationTrack t;
  t.fps = 8.33;
  t.n_frames = 100;
  t.vnb_intervals = {{40, 44}, {70, 72}};
  t.tob_frame = 40;
  const auto sel = select_training_frames(t, 1.0);
  std::vector<std::size_t> vnb;
  std::vector<std::size_t> nnb;
  for (const auto& s : sel) (s.label ? vnb : nnb).push_back(s.frame);
  CHECK(vnb == std::vector<std::size_t>{40, 41, 42, 43, 44, 70, 71, 72});
  CHECK(nnb == std::vector<std::size_t>{0, 8, 16, 24, 32});  // stride floor(8.33) = 8
  for (const auto n : nnb) CHECK(n < 40);

  AnnotationTrack none;
  none.n_frames = 20;
  none.fps = 4.0;
  const auto all = select_training_frames(none, 1.0);
  CHECK(all.size() == 5);
  CHECK_THROWS_AS(select_training_frames(none, 0.0), DomainError);
}

TEST_CASE("dataset counts classes") {
  NormalizedVideo v{4, 4, 2.0, std::vector<std::vector<double>>(10, std::vector<double>(16, 0.2))};
  AnnotationTrack t;
  t.fps = 2.0;
  t.n_frames = 10;
  t.vnb_intervals = {{6, 7}};
  t.tob_frame = 6;
  const std::vector<NormalizedVideo> vids{v};
  const std::vector<AnnotationTrack> tracks{t};
  const std::vector<std::string> ids{"a"};
  const auto d = build_dataset(vids, tracks, ids);
  CHECK(d.counts[1] == 2);
  CHECK(d.counts[0] == 3);  // frames 0, 2, 4
  t.n_frames = 11;
  const std::vector<AnnotationTrack> bad{t};
  CHECK_THROWS_AS(build_dataset(vids, bad, ids), ValidationError);
}

TEST_CASE("score CSV round trip and errors") {
  ScoreSeries s{"v", 8.33, {0.0, 0.1, 1.0 / 3.0, 1.0}};
  const auto back = import_scores(export_scores(s), 8.33, "v");
  CHECK(back.scores == s.scores);
  CHECK_THROWS_AS(import_scores("frame,score\n0,0.1\n2,0.2\n"), ValidationError);
  CHECK_THROWS_AS(import_scores("frame,score\n0,1.5\n"), ValidationError);
  CHECK_THROWS_AS(import_scores("f,s\n0,0.1\n"), FormatError);
  CHECK_THROWS_AS(import_scores("frame,score\n0;0.1\n"), FormatError);
  CHECK_THROWS_AS(import_scores(""), FormatError);
}

TEST_CASE("model JSON round trip") {
  DetectorModel m;
  for (std::size_t j = 0; j < kFeatureCount; ++j) {
    m.weights[j] = 0.1 * static_cast<double>(j) - 0.2;
    m.feature_mean[j] = 0.5;
    m.feature_scale[j] = 2.0 + static_cast<double>(j);
  }
  m.bias = -1.25;
  const auto back = model_from_json(model_to_json(m));
  CHECK(back.weights == m.weights);
  CHECK(back.bias == m.bias);
  CHECK(back.feature_scale == m.feature_scale);
  auto j = model_to_json(m);
  j["feature_version"] = 99;
  CHECK_THROWS_AS(model_from_json(j), FormatError);
  CHECK_THROWS_AS(model_from_json(nlohmann::json::object()), FormatError);
}

TEST_CASE("scores stay inside (0, 1)") {
  DetectorModel m;
  m.weights = {50, 50, 50, 50, 50, 50};
  FeatureVector f;
  f.values = {1, 1, 1, 1, 1, 1};
  const double hi = score_features(m, f);
  CHECK(hi <= 1.0);
  CHECK(hi > 0.99);
  f.values[0] = std::nan("");
  CHECK_THROWS_AS(score_features(m, f), DomainError);
}

TEST_CASE("train/validation split is a deterministic partition") {
  const auto s = train_validation_split(20, 0.85, 3);
  CHECK(s.train.size() == 17);
  CHECK(s.validation.size() == 3);
  std::vector<std::size_t> all = s.train;
  all.insert(all.end(), s.validation.begin(), s.validation.end());
  std::sort(all.begin(), all.end());
  for (std::size_t i = 0; i < 20; ++i) CHECK(all[i] == i);
  CHECK(train_validation_split(20, 0.85, 3).train == s.train);
}

TEST_CASE("largest blob area and crack perimeter") {
  // 2x2 square plus a separate single pixel
  const std::vector<std::uint8_t> mask = {
      1, 1, 0, 0,
      1, 1, 0, 1,
      0, 0, 0, 0,
  };
  const auto b = largest_blob(mask, 4, 3);
  CHECK(b.area == 4);
  CHECK(b.perimeter == 8);
  const std::vector<std::uint8_t> diag = {1, 0, 0, 1};  // diagonal pixels are not 4-connected
  CHECK(largest_blob(diag, 2, 2).area == 1);
  const std::vector<std::uint8_t> none(9, 0);
  CHECK(largest_blob(none, 3, 3).area == 0);
}

TEST_CASE("frame features of a hot square") {
  std::vector<double> frame(100, 0.3);
  for (int y = 4; y < 7; ++y)
    for (int x = 4; x < 7; ++x) frame[y * 10 + x] = 0.9;
  const auto f = frame_features(frame, 10, 10);
  CHECK(f.hot_fraction() == doctest::Approx(0.09));
  CHECK(f.blob_area() == doctest::Approx(0.09));
  CHECK(f.blob_compactness() == doctest::Approx(4.0 * std::numbers::pi * 9.0 / 144.0));
  CHECK(f.top_mean() == 0.9);
  CHECK(f.mean() == doctest::Approx(0.354));
  const auto flat = frame_features(std::vector<double>(100, 0.5), 10, 10);
  CHECK(flat.hot_fraction() == 0.0);
  CHECK(flat.blob_compactness() == 0.0);
  CHECK(flat.stddev() == 0.0);
  CHECK_THROWS_AS(frame_features(frame, 9, 10), DomainError);
}
