#include "thermotob/cli.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "thermotob/error.hpp"
#include "thermotob/kernels.hpp"
#include "thermotob/simulator.hpp"

namespace thermotob::cli {

namespace fs = std::filesystem;

namespace {

class UsageError : public Error {
 public:
  using Error::Error;
};

std::shared_ptr<spdlog::logger> logger() {
  auto log = spdlog::get("thermotob");
  if (!log) log = spdlog::stderr_color_mt("thermotob");
  const char* env = std::getenv("THERMOTOB_LOG");
  log->set_level(env != nullptr ? spdlog::level::from_str(env) : spdlog::level::warn);
  log->set_pattern("[%l] %v");
  return log;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw Error("write to '" + path.string() + "' failed");
}

void write_json(const fs::path& path, const nlohmann::json& j) { write_text(path, j.dump(2) + "\n"); }

nlohmann::json parse_json(const fs::path& path) {
  try {
    return nlohmann::json::parse(read_text(path));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("'" + path.string() + "': " + e.what());
  }
}

void require_file(const std::string& path, const std::string& what) {
  if (!fs::is_regular_file(path)) throw UsageError(what + " '" + path + "' does not exist");
}

struct Options {
  std::uint64_t seed = 0;
  int workers = 0;
  std::string out;
  // simulate
  std::size_t n = 20;
  std::string rooms = "mixed";
  double duration_s = 180.0;
  std::uint32_t width = 84;
  std::uint32_t height = 63;
  // pipeline
  std::string corpus;
  std::string model;
  std::string scores;
  std::string video;
  std::string norm;
  std::string room_profile;
  double gamma = kDefaultGamma;
  std::size_t filter_k = kDefaultFilterLength;
  std::vector<double> thresholds;
  // training
  TrainConfig train;
  double nnb_hz = 1.0;
  // calibration
  std::string room_filter;
  double step = 2.5;
};

PipelineConfig pipeline_config(const Options& o, NormalizationKind norm) {
  PipelineConfig cfg;
  cfg.norm = norm;
  cfg.seed = o.seed;
  cfg.gamma = o.gamma;
  cfg.filter_k = o.filter_k;
  if (!o.room_profile.empty()) cfg.room_profile = resolve_room_profile(o.room_profile);
  return cfg;
}

struct LoadedModel {
  DetectorModel model;
  std::optional<NormalizationKind> norm;
};

LoadedModel load_model_file(const std::string& path) {
  require_file(path, "model file");
  const auto j = parse_json(path);
  LoadedModel m{model_from_json(j), std::nullopt};
  if (j.contains("normalization")) m.norm = normalization_kind_from_string(j.at("normalization").get<std::string>());
  return m;
}

NormalizationKind pick_norm(const Options& o, const std::optional<NormalizationKind>& from_model) {
  if (!o.norm.empty()) {
    const auto n = normalization_kind_from_string(o.norm);
    if (from_model && *from_model != n) {
      logger()->warn("model was trained with {} normalization, running with {}", to_string(*from_model),
                     to_string(n));
    }
    return n;
  }
  return from_model.value_or(NormalizationKind::Gmm);
}

Manifest require_corpus(const Options& o) {
  if (o.corpus.empty()) throw UsageError("--corpus is required");
  auto m = load_manifest(o.corpus);
  if (m.videos.empty()) throw UsageError("corpus '" + o.corpus + "' contains no videos");
  return m;
}

int cmd_simulate(const Options& o) {
  if (o.n == 0) throw UsageError("--n must be at least 1");
  sim::SuiteConfig cfg;
  cfg.duration_s = o.duration_s;
  cfg.width = o.width;
  cfg.height = o.height;
  const auto scenarios = sim::scenario_suite(o.n, sim::room_mix_from_string(o.rooms), o.seed, cfg);
  const fs::path out(o.out);
  fs::create_directories(out);

  std::vector<std::string> ids(o.n);
  std::vector<std::string> errors(o.n);
  const auto count = static_cast<std::int64_t>(o.n);
#pragma omp parallel for num_threads(o.workers > 0 ? o.workers : kernels::max_threads()) schedule(dynamic, 1)
  for (std::int64_t i = 0; i < count; ++i) {
    const auto k = static_cast<std::size_t>(i);
    char buf[32];
    std::snprintf(buf, sizeof buf, "sim_%03zu", k);
    ids[k] = buf;
    try {
      const auto& s = scenarios[k];
      const auto r = sim::render_scene(s);
      save_video(r.video, (out / (ids[k] + ".thv")).string());
      save_annotations_file(r.truth.to_annotations(s.frame_rate), (out / (ids[k] + ".annotations.json")).string());
      write_json(out / (ids[k] + ".scenario.json"), sim::scenario_to_json(s));
      write_json(out / (ids[k] + ".truth.json"), sim::truth_to_json(r.truth));
    } catch (const std::exception& e) {
      errors[k] = e.what();
    }
  }
  for (std::size_t k = 0; k < o.n; ++k) {
    if (!errors[k].empty()) throw Error(ids[k] + ": " + errors[k]);
  }

  nlohmann::json manifest;
  manifest["seed"] = o.seed;
  manifest["rooms"] = o.rooms;
  manifest["videos"] = nlohmann::json::array();
  for (std::size_t k = 0; k < o.n; ++k) {
    manifest["videos"].push_back({{"id", ids[k]},
                                  {"video", ids[k] + ".thv"},
                                  {"annotations", ids[k] + ".annotations.json"},
                                  {"scenario", ids[k] + ".scenario.json"},
                                  {"truth", ids[k] + ".truth.json"},
                                  {"room_type", to_string(scenarios[k].room_type)},
                                  {"tob_s", scenarios[k].tob_s}});
  }
  write_json(out / "manifest.json", manifest);
  logger()->info("wrote {} videos to {}", o.n, out.string());
  return kOk;
}

int cmd_calibrate(const Options& o) {
  const auto m = require_corpus(o);
  const auto corpus = manifest_corpus(m);
  std::vector<std::optional<CalibrationSample>> samples(corpus.size);
  std::vector<std::string> errors(corpus.size);
  const std::optional<RoomType> filter =
      o.room_filter.empty() ? std::nullopt : std::optional(room_type_from_string(o.room_filter));
  const auto count = static_cast<std::int64_t>(corpus.size);
#pragma omp parallel for num_threads(o.workers > 0 ? o.workers : kernels::max_threads()) schedule(dynamic, 1)
  for (std::int64_t i = 0; i < count; ++i) {
    const auto k = static_cast<std::size_t>(i);
    try {
      const auto video = load_video((m.root / m.videos[k].video).string());
      if (filter && video.room_type != *filter) continue;
      const auto v = sample_temperatures(video, kGmmSamplingInterval_s);
      const auto stats = compute_sample_stats(v);
      const auto model = fit_gmm(v, 3, {}, o.seed);
      samples[k] = CalibrationSample{stats, select_skin_component(model, stats).mu_hat};
    } catch (const std::exception& e) {
      errors[k] = e.what();
    }
  }
  std::vector<CalibrationSample> used;
  std::size_t failed = 0;
  for (std::size_t k = 0; k < samples.size(); ++k) {
    if (!errors[k].empty()) {
      logger()->error("{}: {}", m.videos[k].id, errors[k]);
      ++failed;
    } else if (samples[k]) {
      used.push_back(*samples[k]);
    }
  }
  if (used.empty()) throw UsageError("no videos left to calibrate on");
  const auto profile = calibrate_profile(used, o.step);
  nlohmann::json j;
  j["lower_offset"] = profile.lower_offset;
  j["upper_offset"] = profile.upper_offset;
  j["step"] = o.step;
  j["videos"] = used.size();
  j["room"] = o.room_filter.empty() ? nlohmann::json(nullptr) : nlohmann::json(o.room_filter);
  if (o.out.empty()) std::cout << j.dump(2) << "\n";
  else write_json(o.out, j);
  return failed > 0 ? kPartialFailure : kOk;
}

int cmd_train(const Options& o) {
  if (o.out.empty()) throw UsageError("--out is required");
  const auto m = require_corpus(o);
  const auto norm = o.norm.empty() ? NormalizationKind::Gmm : normalization_kind_from_string(o.norm);
  auto train = o.train;
  train.seed = o.seed;
  const auto result = train_on_corpus(manifest_corpus(m), pipeline_config(o, norm), train, o.nnb_hz, o.workers);
  auto j = model_to_json(result.model);
  j["normalization"] = to_string(norm);
  j["samples"] = {{"nnb", result.dataset.counts[0]}, {"vnb", result.dataset.counts[1]}};
  write_json(o.out, j);
  logger()->info("trained on {} frames, loss {} -> {}", result.dataset.size(), result.model.training.initial_loss,
                 result.model.training.final_loss);
  return kOk;
}

int cmd_score(const Options& o) {
  if (o.model.empty()) throw UsageError("--model is required");
  if (o.out.empty()) throw UsageError("--out is required");
  const auto loaded = load_model_file(o.model);
  const auto cfg = pipeline_config(o, pick_norm(o, loaded.norm));
  const fs::path out(o.out);
  fs::create_directories(out);

  std::vector<std::pair<std::string, fs::path>> videos;
  if (!o.video.empty()) {
    require_file(o.video, "video");
    videos.emplace_back(fs::path(o.video).stem().string(), o.video);
  } else {
    const auto m = require_corpus(o);
    for (const auto& e : m.videos) videos.emplace_back(e.id, m.root / e.video);
  }
  std::vector<std::string> errors(videos.size());
  const auto count = static_cast<std::int64_t>(videos.size());
#pragma omp parallel for num_threads(o.workers > 0 ? o.workers : kernels::max_threads()) schedule(dynamic, 1)
  for (std::int64_t i = 0; i < count; ++i) {
    const auto k = static_cast<std::size_t>(i);
    try {
      const auto video = load_video(videos[k].second.string());
      const auto run = run_video(video, videos[k].first, nullptr, loaded.model, cfg);
      write_text(out / (videos[k].first + ".scores.csv"),
                 export_scores(ScoreSeries{run.id, run.frame_rate, run.scores}));
    } catch (const std::exception& e) {
      errors[k] = e.what();
    }
  }
  std::size_t failed = 0;
  for (std::size_t k = 0; k < videos.size(); ++k) {
    if (errors[k].empty()) continue;
    logger()->error("{}: {}", videos[k].first, errors[k]);
    ++failed;
  }
  if (failed == videos.size()) return kDataError;
  return failed > 0 ? kPartialFailure : kOk;
}

// Shared by run and sweep: scores come from the model or from score files.
CorpusRun evaluate(const Options& o) {
  const auto m = require_corpus(o);
  if (o.model.empty() == o.scores.empty()) throw UsageError("exactly one of --model and --scores is required");
  if (!(o.gamma > 0.0 && o.gamma <= 1.0)) throw UsageError("--gamma must lie in (0, 1]");
  if (o.filter_k < 1) throw UsageError("--filter-k must be at least 1");

  if (!o.model.empty()) {
    const auto loaded = load_model_file(o.model);
    const auto norm = pick_norm(o, loaded.norm);
    return run_corpus(manifest_corpus(m), loaded.model, pipeline_config(o, norm), to_string(norm), o.workers);
  }

  if (!fs::is_directory(o.scores)) throw UsageError("score directory '" + o.scores + "' does not exist");
  const auto cfg = pipeline_config(o, NormalizationKind::Gmm);
  const std::string variant = o.norm.empty() ? "scores" : o.norm;
  std::vector<VideoOutcome> outcomes(m.videos.size());
  std::vector<VideoRun> runs(m.videos.size());
  const auto count = static_cast<std::int64_t>(m.videos.size());
#pragma omp parallel for num_threads(o.workers > 0 ? o.workers : kernels::max_threads()) schedule(dynamic, 1)
  for (std::int64_t i = 0; i < count; ++i) {
    const auto k = static_cast<std::size_t>(i);
    const auto& e = m.videos[k];
    outcomes[k].id = e.id;
    try {
      const auto track = load_annotations_file((m.root / e.annotations).string());
      const auto series = import_scores(read_text(fs::path(o.scores) / (e.id + ".scores.csv")), track.fps, e.id);
      runs[k] = run_scores(series, &track, cfg);
      if (runs[k].estimate.found) outcomes[k].t_hat = runs[k].estimate.t_birth_s;
      outcomes[k].t_ann = runs[k].t_ann;
      outcomes[k].err = runs[k].err;
    } catch (const std::exception& ex) {
      outcomes[k].failure = ex.what();
      runs[k].id = e.id;
    }
  }
  std::vector<std::size_t> order(runs.size());
  for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return runs[a].id < runs[b].id; });
  CorpusRun out;
  for (const auto k : order) out.runs.push_back(std::move(runs[k]));
  out.report = summarise(variant, cfg, std::move(outcomes));
  return out;
}

int finish(const EvaluationReport& report) {
  for (const auto& v : report.per_video) {
    if (!v.failure.empty()) logger()->error("{}: {}", v.id, v.failure);
  }
  if (report.failures == report.per_video.size()) return kDataError;
  return report.failures > 0 ? kPartialFailure : kOk;
}

int cmd_run(const Options& o) {
  if (o.out.empty()) throw UsageError("--out is required");
  const auto result = evaluate(o);
  const fs::path out(o.out);
  write_json(out / "report.json", report_to_json(result.report));
  write_text(out / "report.csv", report_to_csv(result.report));
  const auto m = load_manifest(o.corpus);
  for (const auto& run : result.runs) {
    if (run.scores.empty()) continue;
    std::optional<AnnotationTrack> track;
    for (const auto& e : m.videos) {
      if (e.id == run.id) track = load_annotations_file((m.root / e.annotations).string());
    }
    write_text(out / "timelines" / (run.id + ".csv"), timeline_csv(run, track ? &*track : nullptr));
  }
  if (result.report.stats) {
    logger()->info("{}: median |err| {} s, found {}", result.report.variant, result.report.stats->q2,
                   result.report.found_fraction);
  }
  return finish(result.report);
}

int cmd_sweep(const Options& o) {
  if (o.out.empty()) throw UsageError("--out is required");
  auto grid = o.thresholds.empty() ? default_threshold_grid() : o.thresholds;
  std::sort(grid.begin(), grid.end());
  const auto result = evaluate(o);
  const auto points = sweep_runs(result.runs, grid);
  write_text(o.out, sweep_csv(points));
  if (!points.empty() && points.front().degenerate) logger()->warn("no pre-birth NNB frames; FPR reported as 0");
  return finish(result.report);
}

}  // namespace

Manifest load_manifest(const fs::path& dir) {
  const auto path = dir / "manifest.json";
  if (!fs::is_regular_file(path)) throw UsageError("no manifest.json in '" + dir.string() + "'");
  const auto j = parse_json(path);
  Manifest m;
  m.root = dir;
  try {
    for (const auto& v : j.at("videos")) {
      m.videos.push_back({v.at("id").get<std::string>(), v.at("video").get<std::string>(),
                          v.at("annotations").get<std::string>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("'" + path.string() + "': " + e.what());
  }
  std::sort(m.videos.begin(), m.videos.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  return m;
}

Corpus manifest_corpus(const Manifest& manifest) {
  std::vector<std::string> ids;
  for (const auto& e : manifest.videos) ids.push_back(e.id);
  return {manifest.videos.size(),
          [manifest](std::size_t i) {
            const auto& e = manifest.videos.at(i);
            return CorpusItem{e.id, load_video((manifest.root / e.video).string()),
                              load_annotations_file((manifest.root / e.annotations).string())};
          },
          std::move(ids)};
}

RoomProfile resolve_room_profile(const std::string& spec) {
  if (spec == "delivery") return default_room_profile(RoomType::DeliveryRoom);
  if (spec == "theatre") return default_room_profile(RoomType::OperationTheatre);
  require_file(spec, "room profile");
  const auto j = parse_json(spec);
  RoomProfile p;
  try {
    p.lower_offset = j.at("lower_offset").get<double>();
    p.upper_offset = j.at("upper_offset").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("'" + spec + "': " + e.what());
  }
  p.validate();
  return p;
}

int run(int argc, const char* const* argv) {
  CLI::App app{"Time-of-birth detection in thermal video"};
  app.require_subcommand(1);
  Options o;

  const auto add_seed = [&o](CLI::App* c) { c->add_option("--seed", o.seed, "Random seed"); };
  const auto add_workers = [&o](CLI::App* c) {
    c->add_option("--workers", o.workers, "Videos processed concurrently (0 = all cores)")->check(CLI::NonNegativeNumber);
  };
  const auto add_pipeline = [&](CLI::App* c) {
    c->add_option("--corpus", o.corpus, "Corpus directory with manifest.json");
    c->add_option("--norm", o.norm, "Normalization variant")->check(CLI::IsMember({"gmm", "maxmin"}));
    c->add_option("--room-profile", o.room_profile, "delivery, theatre or a profile JSON from calibrate");
    add_seed(c);
    add_workers(c);
  };
  const auto add_tob = [&o](CLI::App* c) {
    c->add_option("--model", o.model, "Detector model JSON");
    c->add_option("--scores", o.scores, "Directory of <id>.scores.csv files instead of a model");
    c->add_option("--gamma", o.gamma, "Threshold on the smoothed score");
    c->add_option("--filter-k", o.filter_k, "Moving-average length in frames");
  };

  auto* simulate = app.add_subcommand("simulate", "Render a synthetic corpus");
  simulate->add_option("--n", o.n, "Number of videos");
  simulate->add_option("--rooms", o.rooms, "Room mix")->check(CLI::IsMember({"mixed", "delivery", "theatre"}));
  simulate->add_option("--duration", o.duration_s, "Video length in seconds")->check(CLI::PositiveNumber);
  simulate->add_option("--width", o.width, "Frame width")->check(CLI::PositiveNumber);
  simulate->add_option("--height", o.height, "Frame height")->check(CLI::PositiveNumber);
  simulate->add_option("--out", o.out, "Output directory")->required();
  add_seed(simulate);
  add_workers(simulate);

  auto* calibrate = app.add_subcommand("calibrate", "Estimate range-of-interest offsets from a corpus");
  calibrate->add_option("--corpus", o.corpus, "Corpus directory")->required();
  calibrate->add_option("--room", o.room_filter, "Only use videos of this room type")
      ->check(CLI::IsMember({"delivery", "theatre"}));
  calibrate->add_option("--step", o.step, "Rounding step in degrees C")->check(CLI::PositiveNumber);
  calibrate->add_option("--out", o.out, "Profile JSON (stdout when omitted)");
  add_seed(calibrate);
  add_workers(calibrate);

  auto* train = app.add_subcommand("train", "Train the reference frame detector");
  add_pipeline(train);
  train->add_option("--epochs", o.train.epochs, "Training epochs")->check(CLI::PositiveNumber);
  train->add_option("--lr", o.train.learning_rate, "Learning rate")->check(CLI::PositiveNumber);
  train->add_option("--batch", o.train.batch_size, "Mini-batch size")->check(CLI::PositiveNumber);
  train->add_option("--nnb-hz", o.nnb_hz, "NNB downsampling rate")->check(CLI::PositiveNumber);
  train->add_option("--out", o.out, "Model JSON")->required();

  auto* score = app.add_subcommand("score", "Write per-frame scores");
  add_pipeline(score);
  score->add_option("--model", o.model, "Detector model JSON")->required();
  score->add_option("--video", o.video, "Single .thv file instead of a corpus");
  score->add_option("--out", o.out, "Output directory")->required();

  auto* run_cmd = app.add_subcommand("run", "Estimate the time of birth for every video and report errors");
  add_pipeline(run_cmd);
  add_tob(run_cmd);
  run_cmd->add_option("--out", o.out, "Report directory")->required();

  auto* sweep = app.add_subcommand("sweep", "False-positive rate over a threshold grid");
  add_pipeline(sweep);
  add_tob(sweep);
  sweep->add_option("--thresholds", o.thresholds, "Explicit thresholds (default 0.10..0.99 plus 0.9)")
      ->delimiter(',');
  sweep->add_option("--out", o.out, "CSV path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*simulate) return cmd_simulate(o);
    if (*calibrate) return cmd_calibrate(o);
    if (*train) return cmd_train(o);
    if (*score) return cmd_score(o);
    if (*run_cmd) return cmd_run(o);
    if (*sweep) return cmd_sweep(o);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kDataError;
  }
  return kUsage;
}

int run(const std::vector<std::string>& args) {
  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data());
}

}  // namespace thermotob::cli
