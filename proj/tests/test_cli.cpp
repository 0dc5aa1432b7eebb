#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include "thermotob/cli.hpp"
#include "thermotob/error.hpp"

using namespace thermotob;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("thermotob_cli_" + std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& name) const { return (path / name).string(); }
};

int invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "thermotob");
  return cli::run(args);
}

// One small corpus and model shared by the cases below.
struct Fixture {
  TempDir dir;
  Fixture() {
    REQUIRE(invoke({"simulate", "--n", "4", "--seed", "7", "--duration", "60", "--out", dir / "corpus"}) == 0);
    REQUIRE(invoke({"train", "--corpus", dir / "corpus", "--seed", "1", "--out", dir / "model.json"}) == 0);
  }
};

std::vector<std::vector<std::string>> csv_rows(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    rows.push_back(cells);
  }
  return rows;
}

}  // namespace

TEST_CASE_FIXTURE(Fixture, "simulate writes a manifest and repeats byte for byte") {
  CHECK(fs::exists(dir / "corpus/manifest.json"));
  for (int i = 0; i < 4; ++i) {
    const std::string id = "sim_00" + std::to_string(i);
    CHECK(fs::exists(dir / ("corpus/" + id + ".thv")));
    CHECK(fs::exists(dir / ("corpus/" + id + ".annotations.json")));
  }
  REQUIRE(invoke({"simulate", "--n", "4", "--seed", "7", "--duration", "60", "--out", dir / "again"}) == 0);
  for (const auto& e : fs::directory_iterator(dir.path / "corpus")) {
    CHECK(slurp(e.path()) == slurp(dir.path / "again" / e.path().filename()));
  }
}

TEST_CASE_FIXTURE(Fixture, "run reports are deterministic and self-consistent") {
  REQUIRE(invoke({"run", "--corpus", dir / "corpus", "--model", dir / "model.json", "--out", dir / "r1"}) == 0);
  REQUIRE(invoke({"run", "--corpus", dir / "corpus", "--model", dir / "model.json", "--out", dir / "r2", "--workers",
               "1"}) == 0);
  CHECK(slurp(dir / "r1/report.json") == slurp(dir / "r2/report.json"));
  CHECK(slurp(dir / "r1/report.csv") == slurp(dir / "r2/report.csv"));
  CHECK(fs::exists(dir / "r1/timelines/sim_000.csv"));

  // Aggregates recomputed from the CSV rows.
  const auto rows = csv_rows(slurp(dir / "r1/report.csv"));
  REQUIRE(rows.size() == 5);
  std::vector<double> errs;
  std::size_t found = 0;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i][5] == "found") ++found;
    if (!rows[i][3].empty()) errs.push_back(std::stod(rows[i][3]));
  }
  const auto report = nlohmann::json::parse(slurp(dir / "r1/report.json"));
  CHECK(report["found_fraction"].get<double>() == static_cast<double>(found) / 4.0);
  if (!errs.empty()) {
    const auto stats = error_stats(errs, found, 4);
    CHECK(report["q2"].get<double>() == stats.q2);
    CHECK(report["mean"].get<double>() == stats.mean);
  }
  CHECK(report["per_video"].size() == 4);
  CHECK(report["variant"] == "gmm");
}

TEST_CASE_FIXTURE(Fixture, "scores written by score reproduce the model-driven run") {
  REQUIRE(invoke({"score", "--model", dir / "model.json", "--corpus", dir / "corpus", "--out", dir / "scores"}) == 0);
  REQUIRE(invoke({"run", "--corpus", dir / "corpus", "--model", dir / "model.json", "--out", dir / "a"}) == 0);
  REQUIRE(invoke({"run", "--corpus", dir / "corpus", "--scores", dir / "scores", "--out", dir / "b"}) == 0);
  CHECK(slurp(dir / "a/report.csv") == slurp(dir / "b/report.csv"));
}

TEST_CASE_FIXTURE(Fixture, "sweep column is non-increasing and includes 0.9") {
  REQUIRE(invoke({"sweep", "--corpus", dir / "corpus", "--model", dir / "model.json", "--out", dir / "sweep.csv"}) == 0);
  const auto rows = csv_rows(slurp(dir / "sweep.csv"));
  REQUIRE(rows.size() == 91);
  CHECK(rows[0] == std::vector<std::string>{"gamma", "fpr"});
  bool has_09 = false;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    has_09 = has_09 || rows[i][0] == "0.9";
    if (i > 1) CHECK(std::stod(rows[i][1]) <= std::stod(rows[i - 1][1]));
  }
  CHECK(has_09);
}

TEST_CASE("sweep over an all-negative corpus reaches 1 at gamma 0") {
  TempDir dir;
  REQUIRE(invoke({"simulate", "--n", "2", "--seed", "3", "--duration", "30", "--out", dir / "c"}) == 0);
  fs::create_directories(dir.path / "scores");
  const auto manifest = nlohmann::json::parse(slurp(dir / "c/manifest.json"));
  for (const auto& v : manifest["videos"]) {
    const std::string id = v["id"];
    AnnotationTrack t;
    t.fps = kDefaultFrameRate;
    t.n_frames = 60;
    save_annotations_file(t, dir / ("c/" + id + ".annotations.json"));
    std::ofstream out(dir / ("scores/" + id + ".scores.csv"));
    out << "frame,score\n";
    for (int n = 0; n < 60; ++n) out << n << ',' << (n % 10) / 10.0 << '\n';
  }
  REQUIRE(invoke({"sweep", "--corpus", dir / "c", "--scores", dir / "scores", "--thresholds", "0,0.5,0.9", "--out",
               dir / "s.csv"}) == 0);
  const auto rows = csv_rows(slurp(dir / "s.csv"));
  REQUIRE(rows.size() == 4);
  CHECK(rows[1][0] == "0");
  CHECK(rows[1][1] == "1");
}

TEST_CASE("calibrate prints a profile") {
  TempDir dir;
  REQUIRE(invoke({"simulate", "--n", "3", "--seed", "2", "--duration", "40", "--rooms", "delivery", "--out",
               dir / "c"}) == 0);
  REQUIRE(invoke({"calibrate", "--corpus", dir / "c", "--out", dir / "p.json"}) == 0);
  const auto p = nlohmann::json::parse(slurp(dir / "p.json"));
  CHECK(p["lower_offset"].get<double>() <= 0.0);
  CHECK(p["upper_offset"].get<double>() > 0.0);
  CHECK(std::fmod(p["upper_offset"].get<double>(), 2.5) == 0.0);
  // the profile file is accepted as a room profile override
  REQUIRE(invoke({"train", "--corpus", dir / "c", "--room-profile", dir / "p.json", "--out", dir / "m.json"}) == 0);
}

TEST_CASE("usage and data errors map to exit codes") {
  TempDir dir;
  CHECK(invoke({}) == cli::kUsage);
  CHECK(invoke({"bogus"}) == cli::kUsage);
  CHECK(invoke({"simulate", "--n", "0", "--out", dir / "x"}) == cli::kUsage);
  CHECK(invoke({"run", "--corpus", dir / "missing", "--model", dir / "m.json", "--out", dir / "r"}) == cli::kUsage);
  CHECK(invoke({"score", "--model", dir / "nope.json", "--video", dir / "v.thv", "--out", dir / "s"}) == cli::kUsage);
  CHECK(invoke({"run", "--corpus", dir / "c", "--norm", "zscore", "--out", dir / "r"}) == cli::kUsage);

  fs::create_directories(dir.path / "empty");
  std::ofstream(dir / "empty/manifest.json") << R"({"videos": []})";
  CHECK(invoke({"run", "--corpus", dir / "empty", "--scores", dir / "empty", "--out", dir / "r"}) == cli::kUsage);

  std::ofstream(dir / "bad.json") << "{ not json";
  fs::create_directories(dir.path / "one");
  std::ofstream(dir / "one/manifest.json") << R"({"videos": [{"id": "a", "video": "a.thv", "annotations": "a.json"}]})";
  CHECK(invoke({"run", "--corpus", dir / "one", "--model", dir / "bad.json", "--out", dir / "r"}) == cli::kDataError);
}

TEST_CASE_FIXTURE(Fixture, "a broken video is a partial failure") {
  std::ofstream(dir / "corpus/sim_001.thv", std::ios::trunc) << "garbage";
  CHECK(invoke({"run", "--corpus", dir / "corpus", "--model", dir / "model.json", "--out", dir / "r"}) ==
        cli::kPartialFailure);
  const auto report = nlohmann::json::parse(slurp(dir / "r/report.json"));
  CHECK(report["failed"].size() == 1);
  CHECK(report["failed"][0]["id"] == "sim_001");
  CHECK(report["per_video"].size() == 3);
}
