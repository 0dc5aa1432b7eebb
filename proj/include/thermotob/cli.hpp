#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "thermotob/pipeline.hpp"

namespace thermotob::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kDataError = 2, kPartialFailure = 3 };

// Corpus directory written by `simulate`: manifest.json plus, per video,
// <id>.thv, <id>.annotations.json and optionally <id>.scenario.json and
// <id>.truth.json.
struct ManifestEntry {
  std::string id;
  std::string video;
  std::string annotations;
};

struct Manifest {
  std::filesystem::path root;
  std::vector<ManifestEntry> videos;
};

Manifest load_manifest(const std::filesystem::path& dir);
Corpus manifest_corpus(const Manifest& manifest);

// Named profile ("delivery", "theatre") or a JSON file with lower_offset and
// upper_offset.
RoomProfile resolve_room_profile(const std::string& spec);

// Full command line, argv[0] included. Returns the process exit code.
int run(int argc, const char* const* argv);
int run(const std::vector<std::string>& args);

}  // namespace thermotob::cli
