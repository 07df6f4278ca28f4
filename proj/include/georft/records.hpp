#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "georft/evalkit.hpp"
#include "georft/toy_env.hpp"

namespace georft {

class RecordError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RecordTarget {
  BBox bbox;
  std::string label;
  std::optional<BinaryMask> mask;

  friend bool operator==(const RecordTarget&, const RecordTarget&) = default;
};

/// Either an inline synthetic scene or a reference to an image file.
struct ImageRef {
  std::optional<Scene> scene;
  std::string path;

  bool synthetic() const { return scene.has_value(); }

  friend bool operator==(const ImageRef&, const ImageRef&) = default;
};

/// One dataset line: image, query, task and ground-truth targets.
struct SceneRecord {
  std::string id;
  Task task = Task::kRec;
  ImageRef image;
  std::string query;
  std::string category;
  std::vector<std::string> categories;
  Relation relation = Relation::kAny;
  bool unique = true;
  std::vector<RecordTarget> targets;

  nlohmann::json to_json() const;
  /// Throws RecordError on schema violations.
  static SceneRecord from_json(const nlohmann::json& j);

  friend bool operator==(const SceneRecord&, const SceneRecord&) = default;
};

SceneRecord make_record(std::string id, const Scene& scene,
                        const Example& example);

/// Scene and example reconstructed from a synthetic record.
struct LoadedExample {
  Scene scene;
  Example example;
};

LoadedExample load_example(const SceneRecord& record);

/// Throws RecordError (with path and line) on I/O or schema problems and on
/// duplicate ids.
std::vector<SceneRecord> read_jsonl(const std::filesystem::path& path);
void write_jsonl(const std::filesystem::path& path,
                 const std::vector<SceneRecord>& records);

struct TaskCounts {
  std::size_t rec = 0;
  std::size_t ovd = 0;
  std::size_t gres = 0;
};

struct GenDataOptions {
  std::uint64_t seed = 0;
  // Per-record difficulty is drawn uniformly from [0, difficulty].
  int difficulty = kMaxDifficulty;
  TaskCounts counts;
  SceneDistribution distribution = SceneDistribution::kBase;
};

/// Record i of a task queries category i mod 26, so N records per task give
/// an even per-category split when N is a multiple of 26.
std::vector<SceneRecord> generate_records(const GenDataOptions& options);

/// Few-shot subset of a pool; each record contributes one shot per target
/// (at least one).
std::vector<SceneRecord> few_shot_records(const std::vector<SceneRecord>& pool,
                                          const FewShotConfig& cfg);

}  // namespace georft
