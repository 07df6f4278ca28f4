#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "georft/rewards.hpp"
#include "georft/scene.hpp"
#include "georft/structured_output.hpp"

namespace georft {

/// The 26 object categories used by the synthetic referring world.
const std::vector<std::string>& scene_categories();

inline constexpr int kMaxDifficulty = 4;

/// Base generator or the distribution-shifted twin used for zero-shot
/// cross-distribution evaluation (different canvas, sizes, placement and
/// category frequencies; disjoint seed stream).
enum class SceneDistribution { kBase, kShifted };

std::string_view distribution_name(SceneDistribution d);
std::optional<SceneDistribution> parse_distribution(std::string_view name);

/// Deterministic in (seed, difficulty, distribution, required_category).
/// Difficulty 0 gives three objects of distinct categories; every higher
/// level adds objects and same-category distractors.
Scene generate_scene(std::uint64_t seed, int difficulty,
                     SceneDistribution distribution = SceneDistribution::kBase,
                     const std::optional<std::string>& required_category = {});

enum class Relation {
  kAny,
  kLeftmost,
  kRightmost,
  kTopmost,
  kBottomRight,
  kLargest,
  kSmallest,
};

inline constexpr std::size_t kRelationCount = 7;

std::string_view relation_name(Relation r);
std::optional<Relation> parse_relation(std::string_view name);

struct QuerySpec {
  std::string text;
  // Primary category; OVD queries may list more in `categories`.
  std::string category;
  std::vector<std::string> categories;
  Relation relation = Relation::kAny;
  Task task = Task::kRec;

  friend bool operator==(const QuerySpec&, const QuerySpec&) = default;
};

/// Objects a query refers to, in scene order.
std::vector<std::size_t> resolve_targets(const Scene& scene,
                                         const QuerySpec& query);

/// Whether object `index` is the extremal instance of its own category
/// under the relation.
bool satisfies_relation(const Scene& scene, std::size_t index, Relation r);

std::string render_query_text(const QuerySpec& query);

struct Example {
  QuerySpec query;
  GroundTruth gt;
  std::vector<std::size_t> targets;
  bool unique = true;
};

struct ExampleOptions {
  std::optional<std::string> category;
  // Probability that an OVD query names a category absent from the scene
  // (only when no category is forced).
  double ovd_absent_rate = 0.1;
};

Example make_example(const Scene& scene, std::uint64_t seed, Task task,
                     const ExampleOptions& options = {});

/// Ground truth implied by a scene and its resolved targets.
GroundTruth ground_truth_for(const Scene& scene, const QuerySpec& query,
                             const std::vector<std::size_t>& targets);

/// Jitter applied to a REC candidate box.
enum class Jitter { kNone, kLeft, kRight, kUp, kDown };
inline constexpr std::size_t kJitterCount = 5;

struct Candidate {
  ParsedAnswer answer;
  // Scene objects the candidate refers to (one for REC, a subset otherwise).
  std::vector<std::size_t> objects;
  Jitter jitter = Jitter::kNone;
};

/// Shifts a box by 10% of its size in the jitter direction, clipped to the
/// canvas.
BBox jitter_box(const BBox& box, Jitter jitter, int width, int height);

/// Finite, deterministic answer space for a query. REC: every object box in
/// five jitter variants (object-major). OVD and GRES: every subset of
/// objects (bitmask order) of size at most `subset_cap`, the empty subset
/// rendered as "None".
std::vector<Candidate> candidates(const Scene& scene, const QuerySpec& query,
                                  std::size_t subset_cap = 12);

/// Index of the candidate equal to the ground truth; nullopt when the answer
/// space does not contain it.
std::optional<std::size_t> ground_truth_candidate(
    const std::vector<Candidate>& cands, const Example& example);

// Feature layout: [inclusion bias, category match,
//   per relation: (satisfied, center x, center y, sqrt area),
//   jitter one-hot].
inline constexpr std::size_t kFeatureDim = 2 + 4 * kRelationCount + kJitterCount;

std::vector<double> candidate_features(const Scene& scene,
                                       const QuerySpec& query,
                                       const Candidate& candidate);

}  // namespace georft
