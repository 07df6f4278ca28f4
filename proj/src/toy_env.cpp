#include "georft/toy_env.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <random>

#include "georft/util.hpp"

namespace georft {

namespace {

constexpr std::array<std::string_view, kRelationCount> kRelationNames = {
    "any",     "leftmost", "rightmost", "topmost",
    "bottom-right-of", "largest", "smallest"};

struct DistributionParams {
  int canvas;
  int min_side;
  int max_side_base;
  int max_side_per_level;
  std::uint64_t stream;
  bool skew;
};

DistributionParams params_for(SceneDistribution d) {
  if (d == SceneDistribution::kShifted) {
    return {160, 12, 30, 6, 0x5eed0002ULL, true};
  }
  return {128, 8, 20, 5, 0x5eed0001ULL, false};
}

int uniform_int(std::mt19937_64& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

int object_count(int difficulty) {
  static constexpr std::array<int, kMaxDifficulty + 1> kCounts = {3, 5, 7, 9,
                                                                  12};
  return kCounts[static_cast<std::size_t>(difficulty)];
}

// Same-category instances must be strictly ordered under every relation so
// that each query has exactly one answer.
bool separable(const BBox& a, const BBox& b) {
  return std::fabs(a.center_x() - b.center_x()) >= 1.0 &&
         std::fabs(a.center_y() - b.center_y()) >= 1.0 &&
         std::fabs((a.center_x() + a.center_y()) -
                   (b.center_x() + b.center_y())) >= 1.0 &&
         std::fabs(a.area() - b.area()) >= 1.0;
}

double relation_key(const BBox& b, Relation r) {
  switch (r) {
    case Relation::kLeftmost:
      return b.center_x();
    case Relation::kRightmost:
      return -b.center_x();
    case Relation::kTopmost:
      return b.center_y();
    case Relation::kBottomRight:
      return -(b.center_x() + b.center_y());
    case Relation::kLargest:
      return -b.area();
    case Relation::kSmallest:
      return b.area();
    case Relation::kAny:
      return 0.0;
  }
  return 0.0;
}

std::vector<std::string> present_categories(const Scene& scene) {
  std::vector<std::string> cats;
  for (const auto& o : scene.objects) {
    if (std::find(cats.begin(), cats.end(), o.category) == cats.end()) {
      cats.push_back(o.category);
    }
  }
  return cats;
}

}  // namespace

const std::vector<std::string>& scene_categories() {
  static const std::vector<std::string> kCategories = {
      "airplane",        "airport",          "baseball field",
      "basketball court", "bridge",          "chimney",
      "dam",             "expressway service area",
      "expressway toll station", "golf field", "ground track field",
      "harbor",          "overpass",         "ship",
      "stadium",         "storage tank",     "tennis court",
      "train station",   "vehicle",          "windmill",
      "roundabout",      "swimming pool",    "helicopter",
      "container crane", "parking lot",      "building"};
  return kCategories;
}

std::string_view distribution_name(SceneDistribution d) {
  return d == SceneDistribution::kShifted ? "shifted" : "base";
}

std::optional<SceneDistribution> parse_distribution(std::string_view name) {
  if (name == "base") return SceneDistribution::kBase;
  if (name == "shifted") return SceneDistribution::kShifted;
  return std::nullopt;
}

Scene generate_scene(std::uint64_t seed, int difficulty,
                     SceneDistribution distribution,
                     const std::optional<std::string>& required_category) {
  difficulty = std::clamp(difficulty, 0, kMaxDifficulty);
  const auto p = params_for(distribution);
  std::mt19937_64 rng(mix_seed(seed, p.stream));
  const auto& all = scene_categories();

  const int n = object_count(difficulty);
  const int n_dup = difficulty;
  const int n_distinct = n - n_dup;

  // Distinct categories; the shifted twin favours the first half of the list.
  std::vector<std::string> pool = all;
  if (p.skew) {
    std::vector<double> keys(pool.size());
    for (std::size_t i = 0; i < pool.size(); ++i) {
      const double w = i < pool.size() / 2 ? 3.0 : 1.0;
      keys[i] = std::pow(uniform01(rng), 1.0 / w);
    }
    std::vector<std::size_t> order(pool.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) {
      return keys[a] > keys[b];
    });
    std::vector<std::string> sorted;
    for (auto i : order) sorted.push_back(pool[i]);
    pool = std::move(sorted);
  } else {
    std::shuffle(pool.begin(), pool.end(), rng);
  }
  std::vector<std::string> chosen(pool.begin(), pool.begin() + n_distinct);
  if (required_category &&
      std::find(chosen.begin(), chosen.end(), *required_category) ==
          chosen.end()) {
    chosen[0] = *required_category;
  }

  std::vector<std::string> labels = chosen;
  for (int d = 0; d < n_dup; ++d) {
    if (d == 0 && required_category && uniform01(rng) < 0.5) {
      labels.push_back(*required_category);
    } else {
      labels.push_back(chosen[static_cast<std::size_t>(
          uniform_int(rng, 0, n_distinct - 1))]);
    }
  }

  Scene scene;
  scene.width = p.canvas;
  scene.height = p.canvas;
  const int max_side =
      std::min(p.canvas / 2, p.max_side_base + p.max_side_per_level * difficulty);
  for (const auto& label : labels) {
    SceneObject obj;
    obj.category = label;
    obj.shape = uniform01(rng) < 0.5 ? Shape::kRect : Shape::kEllipse;
    for (int attempt = 0; attempt < 1000; ++attempt) {
      const int w = uniform_int(rng, p.min_side, max_side);
      const int h = uniform_int(rng, p.min_side, max_side);
      int x = uniform_int(rng, 0, p.canvas - w);
      const int y = uniform_int(rng, 0, p.canvas - h);
      if (p.skew) {
        // Shifted twin: objects crowd toward the right edge.
        x = p.canvas - w -
            static_cast<int>(std::floor(uniform01(rng) * uniform01(rng) *
                                        (p.canvas - w)));
      }
      obj.bbox = BBox{static_cast<double>(x), static_cast<double>(y),
                      static_cast<double>(x + w), static_cast<double>(y + h)};
      bool ok = true;
      for (const auto& other : scene.objects) {
        if (other.bbox == obj.bbox ||
            (other.category == obj.category &&
             !separable(other.bbox, obj.bbox))) {
          ok = false;
          break;
        }
      }
      if (ok) break;
    }
    scene.objects.push_back(obj);
  }

  for (auto& obj : scene.objects) {
    int rank = 0;
    for (const auto& other : scene.objects) {
      if (other.category == obj.category &&
          other.bbox.center_x() < obj.bbox.center_x()) {
        ++rank;
      }
    }
    obj.distractor_rank = rank;
  }
  return scene;
}

std::string_view relation_name(Relation r) {
  return kRelationNames[static_cast<std::size_t>(r)];
}

std::optional<Relation> parse_relation(std::string_view name) {
  for (std::size_t i = 0; i < kRelationNames.size(); ++i) {
    if (kRelationNames[i] == name) return static_cast<Relation>(i);
  }
  return std::nullopt;
}

bool satisfies_relation(const Scene& scene, std::size_t index, Relation r) {
  const auto& obj = scene.objects[index];
  if (r == Relation::kAny) return true;
  const double key = relation_key(obj.bbox, r);
  for (std::size_t j = 0; j < scene.objects.size(); ++j) {
    if (j == index || scene.objects[j].category != obj.category) continue;
    const double other = relation_key(scene.objects[j].bbox, r);
    if (other < key || (other == key && j < index)) return false;
  }
  return true;
}

std::vector<std::size_t> resolve_targets(const Scene& scene,
                                         const QuerySpec& query) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < scene.objects.size(); ++i) {
    const auto& cat = scene.objects[i].category;
    const bool named =
        query.task == Task::kOvd
            ? std::find(query.categories.begin(), query.categories.end(),
                        cat) != query.categories.end()
            : cat == query.category;
    if (!named) continue;
    if (query.task == Task::kOvd || query.relation == Relation::kAny ||
        satisfies_relation(scene, i, query.relation)) {
      out.push_back(i);
    }
  }
  return out;
}

std::string render_query_text(const QuerySpec& query) {
  if (query.task == Task::kOvd) {
    std::string list;
    for (std::size_t i = 0; i < query.categories.size(); ++i) {
      if (i > 0) list += ", ";
      list += query.categories[i];
    }
    return list;
  }
  const std::string& c = query.category;
  switch (query.relation) {
    case Relation::kAny:
      return query.task == Task::kGres ? "all of the " + c + " objects"
                                       : "the " + c;
    case Relation::kLeftmost:
      return "the leftmost " + c;
    case Relation::kRightmost:
      return "the rightmost " + c;
    case Relation::kTopmost:
      return "the topmost " + c;
    case Relation::kBottomRight:
      return "the " + c + " nearest the bottom-right of the image";
    case Relation::kLargest:
      return "the largest " + c;
    case Relation::kSmallest:
      return "the smallest " + c;
  }
  return c;
}

GroundTruth ground_truth_for(const Scene& scene, const QuerySpec& query,
                             const std::vector<std::size_t>& targets) {
  GroundTruth gt;
  gt.task = query.task;
  gt.width = scene.width;
  gt.height = scene.height;
  for (std::size_t t : targets) {
    const auto& obj = scene.objects[t];
    switch (query.task) {
      case Task::kRec:
        gt.rec_box = obj.bbox;
        break;
      case Task::kOvd:
        gt.ovd_items.push_back({obj.bbox, obj.category});
        break;
      case Task::kGres:
        gt.gres_masks.push_back(object_mask(obj, scene.width, scene.height));
        break;
    }
  }
  return gt;
}

Example make_example(const Scene& scene, std::uint64_t seed, Task task,
                     const ExampleOptions& options) {
  std::mt19937_64 rng(mix_seed(seed, 0xe8a3ULL));
  const auto present = present_categories(scene);
  Example ex;
  ex.query.task = task;
  std::string category =
      options.category
          ? *options.category
          : present[static_cast<std::size_t>(
                uniform_int(rng, 0, static_cast<int>(present.size()) - 1))];
  const std::size_t count = scene.count(category);

  switch (task) {
    case Task::kRec: {
      const int lo = count <= 1 ? 0 : 1;
      ex.query.relation = static_cast<Relation>(
          uniform_int(rng, lo, static_cast<int>(kRelationCount) - 1));
      break;
    }
    case Task::kOvd: {
      ex.query.relation = Relation::kAny;
      if (!options.category && uniform01(rng) < options.ovd_absent_rate) {
        const auto& all = scene_categories();
        std::vector<std::string> absent;
        for (const auto& c : all) {
          if (scene.count(c) == 0) absent.push_back(c);
        }
        if (!absent.empty()) {
          category = absent[static_cast<std::size_t>(
              uniform_int(rng, 0, static_cast<int>(absent.size()) - 1))];
        }
      }
      ex.query.categories = {category};
      if (present.size() > 1 && uniform01(rng) < 0.3) {
        std::string second = category;
        while (second == category) {
          second = present[static_cast<std::size_t>(
              uniform_int(rng, 0, static_cast<int>(present.size()) - 1))];
        }
        ex.query.categories.push_back(second);
      }
      break;
    }
    case Task::kGres: {
      if (count <= 1 || uniform01(rng) < 0.5) {
        ex.query.relation = Relation::kAny;
      } else {
        ex.query.relation = static_cast<Relation>(
            uniform_int(rng, 1, static_cast<int>(kRelationCount) - 1));
      }
      break;
    }
  }
  ex.query.category = category;
  if (ex.query.categories.empty()) ex.query.categories = {category};
  ex.query.text = render_query_text(ex.query);
  ex.targets = resolve_targets(scene, ex.query);
  ex.unique = task == Task::kOvd ? ex.targets.size() == 1 : count == 1;
  ex.gt = ground_truth_for(scene, ex.query, ex.targets);
  return ex;
}

BBox jitter_box(const BBox& box, Jitter jitter, int width, int height) {
  double dx = 0.0, dy = 0.0;
  switch (jitter) {
    case Jitter::kNone:
      return box;
    case Jitter::kLeft:
      dx = -0.1 * box.width();
      break;
    case Jitter::kRight:
      dx = 0.1 * box.width();
      break;
    case Jitter::kUp:
      dy = -0.1 * box.height();
      break;
    case Jitter::kDown:
      dy = 0.1 * box.height();
      break;
  }
  const double w = width, h = height;
  return BBox{std::clamp(box.x1 + dx, 0.0, w), std::clamp(box.y1 + dy, 0.0, h),
              std::clamp(box.x2 + dx, 0.0, w), std::clamp(box.y2 + dy, 0.0, h)};
}

std::vector<Candidate> candidates(const Scene& scene, const QuerySpec& query,
                                  std::size_t subset_cap) {
  std::vector<Candidate> out;
  const std::size_t n = scene.objects.size();
  if (query.task == Task::kRec) {
    out.reserve(n * kJitterCount);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < kJitterCount; ++j) {
        Candidate c;
        c.jitter = static_cast<Jitter>(j);
        c.objects = {i};
        c.answer = ParsedAnswer::rec(jitter_box(scene.objects[i].bbox, c.jitter,
                                                scene.width, scene.height));
        out.push_back(std::move(c));
      }
    }
    return out;
  }
  const std::uint64_t limit = std::uint64_t{1} << n;
  for (std::uint64_t mask = 0; mask < limit; ++mask) {
    if (static_cast<std::size_t>(std::popcount(mask)) > subset_cap) continue;
    Candidate c;
    std::vector<LabeledBox> boxes;
    std::vector<GresItem> items;
    for (std::size_t i = 0; i < n; ++i) {
      if (!(mask & (std::uint64_t{1} << i))) continue;
      const auto& obj = scene.objects[i];
      c.objects.push_back(i);
      boxes.push_back({obj.bbox, obj.category});
      items.push_back({obj.bbox, object_centroid(obj),
                       object_secondary_point(obj), false});
    }
    c.answer = query.task == Task::kOvd
                   ? ParsedAnswer::ovd(std::move(boxes), mask == 0)
                   : ParsedAnswer::gres(std::move(items), mask == 0);
    out.push_back(std::move(c));
  }
  return out;
}

std::optional<std::size_t> ground_truth_candidate(
    const std::vector<Candidate>& cands, const Example& example) {
  for (std::size_t i = 0; i < cands.size(); ++i) {
    const auto& c = cands[i];
    if (c.objects == example.targets &&
        (example.query.task != Task::kRec || c.jitter == Jitter::kNone)) {
      return i;
    }
  }
  return std::nullopt;
}

std::vector<double> candidate_features(const Scene& scene,
                                       const QuerySpec& query,
                                       const Candidate& candidate) {
  std::vector<double> f(kFeatureDim, 0.0);
  const double w = scene.width, h = scene.height;
  const std::size_t block = 2 + 4 * static_cast<std::size_t>(query.relation);
  for (std::size_t idx : candidate.objects) {
    const auto& obj = scene.objects[idx];
    const bool match =
        std::find(query.categories.begin(), query.categories.end(),
                  obj.category) != query.categories.end() ||
        obj.category == query.category;
    if (query.task != Task::kRec) f[0] += 1.0;
    f[1] += match ? 1.0 : 0.0;
    f[block + 0] += satisfies_relation(scene, idx, query.relation) ? 1.0 : 0.0;
    f[block + 1] += obj.bbox.center_x() / w;
    f[block + 2] += obj.bbox.center_y() / h;
    f[block + 3] += std::sqrt(obj.bbox.area() / (w * h));
  }
  if (query.task == Task::kRec) {
    f[2 + 4 * kRelationCount + static_cast<std::size_t>(candidate.jitter)] = 1.0;
  }
  return f;
}

}  // namespace georft
