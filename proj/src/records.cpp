#include "georft/records.hpp"

#include <fstream>
#include <random>
#include <set>

#include "georft/util.hpp"

namespace georft {

namespace {

template <typename T>
T required(const nlohmann::json& j, const char* key) {
  if (!j.contains(key)) {
    throw RecordError(std::string("missing field \"") + key + "\"");
  }
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw RecordError(std::string("field \"") + key + "\" has the wrong type");
  }
}

}  // namespace

nlohmann::json SceneRecord::to_json() const {
  nlohmann::json image_json;
  if (image.synthetic()) {
    image_json = {{"type", "synthetic"}, {"scene", image.scene->to_json()}};
  } else {
    image_json = {{"type", "file"}, {"path", image.path}};
  }
  nlohmann::json tgts = nlohmann::json::array();
  for (const auto& t : targets) {
    nlohmann::json tj = {{"bbox", box_to_json(t.bbox)}, {"label", t.label}};
    if (t.mask) tj["mask"] = t.mask->to_json();
    tgts.push_back(std::move(tj));
  }
  return {{"id", id},
          {"task", task_name(task)},
          {"image", image_json},
          {"query", query},
          {"category", category},
          {"categories", categories},
          {"relation", relation_name(relation)},
          {"unique", unique},
          {"targets", tgts}};
}

SceneRecord SceneRecord::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw RecordError("record must be a JSON object");
  SceneRecord r;
  r.id = required<std::string>(j, "id");
  const auto task = parse_task(required<std::string>(j, "task"));
  if (!task) throw RecordError("unknown task in record " + r.id);
  r.task = *task;
  if (!j.contains("image") || !j["image"].is_object()) {
    throw RecordError("record " + r.id + " needs an \"image\" object");
  }
  const auto& img = j["image"];
  const auto type = required<std::string>(img, "type");
  try {
    if (type == "synthetic") {
      r.image.scene = Scene::from_json(img.at("scene"));
    } else if (type == "file") {
      r.image.path = required<std::string>(img, "path");
    } else {
      throw RecordError("unknown image type \"" + type + "\"");
    }
  } catch (const GeometryError& e) {
    throw RecordError("record " + r.id + ": " + e.what());
  } catch (const nlohmann::json::exception& e) {
    throw RecordError("record " + r.id + ": bad scene: " + e.what());
  }
  r.query = required<std::string>(j, "query");
  r.category = required<std::string>(j, "category");
  r.categories = j.value("categories", std::vector<std::string>{r.category});
  const auto rel = parse_relation(j.value("relation", std::string("any")));
  if (!rel) throw RecordError("record " + r.id + ": unknown relation");
  r.relation = *rel;
  r.unique = required<bool>(j, "unique");
  if (!j.contains("targets") || !j["targets"].is_array()) {
    throw RecordError("record " + r.id + " needs a \"targets\" array");
  }
  for (const auto& t : j["targets"]) {
    RecordTarget target;
    try {
      target.bbox = box_from_json(t.at("bbox"));
      target.label = t.value("label", r.category);
      if (t.contains("mask")) target.mask = BinaryMask::from_json(t["mask"]);
    } catch (const GeometryError& e) {
      throw RecordError("record " + r.id + ": " + e.what());
    } catch (const nlohmann::json::exception& e) {
      throw RecordError("record " + r.id + ": bad target: " + e.what());
    }
    r.targets.push_back(std::move(target));
  }
  if (r.task == Task::kRec && r.targets.size() != 1) {
    throw RecordError("rec record " + r.id + " must have exactly one target");
  }
  if (r.task == Task::kGres) {
    for (const auto& t : r.targets) {
      if (!t.mask) {
        throw RecordError("gres record " + r.id + " has a target without mask");
      }
    }
  }
  return r;
}

SceneRecord make_record(std::string id, const Scene& scene,
                        const Example& example) {
  SceneRecord r;
  r.id = std::move(id);
  r.task = example.query.task;
  r.image.scene = scene;
  r.query = example.query.text;
  r.category = example.query.category;
  r.categories = example.query.categories;
  r.relation = example.query.relation;
  r.unique = example.unique;
  for (std::size_t t : example.targets) {
    const auto& obj = scene.objects[t];
    RecordTarget target{obj.bbox, obj.category, std::nullopt};
    if (r.task == Task::kGres) {
      target.mask = object_mask(obj, scene.width, scene.height);
    }
    r.targets.push_back(std::move(target));
  }
  return r;
}

LoadedExample load_example(const SceneRecord& record) {
  if (!record.image.synthetic()) {
    throw RecordError("record " + record.id +
                      " references an image file; only synthetic scenes can "
                      "be rolled out");
  }
  LoadedExample out;
  out.scene = *record.image.scene;
  auto& ex = out.example;
  ex.query.text = record.query;
  ex.query.category = record.category;
  ex.query.categories = record.categories;
  ex.query.relation = record.relation;
  ex.query.task = record.task;
  ex.unique = record.unique;
  ex.targets = resolve_targets(out.scene, ex.query);
  ex.gt.task = record.task;
  ex.gt.width = out.scene.width;
  ex.gt.height = out.scene.height;
  for (const auto& t : record.targets) {
    switch (record.task) {
      case Task::kRec:
        ex.gt.rec_box = t.bbox;
        break;
      case Task::kOvd:
        ex.gt.ovd_items.push_back({t.bbox, t.label});
        break;
      case Task::kGres:
        ex.gt.gres_masks.push_back(*t.mask);
        break;
    }
  }
  return out;
}

std::vector<SceneRecord> read_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw RecordError("cannot open " + path.string());
  std::vector<SceneRecord> records;
  std::set<std::string> ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = path.string() + ":" + std::to_string(line_no);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw RecordError(where + ": " + e.what());
    }
    try {
      records.push_back(SceneRecord::from_json(j));
    } catch (const RecordError& e) {
      throw RecordError(where + ": " + e.what());
    }
    if (!ids.insert(records.back().id).second) {
      throw RecordError(where + ": duplicate id \"" + records.back().id + "\"");
    }
  }
  return records;
}

void write_jsonl(const std::filesystem::path& path,
                 const std::vector<SceneRecord>& records) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw RecordError("cannot write " + path.string());
  for (const auto& r : records) out << r.to_json().dump() << '\n';
  if (!out) throw RecordError("write failed for " + path.string());
}

std::vector<SceneRecord> generate_records(const GenDataOptions& options) {
  const auto& cats = scene_categories();
  std::vector<SceneRecord> out;
  const std::pair<Task, std::size_t> plan[] = {{Task::kRec, options.counts.rec},
                                               {Task::kOvd, options.counts.ovd},
                                               {Task::kGres, options.counts.gres}};
  for (const auto& [task, count] : plan) {
    const std::string prefix(task_name(task));
    for (std::size_t i = 0; i < count; ++i) {
      const std::uint64_t seed =
          mix_seed(options.seed, fnv1a(prefix) + static_cast<std::uint64_t>(i));
      std::mt19937_64 rng(seed);
      const int difficulty = std::uniform_int_distribution<int>(
          0, std::clamp(options.difficulty, 0, kMaxDifficulty))(rng);
      const std::string& category = cats[i % cats.size()];
      const Scene scene =
          generate_scene(seed, difficulty, options.distribution, category);
      ExampleOptions ex_opts;
      ex_opts.category = category;
      const Example ex = make_example(scene, seed, task, ex_opts);
      char id[32];
      std::snprintf(id, sizeof(id), "%s-%06zu", prefix.c_str(), i);
      out.push_back(make_record(id, scene, ex));
    }
  }
  return out;
}

std::vector<SceneRecord> few_shot_records(const std::vector<SceneRecord>& pool,
                                          const FewShotConfig& cfg) {
  std::vector<ShotItem> items;
  items.reserve(pool.size());
  for (const auto& r : pool) {
    items.push_back({r.category, std::max<std::size_t>(r.targets.size(), 1)});
  }
  std::vector<SceneRecord> out;
  for (std::size_t idx : few_shot_sample(items, cfg)) out.push_back(pool[idx]);
  return out;
}

}  // namespace georft
