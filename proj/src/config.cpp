#include "actdet/config.hpp"

#include <algorithm>
#include <limits>
#include <set>

#include "actdet/errors.hpp"
#include "actdet/jsonl.hpp"

namespace actdet {

namespace {

using nlohmann::json;

// Walks one JSON object, remembering which keys were consumed so leftovers
// can be reported.
class Reader {
 public:
  Reader(const json* j, std::string path) : j_(j), path_(std::move(path)) {
    if (j_ && !j_->is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
  }

  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  template <typename T>
  bool get(const std::string& key, T& out) {
    if (!j_ || !j_->contains(key)) return false;
    seen_.insert(key);
    try {
      out = j_->at(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(field(key), std::string("wrong type (") + e.what() + ")");
    }
    return true;
  }

  template <typename T>
  void number(const std::string& key, T& out, T lo, T hi) {
    const json* v = j_ && j_->contains(key) ? &j_->at(key) : nullptr;
    if (v && !v->is_number()) throw ConfigError(field(key), "expected a number");
    if constexpr (std::is_integral_v<T>) {
      if (v && !v->is_number_integer()) throw ConfigError(field(key), "expected an integer");
    }
    get(key, out);
    if (!(out >= lo && out <= hi)) {
      throw ConfigError(field(key), "value " + json(out).dump() + " outside [" + json(lo).dump() + ", " +
                                        json(hi).dump() + "]");
    }
  }

  void boolean(const std::string& key, bool& out) {
    if (j_ && j_->contains(key) && !j_->at(key).is_boolean()) throw ConfigError(field(key), "expected a boolean");
    get(key, out);
  }

  template <typename Fn>
  void choice(const std::string& key, Fn&& parse) {
    std::string s;
    if (!get(key, s)) return;
    try {
      parse(s);
    } catch (const ContractViolation& e) {
      throw ConfigError(field(key), e.what());
    }
  }

  Reader child(const std::string& key) {
    if (!j_ || !j_->contains(key)) return Reader(nullptr, field(key));
    seen_.insert(key);
    return Reader(&j_->at(key), field(key));
  }

  const json* raw(const std::string& key) {
    if (!j_ || !j_->contains(key)) return nullptr;
    seen_.insert(key);
    return &j_->at(key);
  }

  void finish() const {
    if (!j_) return;
    for (const auto& [key, value] : j_->items()) {
      if (!seen_.contains(key)) throw ConfigError(field(key), "unknown key");
    }
  }

 private:
  const json* j_;
  std::string path_;
  std::set<std::string> seen_;
};

constexpr double kInf = 1e300;

void read_path(Reader r, ClassifierPathConfig& p) {
  r.choice("mode", [&](const std::string& s) { p.mode = head_mode_from_string(s); });
  r.choice("input", [&](const std::string& s) { p.input = input_mode_from_string(s); });
  r.finish();
}

json path_to_json(const ClassifierPathConfig& p) {
  return {{"mode", to_string(p.mode)}, {"input", to_string(p.input)}};
}

std::string crop_mode_name(CropMode m) { return m == CropMode::kUnion ? "union" : "box_following"; }

}  // namespace

PipelineConfig config_from_json(const json& j) {
  PipelineConfig c;
  Reader root(&j, "");
  root.number<std::uint64_t>("seed", c.seed, 0, std::numeric_limits<std::uint64_t>::max());
  root.number("jobs", c.jobs, 1, 256);
  root.get("out_dir", c.out_dir);
  if (c.out_dir.empty()) throw ConfigError("out_dir", "must not be empty");

  {
    Reader r = root.child("scenes");
    auto& s = c.scenes;
    r.number("n_videos", s.n_videos, 1, 1000);
    r.number("frames", s.frames, 2, 100000);
    r.number("width", s.width, 16, 4096);
    r.number("height", s.height, 16, 4096);
    r.number("actors_per_video", s.actors_per_video, 0, 64);
    r.number("vehicle_len", s.vehicle_len, 2, 100000);
    r.number("person_len", s.person_len, 2, 100000);
    r.number("first_activity_frame", s.first_activity_frame, 1, 100000);
    r.boolean("parked_scene", s.parked_scene);
    r.number("burn_in", s.burn_in, 0, 100000);
    r.number("noise_sigma", s.noise_sigma, 0.0, 1.0);
    r.number("jitter", s.jitter, 0.0, 100.0);
    r.finish();
  }
  {
    Reader r = root.child("training_data");
    r.number("n_train", c.training_data.n_train, 1, 1000000);
    r.number("n_test", c.training_data.n_test, 0, 1000000);
    r.finish();
  }
  {
    Reader r = root.child("tracker");
    r.number("iou_min", c.tracker.iou_min, 0.0, 1.0);
    r.number("min_track_len", c.tracker.min_track_len, 1, 100000);
    r.finish();
  }
  {
    Reader r = root.child("proposals");
    auto& p = c.proposals;
    r.number("clip_len", p.clip_len, 2, 4096);
    r.number("stride", p.stride, 1, 4096);
    if (p.stride > p.clip_len) throw ConfigError("proposals.stride", "must not exceed clip_len");
    r.number("margin", p.margin, 1.0, 10.0);
    r.number("resized_h", p.resized_h, 4, 1024);
    r.number("resized_w", p.resized_w, 4, 1024);
    r.choice("crop_mode", [&](const std::string& s) {
      if (s == "union") {
        c.crop_mode = CropMode::kUnion;
      } else if (s == "box_following") {
        c.crop_mode = CropMode::kBoxFollowing;
      } else {
        throw ContractViolation("expected 'union' or 'box_following'");
      }
    });
    r.finish();
  }
  {
    Reader r = root.child("background");
    auto& m = c.background.mixture;
    r.number("max_components", m.max_components, 1, 16);
    r.number("learning_rate", m.learning_rate, 1e-9, 1.0 - 1e-9);
    r.number("match_sigmas", m.match_sigmas, 0.1, 100.0);
    r.number("background_ratio", m.background_ratio, 0.0, 1.0);
    r.number("init_weight", m.init_weight, 1e-9, 1.0);
    r.number("init_variance", m.init_variance, 1e-6, 1e9);
    r.number("min_variance", m.min_variance, 1e-9, 1e9);
    r.number("max_variance", m.max_variance, 1e-9, 1e9);
    if (m.min_variance > m.max_variance) throw ConfigError("background.min_variance", "exceeds max_variance");
    r.number("median_kernel", c.background.median_kernel, 1, 99);
    if (c.background.median_kernel % 2 == 0) throw ConfigError("background.median_kernel", "must be odd");
    r.number("person_threshold", c.background.thresholds.person, 0.0, 1.0);
    r.number("vehicle_threshold", c.background.thresholds.vehicle, 0.0, 1.0);
    r.boolean("save_masks", c.background.save_masks);
    r.finish();
  }
  {
    Reader r = root.child("classifier");
    auto& k = c.classifier;
    r.number("lr", k.lr, 0.0, 10.0);
    r.number("momentum", k.momentum, 0.0, 0.999999);
    r.number("epochs", k.epochs, 0, 100000);
    r.number("batch", k.batch, 1, 100000);
    r.boolean("flip_augment", k.flip_augment);
    r.number("motion_scale", k.motion_scale, 1e-6, 1e6);
    read_path(r.child("person"), k.person);
    read_path(r.child("vehicle"), k.vehicle);
    if (const json* convs = r.raw("convs")) {
      if (!convs->is_array() || convs->empty()) throw ConfigError("classifier.convs", "expected a non-empty array");
      k.convs.clear();
      for (std::size_t i = 0; i < convs->size(); ++i) {
        Reader cr(&(*convs)[i], "classifier.convs[" + std::to_string(i) + "]");
        ConvSpec spec;
        cr.number("out_channels", spec.out_channels, 1, 4096);
        std::vector<int> stride{1, 1, 1};
        if (cr.get("stride", stride) && (stride.size() != 3 || *std::min_element(stride.begin(), stride.end()) < 1)) {
          throw ConfigError(cr.field("stride"), "expected three positive integers");
        }
        spec.stride = {stride[0], stride[1], stride[2]};
        cr.finish();
        k.convs.push_back(spec);
      }
    }
    r.finish();
  }
  {
    Reader r = root.child("refiner");
    std::vector<double> levels;
    if (r.get("levels", levels)) {
      if (levels.empty()) throw ConfigError("refiner.levels", "must not be empty");
      for (const double v : levels) {
        if (!(v > 0.0 && v < 1.0)) throw ConfigError("refiner.levels", "values must lie in (0, 1)");
      }
      c.refiner.levels = levels;
    }
    r.number("nms_tiou", c.refiner.nms_tiou, 1e-9, 1.0 - 1e-9);
    r.finish();
  }
  {
    Reader r = root.child("scorer");
    r.number("tiou_min", c.scorer_tiou, 0.0, 1.0);
    r.number("tfa_limit", c.tfa_limit, 1e-9, kInf);
    r.choice("interpolation", [&](const std::string& s) {
      if (s == "step") {
        c.interpolation = Interpolation::kStep;
      } else if (s == "trapezoid") {
        c.interpolation = Interpolation::kTrapezoid;
      } else {
        throw ContractViolation("expected 'step' or 'trapezoid'");
      }
    });
    r.boolean("det_csv", c.det_csv);
    r.finish();
  }
  root.finish();
  return c;
}

json config_to_json(const PipelineConfig& c) {
  json convs = json::array();
  for (const auto& s : c.classifier.convs) convs.push_back({{"out_channels", s.out_channels}, {"stride", s.stride}});
  const auto& m = c.background.mixture;
  return {
      {"seed", c.seed},
      {"jobs", c.jobs},
      {"out_dir", c.out_dir},
      {"scenes",
       {{"n_videos", c.scenes.n_videos},
        {"frames", c.scenes.frames},
        {"width", c.scenes.width},
        {"height", c.scenes.height},
        {"actors_per_video", c.scenes.actors_per_video},
        {"vehicle_len", c.scenes.vehicle_len},
        {"person_len", c.scenes.person_len},
        {"first_activity_frame", c.scenes.first_activity_frame},
        {"parked_scene", c.scenes.parked_scene},
        {"burn_in", c.scenes.burn_in},
        {"noise_sigma", c.scenes.noise_sigma},
        {"jitter", c.scenes.jitter}}},
      {"training_data", {{"n_train", c.training_data.n_train}, {"n_test", c.training_data.n_test}}},
      {"tracker", {{"iou_min", c.tracker.iou_min}, {"min_track_len", c.tracker.min_track_len}}},
      {"proposals",
       {{"clip_len", c.proposals.clip_len},
        {"stride", c.proposals.stride},
        {"margin", c.proposals.margin},
        {"resized_h", c.proposals.resized_h},
        {"resized_w", c.proposals.resized_w},
        {"crop_mode", crop_mode_name(c.crop_mode)}}},
      {"background",
       {{"max_components", m.max_components},
        {"learning_rate", m.learning_rate},
        {"match_sigmas", m.match_sigmas},
        {"background_ratio", m.background_ratio},
        {"init_weight", m.init_weight},
        {"init_variance", m.init_variance},
        {"min_variance", m.min_variance},
        {"max_variance", m.max_variance},
        {"median_kernel", c.background.median_kernel},
        {"person_threshold", c.background.thresholds.person},
        {"vehicle_threshold", c.background.thresholds.vehicle},
        {"save_masks", c.background.save_masks}}},
      {"classifier",
       {{"lr", c.classifier.lr},
        {"momentum", c.classifier.momentum},
        {"epochs", c.classifier.epochs},
        {"batch", c.classifier.batch},
        {"flip_augment", c.classifier.flip_augment},
        {"motion_scale", c.classifier.motion_scale},
        {"person", path_to_json(c.classifier.person)},
        {"vehicle", path_to_json(c.classifier.vehicle)},
        {"convs", convs}}},
      {"refiner", {{"levels", c.refiner.levels}, {"nms_tiou", c.refiner.nms_tiou}}},
      {"scorer",
       {{"tiou_min", c.scorer_tiou},
        {"tfa_limit", c.tfa_limit},
        {"interpolation", c.interpolation == Interpolation::kStep ? "step" : "trapezoid"},
        {"det_csv", c.det_csv}}},
  };
}

PipelineConfig load_config(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw ConfigError("<file>", std::string("invalid JSON: ") + e.what());
  }
  return config_from_json(j);
}

std::uint64_t stage_seed(std::uint64_t seed, const std::string& stage) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (const unsigned char ch : stage) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  std::uint64_t x = seed ^ h;
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace actdet
