#include "actdet/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <tuple>

#include "actdet/errors.hpp"

namespace actdet {

const std::vector<std::string>& vehicle_activities() {
  static const std::vector<std::string> v{"vehicle_moves",       "vehicle_stops",       "vehicle_starts",
                                          "vehicle_turns_left", "vehicle_turns_right", "vehicle_u_turn"};
  return v;
}

const std::vector<std::string>& person_activities() {
  static const std::vector<std::string> v{"person_stands",         "person_walks",    "person_runs",
                                          "person_talks_on_phone", "person_gestures", "person_crouches"};
  return v;
}

std::vector<std::string> all_activities() {
  auto all = vehicle_activities();
  all.insert(all.end(), person_activities().begin(), person_activities().end());
  return all;
}

ObjClass activity_object(const std::string& activity) {
  const auto& v = vehicle_activities();
  if (std::find(v.begin(), v.end(), activity) != v.end()) return ObjClass::kVehicle;
  const auto& p = person_activities();
  if (std::find(p.begin(), p.end(), activity) != p.end()) return ObjClass::kPerson;
  throw ContractViolation("unknown activity '" + activity + "'");
}

SpriteSize sprite_size(ObjClass c) {
  return c == ObjClass::kVehicle ? SpriteSize{14.0, 10.0} : SpriteSize{12.0, 32.0};
}

namespace {

constexpr double kPi = std::numbers::pi;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double ramp(double k, double begin, double span) { return std::clamp((k - begin) / span, 0.0, 1.0); }

// Speed and heading of a vehicle on step k of an L-step activity.
std::pair<double, double> vehicle_motion(const ActorScript& a, int k) {
  const double L = a.length;
  double speed = a.speed;
  double heading = a.heading;
  if (a.activity == "vehicle_stops") {
    speed = a.speed * std::max(0.0, 1.0 - k / (0.6 * L));
  } else if (a.activity == "vehicle_starts") {
    speed = a.speed * ramp(k, 0.2 * L, 0.5 * L);
  } else if (a.activity == "vehicle_turns_left") {
    heading = a.heading - 0.5 * kPi * ramp(k, 0.2 * L, 0.6 * L);
  } else if (a.activity == "vehicle_turns_right") {
    heading = a.heading + 0.5 * kPi * ramp(k, 0.2 * L, 0.6 * L);
  } else if (a.activity == "vehicle_u_turn") {
    heading = a.heading + a.turn_sign * kPi * ramp(k, 0.2 * L, 0.6 * L);
  } else if (a.activity.empty()) {
    speed = 0.0;
  }
  return {speed, heading};
}

struct Paint {
  double x0, y0, x1, y1;  // sprite-local
  float value;
};

std::vector<Paint> sprite_paints(const ActorScript& a, int k) {
  const auto size = sprite_size(a.obj_class);
  std::vector<Paint> paints;
  if (a.obj_class == ObjClass::kVehicle) {
    paints.push_back({0.0, 0.0, size.w, size.h, 0.8f});
    paints.push_back({4.0, 3.0, size.w - 4.0, size.h - 3.0, 0.6f});
    return paints;
  }
  paints.push_back({0.0, 0.0, size.w, size.h, 0.65f});
  const double band = 0.5 * size.h;
  const int step = k + a.phase;
  const auto patch = [&](double band_offset, float value) {
    paints.push_back({a.patch_x, band_offset + a.patch_y, a.patch_x + 4.0, band_offset + a.patch_y + 4.0, value});
  };
  const float flicker = (step % 2 == 0) ? 1.0f : 0.35f;
  if (a.activity == "person_talks_on_phone") {
    patch(0.0, 1.0f);
  } else if (a.activity == "person_crouches") {
    patch(band, 1.0f);
  } else if (a.activity == "person_gestures") {
    patch(0.0, flicker);
  } else if (a.activity == "person_runs") {
    patch(band, flicker);
  } else if (a.activity == "person_walks") {
    const double offset = ((step / 4) % 2 == 0) ? 0.0 : band;
    paints.push_back({2.0, offset + 6.0, size.w - 2.0, offset + 9.0, 0.3f});
  }
  return paints;
}

// Anti-aliased fill of [x0, x1) x [y0, y1) by area coverage.
void paint_rect(std::vector<float>& img, int width, int height, double x0, double y0, double x1, double y1, float value) {
  const int c0 = std::max(0, static_cast<int>(std::floor(x0)));
  const int c1 = std::min(width, static_cast<int>(std::ceil(x1)));
  const int r0 = std::max(0, static_cast<int>(std::floor(y0)));
  const int r1 = std::min(height, static_cast<int>(std::ceil(y1)));
  for (int y = r0; y < r1; ++y) {
    const double cy = std::min<double>(y + 1, y1) - std::max<double>(y, y0);
    if (cy <= 0.0) continue;
    for (int x = c0; x < c1; ++x) {
      const double cx = std::min<double>(x + 1, x1) - std::max<double>(x, x0);
      if (cx <= 0.0) continue;
      const double cov = cx * cy;
      float& p = img[static_cast<std::size_t>(y) * width + x];
      p = static_cast<float>((1.0 - cov) * p + cov * value);
    }
  }
}

}  // namespace

std::vector<std::pair<double, double>> actor_path(const ActorScript& actor) {
  std::vector<std::pair<double, double>> path;
  path.reserve(static_cast<std::size_t>(actor.length));
  double x = actor.x0, y = actor.y0;
  for (int k = 0; k < actor.length; ++k) {
    path.emplace_back(x, y);
    if (actor.obj_class == ObjClass::kVehicle) {
      const auto [speed, heading] = vehicle_motion(actor, k);
      x += speed * std::cos(heading);
      y += speed * std::sin(heading);
    } else {
      x += actor.speed * std::cos(actor.heading);
      y += actor.speed * std::sin(actor.heading);
    }
  }
  return path;
}

SceneScript mirror_script(const SceneScript& script) {
  SceneScript m = script;
  m.mirror_noise = !script.mirror_noise;
  for (auto& a : m.actors) {
    a.x0 = script.width - a.x0;
    a.heading = kPi - a.heading;
    a.turn_sign = -a.turn_sign;
    a.activity = mirrored_label(a.activity);
    a.patch_x = sprite_size(a.obj_class).w - 4.0 - a.patch_x;
  }
  return m;
}

RenderedFrame render_frame(const SceneScript& script, int t) {
  if (t < 0 || t >= script.frames) throw ContractViolation("render_frame: frame " + std::to_string(t) + " out of range");
  const int W = script.width, H = script.height;
  RenderedFrame out;
  out.pixels.assign(static_cast<std::size_t>(W) * H, static_cast<float>(script.background));
  if (script.noise_sigma > 0.0) {
    std::mt19937_64 rng(splitmix64(script.seed ^ splitmix64(static_cast<std::uint64_t>(t) + 0x1234567ULL)));
    std::normal_distribution<double> noise(0.0, script.noise_sigma);
    for (int y = 0; y < H; ++y) {
      for (int x = 0; x < W; ++x) {
        const int xx = script.mirror_noise ? W - 1 - x : x;
        out.pixels[static_cast<std::size_t>(y) * W + xx] += static_cast<float>(noise(rng));
      }
    }
  }
  for (const auto& a : script.actors) {
    if (t < a.start_frame || t >= a.end_frame()) continue;
    const int k = t - a.start_frame;
    const auto path = actor_path(a);
    const auto [cx, cy] = path[static_cast<std::size_t>(k)];
    const auto size = sprite_size(a.obj_class);
    const double left = cx - 0.5 * size.w, top = cy - 0.5 * size.h;
    for (const auto& p : sprite_paints(a, k)) {
      paint_rect(out.pixels, W, H, left + p.x0, top + p.y0, left + p.x1, top + p.y1, p.value);
    }
    BBox b;
    b.frame = t;
    b.x = left;
    b.y = top;
    b.w = size.w;
    b.h = size.h;
    b.score = 1.0;
    b.obj_class = a.obj_class;
    out.boxes.push_back({a.actor_id, b});
  }
  for (auto& p : out.pixels) p = std::clamp(p, 0.0f, 1.0f);
  return out;
}

RenderedScene render_scene(const SceneScript& script, const std::vector<std::string>& class_names) {
  RenderedScene scene;
  scene.video_id = script.video_id;
  scene.frames = ClipTensor(script.frames, script.height, script.width, 1);
  scene.frames.channel_names = {"gray"};
  scene.frames.value_scale = "[0,1]";
  const std::size_t plane = static_cast<std::size_t>(script.width) * script.height;
  for (int t = 0; t < script.frames; ++t) {
    auto frame = render_frame(script, t);
    std::copy(frame.pixels.begin(), frame.pixels.end(),
              scene.frames.data().begin() + static_cast<std::ptrdiff_t>(plane * static_cast<std::size_t>(t)));
    std::sort(frame.boxes.begin(), frame.boxes.end(),
              [](const ActorBox& a, const ActorBox& b) { return a.actor_id < b.actor_id; });
    scene.detections.insert(scene.detections.end(), frame.boxes.begin(), frame.boxes.end());
  }
  for (const auto& a : script.actors) {
    if (a.activity.empty()) continue;
    const auto it = std::find(class_names.begin(), class_names.end(), a.activity);
    if (it == class_names.end()) throw ContractViolation("activity '" + a.activity + "' missing from the label map");
    scene.truths.push_back({script.video_id, static_cast<int>(it - class_names.begin()), a.start_frame,
                            std::min(a.end_frame(), script.frames), a.actor_id});
  }
  return scene;
}

std::vector<ActorBox> jitter_boxes(std::span<const ActorBox> boxes, double sigma, std::uint64_t seed) {
  std::vector<ActorBox> out(boxes.begin(), boxes.end());
  if (sigma <= 0.0) return out;
  std::mt19937_64 rng(splitmix64(seed));
  std::normal_distribution<double> n(0.0, sigma);
  for (auto& ab : out) {
    ab.box.x += n(rng);
    ab.box.y += n(rng);
    ab.box.w = std::max(1.0, ab.box.w + n(rng));
    ab.box.h = std::max(1.0, ab.box.h + n(rng));
  }
  return out;
}

ActorScript random_actor(std::mt19937_64& rng, const std::string& activity, int length, int start_frame, int width,
                         int height) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ActorScript a;
  a.obj_class = activity.empty() ? ObjClass::kVehicle : activity_object(activity);
  a.activity = activity;
  a.length = length;
  a.start_frame = start_frame;
  const auto size = sprite_size(a.obj_class);

  if (a.obj_class == ObjClass::kVehicle) {
    a.speed = activity.empty() ? 0.0 : 2.0 + 0.6 * u(rng);
    a.heading = (u(rng) < 0.5 ? 0.0 : kPi) + 0.2 * (u(rng) - 0.5);
    a.turn_sign = u(rng) < 0.5 ? -1 : 1;
  } else {
    a.speed = activity == "person_walks" ? 0.5 : 0.0;
    a.heading = u(rng) < 0.5 ? 0.0 : kPi;
    a.patch_x = 1.0 + u(rng) * (size.w - 6.0);
    a.patch_y = 2.0 + u(rng) * 8.0;
    a.phase = static_cast<int>(u(rng) * 8.0);
  }

  // Shrink the speed until the whole path fits inside the frame.
  const double pad = 4.0;
  for (int attempt = 0; attempt < 64; ++attempt) {
    a.x0 = 0.0;
    a.y0 = 0.0;
    const auto path = actor_path(a);
    double minx = 0, maxx = 0, miny = 0, maxy = 0;
    for (const auto& [x, y] : path) {
      minx = std::min(minx, x);
      maxx = std::max(maxx, x);
      miny = std::min(miny, y);
      maxy = std::max(maxy, y);
    }
    const double lox = pad + 0.5 * size.w - minx, hix = width - pad - 0.5 * size.w - maxx;
    const double loy = pad + 0.5 * size.h - miny, hiy = height - pad - 0.5 * size.h - maxy;
    if (lox <= hix && loy <= hiy) {
      a.x0 = lox + u(rng) * (hix - lox);
      a.y0 = loy + u(rng) * (hiy - loy);
      return a;
    }
    a.speed *= 0.9;
  }
  throw ContractViolation("random_actor: cannot fit '" + activity + "' inside the frame");
}

std::vector<ClipScript> generate_clip_scripts(const ClipDatasetConfig& config) {
  if (config.classes.empty()) throw ContractViolation("generate_clip_scripts: no classes");
  for (const auto& c : config.classes) (void)activity_object(c);
  std::mt19937_64 rng(splitmix64(config.seed ^ 0xc11bULL));
  const int total = config.n_train + config.n_test;
  std::vector<ClipScript> out;
  out.reserve(static_cast<std::size_t>(total));
  for (int i = 0; i < total; ++i) {
    const bool train = i < config.n_train;
    const int index_in_split = train ? i : i - config.n_train;
    const auto& label = config.classes[static_cast<std::size_t>(index_in_split) % config.classes.size()];
    ClipScript cs;
    cs.label = label;
    cs.train = train;
    cs.scene.video_id = (train ? "train_" : "test_") + std::to_string(index_in_split);
    cs.scene.seed = splitmix64(config.seed + 0x100000ULL * static_cast<std::uint64_t>(i + 1));
    cs.scene.width = config.width;
    cs.scene.height = config.height;
    cs.scene.frames = config.clip_len;
    cs.scene.noise_sigma = config.noise_sigma;
    ActorScript a = random_actor(rng, label, config.clip_len, 0, config.width, config.height);
    a.actor_id = 0;
    cs.scene.actors.push_back(a);
    out.push_back(std::move(cs));
  }
  // Shuffle within each split so class order carries no information.
  auto mid = out.begin() + config.n_train;
  std::shuffle(out.begin(), mid, rng);
  std::shuffle(mid, out.end(), rng);
  return out;
}

MotionSample render_clip_sample(const ClipScript& script, const ClipGeometry& geometry) {
  const auto scene = render_scene(script.scene, {script.label});
  Trajectory traj;
  traj.track_id = 0;
  traj.obj_class = script.scene.actors.front().obj_class;
  for (const auto& ab : scene.detections) traj.boxes.push_back(ab.box);
  ProposalConfig pc;
  pc.clip_len = script.scene.frames;
  pc.stride = script.scene.frames;
  pc.margin = geometry.margin;
  pc.resized_h = geometry.resized_h;
  pc.resized_w = geometry.resized_w;
  const auto proposals = make_proposals(traj, pc, script.scene.width, script.scene.height);
  return build_sample(scene.frames, proposals.front(), geometry.crop_mode, geometry.margin, script.label);
}

namespace {

bool boxes_clash(const BBox& a, const BBox& b, double gap) {
  return a.x - gap < b.right() && b.x - gap < a.right() && a.y - gap < b.bottom() && b.y - gap < a.bottom();
}

std::vector<BBox> actor_boxes(const ActorScript& a) {
  const auto size = sprite_size(a.obj_class);
  std::vector<BBox> boxes;
  const auto path = actor_path(a);
  for (int k = 0; k < a.length; ++k) {
    BBox b;
    b.frame = a.start_frame + k;
    b.x = path[static_cast<std::size_t>(k)].first - 0.5 * size.w;
    b.y = path[static_cast<std::size_t>(k)].second - 0.5 * size.h;
    b.w = size.w;
    b.h = size.h;
    boxes.push_back(b);
  }
  return boxes;
}

bool clashes(const ActorScript& candidate, const std::vector<ActorScript>& placed) {
  const auto mine = actor_boxes(candidate);
  for (const auto& other : placed) {
    if (candidate.end_frame() <= other.start_frame || other.end_frame() <= candidate.start_frame) continue;
    const auto theirs = actor_boxes(other);
    for (const auto& b : mine) {
      const int k = b.frame - other.start_frame;
      if (k < 0 || k >= other.length) continue;
      if (boxes_clash(b, theirs[static_cast<std::size_t>(k)], 6.0)) return true;
    }
  }
  return false;
}

}  // namespace

std::vector<SceneScript> generate_scene_scripts(const SceneSetConfig& config) {
  if (config.n_videos < 1) throw ContractViolation("generate_scene_scripts: need at least one video");
  std::mt19937_64 rng(splitmix64(config.seed ^ 0x5ce7eULL));
  auto classes = all_activities();
  std::shuffle(classes.begin(), classes.end(), rng);
  std::size_t next_class = 0;

  std::vector<SceneScript> scenes;
  for (int v = 0; v < config.n_videos; ++v) {
    SceneScript s;
    char name[32];
    std::snprintf(name, sizeof name, "video_%03d", v);
    s.video_id = name;
    s.seed = splitmix64(config.seed + 0x9000ULL * static_cast<std::uint64_t>(v + 1));
    s.width = config.width;
    s.height = config.height;
    s.frames = config.frames;
    s.noise_sigma = config.noise_sigma;

    int first = config.first_activity_frame;
    int actors = config.actors_per_video;
    if (v == 0 && config.parked_scene) {
      ActorScript parked = random_actor(rng, "", config.frames, 0, config.width, config.height);
      parked.actor_id = 0;
      s.actors.push_back(parked);
      first = std::max(first, config.burn_in);
      actors = std::max(1, actors / 2);
      // The first scripted actor here is a moving vehicle, so the scene
      // always holds one next to the parked one.
      for (std::size_t k = 0; k < classes.size(); ++k) {
        const std::size_t j = (next_class + k) % classes.size();
        if (activity_object(classes[j]) == ObjClass::kVehicle) {
          std::swap(classes[next_class % classes.size()], classes[j]);
          break;
        }
      }
    }
    for (int i = 0; i < actors; ++i) {
      const std::string activity = classes[next_class % classes.size()];
      const int len = activity_object(activity) == ObjClass::kVehicle ? config.vehicle_len : config.person_len;
      if (first + len > config.frames) continue;
      bool placed = false;
      for (int attempt = 0; attempt < 200 && !placed; ++attempt) {
        std::uniform_int_distribution<int> start(first, config.frames - len);
        ActorScript a = random_actor(rng, activity, len, start(rng), config.width, config.height);
        a.actor_id = static_cast<int>(s.actors.size());
        if (!clashes(a, s.actors)) {
          s.actors.push_back(a);
          placed = true;
        }
      }
      if (placed) ++next_class;
    }
    scenes.push_back(std::move(s));
  }
  return scenes;
}

double identity_purity(std::span<const Trajectory> trajectories, std::span<const ActorBox> labeled) {
  std::map<std::tuple<int, double, double, double, double>, int> owner;
  for (const auto& ab : labeled) owner[{ab.box.frame, ab.box.x, ab.box.y, ab.box.w, ab.box.h}] = ab.actor_id;
  long majority_total = 0, total = 0;
  for (const auto& t : trajectories) {
    std::map<int, int> counts;
    for (const auto& b : t.boxes) {
      const auto it = owner.find({b.frame, b.x, b.y, b.w, b.h});
      ++counts[it == owner.end() ? -1 : it->second];
    }
    int best = 0;
    for (const auto& [id, n] : counts) {
      if (id >= 0) best = std::max(best, n);
    }
    majority_total += best;
    total += t.length();
  }
  return total == 0 ? 1.0 : static_cast<double>(majority_total) / static_cast<double>(total);
}

}  // namespace actdet
