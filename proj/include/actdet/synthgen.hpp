#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "actdet/bbox.hpp"
#include "actdet/clip_tensor.hpp"
#include "actdet/motionenc.hpp"
#include "actdet/scorer.hpp"
#include "actdet/tracklet.hpp"

namespace actdet {

const std::vector<std::string>& vehicle_activities();
const std::vector<std::string>& person_activities();
// Vehicle classes followed by person classes.
std::vector<std::string> all_activities();
ObjClass activity_object(const std::string& activity);

// One scripted actor. Positions are box centers in source-frame pixels.
// An empty activity marks a static distractor that gets a trajectory but no
// activity annotation.
struct ActorScript {
  int actor_id = 0;
  ObjClass obj_class = ObjClass::kVehicle;
  std::string activity;
  int start_frame = 0;
  int length = 1;
  double x0 = 0.0;
  double y0 = 0.0;
  double speed = 0.0;
  double heading = 0.0;  // radians, image coordinates (y down)
  int turn_sign = 1;     // u-turn direction
  double patch_x = 0.0;  // person texture offset inside its band
  double patch_y = 0.0;
  int phase = 0;         // person flicker phase

  int end_frame() const { return start_frame + length; }
};

struct SceneScript {
  std::string video_id = "video_000";
  std::uint64_t seed = 0;
  int width = 128;
  int height = 128;
  int frames = 160;
  double background = 0.35;
  double noise_sigma = 2.0 / 255.0;
  bool mirror_noise = false;  // read the noise field with x reversed
  std::vector<ActorScript> actors;
};

struct SpriteSize {
  double w;
  double h;
};
SpriteSize sprite_size(ObjClass c);

// Box centers of the actor for each of its frames.
std::vector<std::pair<double, double>> actor_path(const ActorScript& actor);

// Script of the horizontally mirrored world: x positions and headings are
// reflected, turn directions and turn labels swapped, noise read mirrored.
SceneScript mirror_script(const SceneScript& script);

struct ActorBox {
  int actor_id = 0;
  BBox box;
};

struct RenderedFrame {
  std::vector<float> pixels;  // row-major, values in [0, 1]
  std::vector<ActorBox> boxes;
};

// Background plus seeded Gaussian noise with every active sprite drawn at its
// scripted position. Boxes are the sprite bounds.
RenderedFrame render_frame(const SceneScript& script, int t);

struct RenderedScene {
  std::string video_id;
  ClipTensor frames;                 // T x H x W x 1, values in [0, 1]
  std::vector<ActorBox> detections;  // sorted by frame, then actor
  std::vector<GroundTruthActivity> truths;
};

RenderedScene render_scene(const SceneScript& script, const std::vector<std::string>& class_names);

// Adds seeded Gaussian jitter (pixels) to box corners and sizes.
std::vector<ActorBox> jitter_boxes(std::span<const ActorBox> boxes, double sigma, std::uint64_t seed);

// Randomized actor for `activity` that stays inside the frame for `length`
// frames starting at `start_frame`.
ActorScript random_actor(std::mt19937_64& rng, const std::string& activity, int length, int start_frame, int width,
                         int height);

// Single-actor clip used for classifier training and testing.
struct ClipScript {
  SceneScript scene;
  std::string label;
  bool train = true;
};

struct ClipDatasetConfig {
  std::vector<std::string> classes;
  int n_train = 200;
  int n_test = 100;
  int clip_len = 16;
  int width = 128;
  int height = 128;
  double noise_sigma = 2.0 / 255.0;
  std::uint64_t seed = 0;
};

// Balanced over classes (sample i takes class i mod N before shuffling).
std::vector<ClipScript> generate_clip_scripts(const ClipDatasetConfig& config);

struct ClipGeometry {
  int resized_h = 32;
  int resized_w = 32;
  double margin = 1.5;
  CropMode crop_mode = CropMode::kBoxFollowing;
};

// Renders the clip and cuts the classifier sample from its single actor.
MotionSample render_clip_sample(const ClipScript& script, const ClipGeometry& geometry);

struct SceneSetConfig {
  int n_videos = 3;
  int frames = 160;
  int width = 128;
  int height = 128;
  int actors_per_video = 8;
  int vehicle_len = 16;
  int person_len = 32;
  int first_activity_frame = 8;
  bool parked_scene = true;  // video 0 holds a parked vehicle from frame 0
  int burn_in = 100;         // activities in the parked scene start after this
  double noise_sigma = 2.0 / 255.0;
  double jitter = 0.0;
  std::uint64_t seed = 0;
};

std::vector<SceneScript> generate_scene_scripts(const SceneSetConfig& config);

// Identity purity of a tracking result: boxes in each trajectory that belong
// to its majority actor, over all boxes.
double identity_purity(std::span<const Trajectory> trajectories, std::span<const ActorBox> labeled);

}  // namespace actdet
