#include "actdet/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <limits>
#include <map>
#include <sstream>
#include <thread>

#include "actdet/errors.hpp"
#include "actdet/jsonl.hpp"

namespace actdet {

namespace fs = std::filesystem;

namespace {

// Runs fn(i) for i in [0, n) on up to `jobs` threads. Callers write results
// into slot i, so the outcome does not depend on scheduling.
template <typename Fn>
void parallel_for(std::size_t n, int jobs, Fn&& fn) {
  const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, jobs)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(n);
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < n; i += workers) {
        try {
          fn(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

void log(const std::string& msg) { std::clog << "[actdet] " << msg << '\n'; }

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

struct VideoInfo {
  std::string id;
  int frames = 0;
  int width = 0;
  int height = 0;
};

std::vector<VideoInfo> read_manifest(const RunLayout& layout) {
  Json j;
  try {
    j = Json::parse(read_file(layout.scenes / "manifest.json"));
  } catch (const Json::exception& e) {
    throw InvariantBreach("scenes/manifest.json is malformed: " + std::string(e.what()));
  }
  std::vector<VideoInfo> videos;
  for (const auto& v : j.at("videos")) {
    videos.push_back({v.at("id").get<std::string>(), v.at("frames").get<int>(), v.at("width").get<int>(),
                      v.at("height").get<int>()});
  }
  return videos;
}

fs::path frames_base(const RunLayout& layout, const std::string& video) { return layout.scenes / video / "frames"; }

ClipTensor load_frames(const RunLayout& layout, const std::string& video) {
  return load_clip(frames_base(layout, video));
}

using TrackKey = std::pair<std::string, int>;

std::map<TrackKey, BoxSequence> read_tracks(const RunLayout& layout) {
  std::map<TrackKey, BoxSequence> tracks;
  for (const auto& r : read_jsonl(layout.track / "tracks.jsonl")) {
    std::string video;
    int track = -1;
    const BBox b = box_from_json(r, &video, &track);
    tracks[{video, track}].push_back(b);
  }
  return tracks;
}

// Boxes of a persisted proposal, rebuilt from its track; padding repeats the
// last real box.
void attach_boxes(Proposal& p, const BoxSequence& track) {
  p.boxes.clear();
  for (const auto& b : track) {
    if (b.frame >= p.t0 && b.frame < p.t0 + p.valid_frames) p.boxes.push_back(b);
  }
  if (static_cast<int>(p.boxes.size()) != p.valid_frames) {
    throw InvariantBreach("proposal " + std::to_string(p.proposal_id) + " does not match its track");
  }
  while (static_cast<int>(p.boxes.size()) < p.t1 - p.t0) {
    BBox pad = p.boxes.back();
    pad.frame = p.t0 + static_cast<int>(p.boxes.size());
    p.boxes.push_back(pad);
  }
}

std::map<std::string, std::vector<Proposal>> read_proposals(const fs::path& path) {
  std::map<std::string, std::vector<Proposal>> out;
  for (const auto& r : read_jsonl(path)) {
    std::string video;
    Proposal p = proposal_from_json(r, &video);
    out[video].push_back(std::move(p));
  }
  return out;
}

ProposalConfig proposal_config(const PipelineConfig& c) { return c.proposals; }

const std::vector<std::string>& group_classes(ObjClass c) {
  return c == ObjClass::kPerson ? person_activities() : vehicle_activities();
}

std::string group_name(ObjClass c) { return c == ObjClass::kPerson ? "person" : "vehicle"; }

const ClassifierPathConfig& path_for(const PipelineConfig& c, ObjClass obj) {
  return obj == ObjClass::kPerson ? c.classifier.person : c.classifier.vehicle;
}

Json recall_json(const std::vector<std::string>& classes, const std::vector<double>& recall) {
  Json j = Json::object();
  for (std::size_t i = 0; i < classes.size(); ++i) {
    j[classes[i]] = std::isnan(recall[i]) ? Json(nullptr) : Json(recall[i]);
  }
  return j;
}

std::string fixed(double v, int digits = 4) {
  if (std::isnan(v)) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace

RunLayout layout_for(const fs::path& out_dir) {
  return {out_dir / "scenes", out_dir / "track", out_dir / "filter", out_dir / "models",
          out_dir / "classify", out_dir / "refine", out_dir / "score"};
}

const std::vector<std::string>& stage_names() {
  static const std::vector<std::string> names{"generate", "track", "filter", "train",
                                              "classify", "refine", "score", "all"};
  return names;
}

void stage_generate(const PipelineConfig& config, const RunLayout& layout) {
  SceneSetConfig sc;
  const auto& s = config.scenes;
  sc.n_videos = s.n_videos;
  sc.frames = s.frames;
  sc.width = s.width;
  sc.height = s.height;
  sc.actors_per_video = s.actors_per_video;
  sc.vehicle_len = s.vehicle_len;
  sc.person_len = s.person_len;
  sc.first_activity_frame = s.first_activity_frame;
  sc.parked_scene = s.parked_scene;
  sc.burn_in = s.burn_in;
  sc.noise_sigma = s.noise_sigma;
  sc.jitter = s.jitter;
  sc.seed = stage_seed(config.seed, "generate");
  const auto scripts = generate_scene_scripts(sc);
  const auto classes = all_activities();

  std::vector<RenderedScene> scenes(scripts.size());
  parallel_for(scripts.size(), config.jobs, [&](std::size_t i) {
    scenes[i] = render_scene(scripts[i], classes);
    if (s.jitter > 0.0) {
      scenes[i].detections =
          jitter_boxes(scenes[i].detections, s.jitter, stage_seed(config.seed, "jitter:" + scripts[i].video_id));
    }
    save_clip(scenes[i].frames, frames_base(layout, scenes[i].video_id));
  });

  std::vector<Json> detections, truths;
  Json videos = Json::array();
  for (const auto& scene : scenes) {
    for (const auto& ab : scene.detections) detections.push_back(box_to_json(scene.video_id, ab.box));
    for (const auto& g : scene.truths) truths.push_back(truth_to_json(g, classes));
    videos.push_back({{"id", scene.video_id},
                      {"frames", scene.frames.frames()},
                      {"width", scene.frames.width()},
                      {"height", scene.frames.height()}});
  }
  write_jsonl(layout.scenes / "detections.jsonl", detections);
  write_jsonl(layout.scenes / "gt.jsonl", truths);
  write_file_atomic(layout.scenes / "manifest.json", dump({{"videos", videos}, {"class_names", classes}}));
  log("generate: " + std::to_string(scenes.size()) + " videos, " + std::to_string(truths.size()) + " activities");
}

void stage_track(const PipelineConfig& config, const RunLayout& layout) {
  const auto videos = read_manifest(layout);
  std::map<std::string, std::vector<BBox>> per_video;
  for (const auto& r : read_jsonl(layout.scenes / "detections.jsonl")) {
    std::string video;
    const BBox b = box_from_json(r, &video);
    per_video[video].push_back(b);
  }

  std::vector<std::vector<Trajectory>> tracks(videos.size());
  std::vector<std::vector<Proposal>> proposals(videos.size());
  parallel_for(videos.size(), config.jobs, [&](std::size_t i) {
    const auto found = per_video.find(videos[i].id);
    auto boxes = found == per_video.end() ? std::vector<BBox>{} : found->second;
    std::stable_sort(boxes.begin(), boxes.end(), [](const BBox& a, const BBox& b) { return a.frame < b.frame; });
    tracks[i] = track_video(boxes, config.tracker);
    int next_id = 0;
    for (const auto& t : tracks[i]) {
      for (auto& p : make_proposals(t, proposal_config(config), videos[i].width, videos[i].height)) {
        p.proposal_id = next_id++;
        proposals[i].push_back(std::move(p));
      }
    }
  });

  std::vector<Json> track_records, proposal_records;
  std::size_t n_tracks = 0;
  for (std::size_t i = 0; i < videos.size(); ++i) {
    n_tracks += tracks[i].size();
    for (const auto& t : tracks[i]) {
      for (const auto& b : t.boxes) track_records.push_back(box_to_json(videos[i].id, b, t.track_id));
    }
    for (const auto& p : proposals[i]) proposal_records.push_back(proposal_to_json(videos[i].id, p));
  }
  write_jsonl(layout.track / "tracks.jsonl", track_records);
  write_jsonl(layout.track / "proposals.jsonl", proposal_records);
  log("track: " + std::to_string(n_tracks) + " tracks, " + std::to_string(proposal_records.size()) + " proposals");
}

void stage_filter(const PipelineConfig& config, const RunLayout& layout, bool skip_filter) {
  const auto videos = read_manifest(layout);
  auto proposals = read_proposals(layout.track / "proposals.jsonl");
  const auto tracks = read_tracks(layout);

  struct Outcome {
    std::vector<Json> kept;
    std::vector<Json> rates;
    std::vector<Json> masks;
  };
  std::vector<Outcome> outcomes(videos.size());
  for (const auto& v : videos) proposals[v.id];
  parallel_for(videos.size(), config.jobs, [&](std::size_t i) {
    const auto& id = videos[i].id;
    auto& props = proposals.at(id);
    Outcome& out = outcomes[i];
    if (skip_filter) {
      for (const auto& p : props) out.kept.push_back(proposal_to_json(id, p));
      return;
    }
    const ClipTensor frames = load_frames(layout, id);
    BackgroundModel model(frames.height(), frames.width(), config.background.mixture);
    std::vector<ForegroundMask> masks;
    masks.reserve(static_cast<std::size_t>(frames.frames()));
    const std::size_t plane = static_cast<std::size_t>(frames.height()) * frames.width();
    std::vector<float> intensities(plane);
    for (int t = 0; t < frames.frames(); ++t) {
      const int channels = frames.channels();
      const float* src = frames.data().data() + static_cast<std::size_t>(t) * plane * channels;
      for (std::size_t k = 0; k < plane; ++k) {
        float sum = 0.0f;
        for (int c = 0; c < channels; ++c) sum += src[k * channels + c];
        intensities[k] = sum / static_cast<float>(channels) * 255.0f;
      }
      masks.push_back(median_denoise(model.update(intensities, t), config.background.median_kernel));
      if (config.background.save_masks) out.masks.push_back(mask_to_json(id, masks.back()));
    }
    for (auto& p : props) {
      const auto it = tracks.find({id, p.track_id});
      if (it == tracks.end()) throw InvariantBreach("proposal references unknown track " + std::to_string(p.track_id));
      attach_boxes(p, it->second);
      const double rate = foreground_rate(p, masks);
      const bool keep = rate >= config.background.thresholds.for_class(p.obj_class);
      out.rates.push_back({{"video", id},
                           {"proposal", p.proposal_id},
                           {"track", p.track_id},
                           {"class", std::string(to_string(p.obj_class))},
                           {"rate", rate},
                           {"kept", keep}});
      if (keep) out.kept.push_back(proposal_to_json(id, p));
    }
  });

  std::vector<Json> kept, rates, masks;
  for (auto& o : outcomes) {
    kept.insert(kept.end(), o.kept.begin(), o.kept.end());
    rates.insert(rates.end(), o.rates.begin(), o.rates.end());
    masks.insert(masks.end(), o.masks.begin(), o.masks.end());
  }
  write_jsonl(layout.filter / "proposals.jsonl", kept);
  write_jsonl(layout.filter / "rates.jsonl", rates);
  if (config.background.save_masks && !skip_filter) write_jsonl(layout.filter / "masks.jsonl", masks);
  write_file_atomic(layout.filter / "summary.json",
                    dump({{"skip_filter", skip_filter}, {"kept", kept.size()}, {"scored", rates.size()}}));
  log("filter: kept " + std::to_string(kept.size()) + (skip_filter ? " (filter skipped)" : ""));
}

void stage_train(const PipelineConfig& config, const RunLayout& layout) {
  ClipGeometry geometry{config.proposals.resized_h, config.proposals.resized_w, config.proposals.margin,
                        config.crop_mode};
  Json summary = Json::object();
  for (const ObjClass obj : {ObjClass::kVehicle, ObjClass::kPerson}) {
    const std::string group = group_name(obj);
    const auto& classes = group_classes(obj);
    ClipDatasetConfig dc;
    dc.classes = classes;
    dc.n_train = config.training_data.n_train;
    dc.n_test = config.training_data.n_test;
    dc.clip_len = config.proposals.clip_len;
    dc.width = config.scenes.width;
    dc.height = config.scenes.height;
    dc.noise_sigma = config.scenes.noise_sigma;
    dc.seed = stage_seed(config.seed, "train-data:" + group);
    const auto scripts = generate_clip_scripts(dc);
    std::vector<MotionSample> samples(scripts.size());
    parallel_for(scripts.size(), config.jobs, [&](std::size_t i) { samples[i] = render_clip_sample(scripts[i], geometry); });
    std::vector<MotionSample> train_set, test_set;
    for (std::size_t i = 0; i < scripts.size(); ++i) (scripts[i].train ? train_set : test_set).push_back(std::move(samples[i]));

    const auto& path = path_for(config, obj);
    TrainConfig tc;
    tc.lr = config.classifier.lr;
    tc.momentum = config.classifier.momentum;
    tc.epochs = config.classifier.epochs;
    tc.batch = config.classifier.batch;
    tc.seed = stage_seed(config.seed, "train:" + group);
    tc.mode = path.mode;
    tc.input = path.input;
    tc.flip_augment = config.classifier.flip_augment;
    tc.motion_scale = config.classifier.motion_scale;
    tc.jobs = config.jobs;
    tc.arch.convs = config.classifier.convs;
    const auto result = train(train_set, classes, tc);

    CheckpointInfo info;
    info.seed = tc.seed;
    info.epoch = tc.epochs;
    info.mode = path.mode;
    info.class_names = classes;
    info.input = to_string(path.input);
    save_checkpoint(result.params, info, layout.models / group);

    Json metrics = Json::array();
    for (const auto& m : result.metrics) {
      metrics.push_back({{"epoch", m.epoch}, {"loss", m.loss}, {"accuracy", m.accuracy}});
    }
    Json entry{{"mode", to_string(path.mode)},
               {"input", to_string(path.input)},
               {"train_clips", train_set.size()},
               {"test_clips", test_set.size()},
               {"epochs", metrics}};
    if (!test_set.empty()) {
      const auto ev = evaluate(result.params, test_set, classes, path.mode, path.input);
      entry["test_accuracy"] = ev.accuracy;
      entry["test_recall"] = recall_json(classes, ev.recall);
      log("train " + group + ": test accuracy " + fixed(ev.accuracy));
    }
    summary[group] = entry;
  }
  write_file_atomic(layout.models / "metrics.json", dump(summary));
}

void stage_classify(const PipelineConfig& config, const RunLayout& layout) {
  const auto videos = read_manifest(layout);
  auto proposals = read_proposals(layout.filter / "proposals.jsonl");
  const auto tracks = read_tracks(layout);

  struct Model {
    ModelParams<float> params;
    CheckpointInfo info;
    InputMode input = InputMode::kRgb;
  };
  std::map<ObjClass, Model> models;
  for (const ObjClass obj : {ObjClass::kVehicle, ObjClass::kPerson}) {
    Model m;
    m.params = load_checkpoint(layout.models / group_name(obj), &m.info);
    m.input = input_mode_from_string(m.info.input);
    if (m.info.class_names != group_classes(obj)) {
      throw InvariantBreach("checkpoint '" + group_name(obj) + "' has an unexpected label map");
    }
    models.emplace(obj, std::move(m));
  }

  std::vector<std::vector<Json>> records(videos.size());
  parallel_for(videos.size(), config.jobs, [&](std::size_t i) {
    const auto& id = videos[i].id;
    auto it = proposals.find(id);
    if (it == proposals.end()) return;
    const ClipTensor frames = load_frames(layout, id);
    for (auto& p : it->second) {
      const auto tr = tracks.find({id, p.track_id});
      if (tr == tracks.end()) throw InvariantBreach("proposal references unknown track " + std::to_string(p.track_id));
      attach_boxes(p, tr->second);
      const Model& model = models.at(p.obj_class);
      const auto sample = build_sample(frames, p, config.crop_mode, config.proposals.margin);
      const auto result = forward(make_input(sample, model.input), model.params, model.info.mode);
      for (std::size_t k = 0; k < model.info.class_names.size(); ++k) {
        records[i].push_back({{"video", id},
                              {"track", p.track_id},
                              {"proposal", p.proposal_id},
                              {"class", model.info.class_names[k]},
                              {"t0", p.t0},
                              {"t1", p.t0 + p.valid_frames},
                              {"score", static_cast<double>(result.probabilities[k])}});
      }
    }
  });
  std::vector<Json> all;
  for (auto& r : records) all.insert(all.end(), r.begin(), r.end());
  write_jsonl(layout.classify / "windows.jsonl", all);
  log("classify: " + std::to_string(all.size()) + " window scores");
}

void stage_refine(const PipelineConfig& config, const RunLayout& layout) {
  const auto classes = all_activities();
  std::vector<WindowDetection> windows;
  for (const auto& r : read_jsonl(layout.classify / "windows.jsonl")) {
    WindowDetection w;
    w.video_id = r.at("video").get<std::string>();
    w.track_id = r.at("track").get<int>();
    w.class_id = class_index(classes, r.at("class").get<std::string>());
    w.t0 = r.at("t0").get<int>();
    w.t1 = r.at("t1").get<int>();
    w.confidence = r.at("score").get<double>();
    windows.push_back(std::move(w));
  }
  auto detections = refine(windows, config.refiner);
  std::stable_sort(detections.begin(), detections.end(), [](const Detection& a, const Detection& b) {
    return std::tie(a.video_id, a.class_id, a.t0, a.t1, a.track_id) <
           std::tie(b.video_id, b.class_id, b.t0, b.t1, b.track_id);
  });
  std::vector<Json> records;
  for (const auto& d : detections) records.push_back(detection_to_json(d, classes));
  write_jsonl(layout.refine / "detections.jsonl", records);
  log("refine: " + std::to_string(records.size()) + " detections");
}

void stage_score(const PipelineConfig& config, const RunLayout& layout) {
  const auto videos = read_manifest(layout);
  const auto classes = all_activities();
  ScoringProtocol protocol;
  protocol.class_names = classes;
  for (const auto& v : videos) protocol.video_frames[v.id] = v.frames;
  protocol.tiou_min = config.scorer_tiou;
  protocol.tfa_limit = config.tfa_limit;
  protocol.interpolation = config.interpolation;

  std::vector<GroundTruthActivity> truths;
  for (const auto& r : read_jsonl(layout.scenes / "gt.jsonl")) truths.push_back(truth_from_json(r, classes));
  std::vector<Detection> detections;
  for (const auto& r : read_jsonl(layout.refine / "detections.jsonl")) detections.push_back(detection_from_json(r, classes));

  std::map<std::string, double> per_class;
  std::map<std::string, std::string> group_of;
  Json class_json = Json::object();
  std::ostringstream csv;
  csv << "class,threshold,pmiss,tfa\n";
  long fa_frames = 0;
  for (std::size_t c = 0; c < classes.size(); ++c) {
    const int cid = static_cast<int>(c);
    const auto& name = classes[c];
    int instances = 0, dets = 0;
    for (const auto& g : truths) instances += g.class_id == cid;
    for (const auto& d : detections) dets += d.class_id == cid;
    Json entry{{"instances", instances}, {"detections", dets}};
    try {
      const auto curve = det_curve(detections, truths, cid, protocol);
      const double value = naudc(curve, protocol.tfa_limit, protocol.interpolation);
      per_class[name] = value;
      group_of[name] = group_name(activity_object(name));
      entry["naudc"] = value;
      entry["pmiss_at_lowest_threshold"] = curve.points.back().pmiss;
      entry["false_alarm_frames"] = curve.points.back().false_alarm_frames;
      fa_frames += curve.points.back().false_alarm_frames;
      if (config.det_csv) {
        for (const auto& p : curve.points) {
          csv << name << ',' << (std::isinf(p.threshold) ? std::string("inf") : fixed(p.threshold, 6)) << ','
              << fixed(p.pmiss, 6) << ',' << fixed(p.tfa, 6) << '\n';
        }
      }
    } catch (const MetricUndefined&) {
      entry["naudc"] = nullptr;
    }
    class_json[name] = entry;
  }
  if (per_class.empty()) throw InvariantBreach("score: no class has ground truth");
  const auto groups = group_report(per_class, group_of);

  Json report{{"metric", "nAUDC@TFA" + fixed(protocol.tfa_limit, 2)},
              {"classes", class_json},
              {"groups", groups.groups},
              {"overall", groups.overall},
              {"false_alarm_frames", fa_frames},
              {"detections", detections.size()},
              {"instances", truths.size()}};
  write_file_atomic(layout.score / "report.json", dump(report));

  std::ostringstream txt;
  txt << "class                         nAUDC   instances\n";
  for (const auto& name : classes) {
    const auto& e = class_json[name];
    std::string padded = name;
    padded.resize(std::max<std::size_t>(padded.size(), 28), ' ');
    txt << padded << "  " << (e["naudc"].is_null() ? std::string("   n/a") : fixed(e["naudc"].get<double>()))
        << "  " << e["instances"].get<int>() << '\n';
  }
  for (const auto& [g, v] : groups.groups) txt << "group " << g << ": " << fixed(v) << '\n';
  txt << "overall: " << fixed(groups.overall) << '\n';
  txt << "false-alarm frames: " << fa_frames << '\n';
  write_file_atomic(layout.score / "report.txt", txt.str());
  if (config.det_csv) write_file_atomic(layout.score / "det.csv", csv.str());
  log("score: overall nAUDC " + fixed(groups.overall));
}

void run_ablation(const PipelineConfig& config, const RunLayout& layout) {
  const fs::path root = layout.score.parent_path() / "ablation";
  struct Variant {
    HeadMode mode;
    InputMode input;
  };
  const std::vector<Variant> variants{{HeadMode::kGapOnly, InputMode::kRgb},
                                      {HeadMode::kGapOnly, InputMode::kRgbMotion},
                                      {HeadMode::kPartAttention, InputMode::kRgb},
                                      {HeadMode::kPartAttention, InputMode::kRgbMotion}};
  Json columns = Json::array();
  std::map<std::string, std::vector<double>> rows;
  for (const auto& v : variants) {
    const std::string name = to_string(v.mode) + "+" + to_string(v.input);
    PipelineConfig c = config;
    c.classifier.person = {v.mode, v.input};
    c.classifier.vehicle = {v.mode, v.input};
    RunLayout l = layout;
    const fs::path dir = root / (to_string(v.mode) + "_" + to_string(v.input));
    l.models = dir / "models";
    l.classify = dir / "classify";
    l.refine = dir / "refine";
    l.score = dir / "score";
    log("ablation: " + name);
    stage_train(c, l);
    stage_classify(c, l);
    stage_refine(c, l);
    stage_score(c, l);
    const Json report = Json::parse(read_file(l.score / "report.json"));
    columns.push_back(name);
    rows["overall"].push_back(report.at("overall").get<double>());
    for (const std::string g : {"person", "vehicle"}) {
      const auto& groups = report.at("groups");
      rows[g].push_back(groups.contains(g) ? groups.at(g).get<double>() : std::numeric_limits<double>::quiet_NaN());
    }
  }

  Json table{{"metric", "nAUDC@TFA" + fixed(config.tfa_limit, 2)}, {"columns", columns}, {"rows", Json::object()}};
  std::ostringstream txt;
  txt << "nAUDC (lower is better)\n" << "row     ";
  for (const auto& c : columns) txt << "  " << c.get<std::string>();
  txt << '\n';
  for (const std::string r : {"overall", "person", "vehicle"}) {
    Json values = Json::array();
    std::string label = r;
    label.resize(8, ' ');
    txt << label;
    for (std::size_t k = 0; k < rows[r].size(); ++k) {
      const double v = rows[r][k];
      values.push_back(std::isnan(v) ? Json(nullptr) : Json(v));
      std::string cell = fixed(v);
      const std::size_t width = columns[k].get<std::string>().size();
      if (cell.size() < width) cell.insert(0, width - cell.size(), ' ');
      txt << "  " << cell;
    }
    txt << '\n';
    table["rows"][r] = values;
  }
  write_file_atomic(root / "table.json", dump(table));
  write_file_atomic(root / "table.txt", txt.str());
}

namespace {

template <typename Fn>
void attributed(const std::string& stage, Fn&& fn) {
  try {
    fn();
  } catch (const StageError&) {
    throw;
  } catch (const ConfigError& e) {
    throw StageError(stage, kExitConfig, std::string("config error at '") + e.field() + "': " + e.what());
  } catch (const MissingInputError& e) {
    throw StageError(stage, kExitMissingInput, std::string("missing input ") + e.artifact());
  } catch (const std::exception& e) {
    throw StageError(stage, kExitInternal, e.what());
  }
}

}  // namespace

void run_stage(const std::string& stage, const PipelineConfig& config, const RunOptions& options) {
  if (stage == "all") {
    run_all(config, options);
    return;
  }
  const RunLayout layout = layout_for(config.out_dir);
  attributed(stage, [&] {
    if (stage == "generate") {
      stage_generate(config, layout);
    } else if (stage == "track") {
      stage_track(config, layout);
    } else if (stage == "filter") {
      stage_filter(config, layout, options.skip_filter);
    } else if (stage == "train") {
      stage_train(config, layout);
    } else if (stage == "classify") {
      stage_classify(config, layout);
    } else if (stage == "refine") {
      stage_refine(config, layout);
    } else if (stage == "score") {
      stage_score(config, layout);
      if (options.ablation) run_ablation(config, layout);
    } else {
      throw ConfigError("stage", "unknown stage '" + stage + "'");
    }
  });
}

void run_all(const PipelineConfig& config, const RunOptions& options) {
  RunOptions single = options;
  single.ablation = false;
  for (const auto& s : stage_names()) {
    if (s == "all") continue;
    run_stage(s, config, single);
  }
  if (options.ablation) attributed("ablation", [&] { run_ablation(config, layout_for(config.out_dir)); });
}

}  // namespace actdet
