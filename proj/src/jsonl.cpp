#include "actdet/jsonl.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "actdet/errors.hpp"

namespace actdet {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingInputError(path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw std::runtime_error("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::vector<Json> read_jsonl(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  std::vector<Json> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(Json::parse(line));
    } catch (const Json::parse_error& e) {
      throw ContractViolation(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

void write_jsonl(const std::filesystem::path& path, const std::vector<Json>& records) {
  std::string text;
  for (const auto& r : records) {
    text += r.dump();
    text += '\n';
  }
  write_file_atomic(path, text);
}

Json box_to_json(const std::string& video, const BBox& box, int track) {
  Json j{{"video", video}, {"frame", box.frame}, {"x", box.x},         {"y", box.y},
         {"w", box.w},     {"h", box.h},         {"score", box.score}, {"class", std::string(to_string(box.obj_class))}};
  if (track >= 0) j["track"] = track;
  return j;
}

BBox box_from_json(const Json& j, std::string* video, int* track) {
  BBox b;
  b.frame = j.at("frame").get<int>();
  b.x = j.at("x").get<double>();
  b.y = j.at("y").get<double>();
  b.w = j.at("w").get<double>();
  b.h = j.at("h").get<double>();
  b.score = j.value("score", 1.0);
  b.obj_class = obj_class_from_string(j.at("class").get<std::string>());
  validate(b);
  if (video) *video = j.at("video").get<std::string>();
  if (track) *track = j.value("track", -1);
  return b;
}

namespace {

int class_id_of(const std::string& name, const std::vector<std::string>& class_names) {
  const auto it = std::find(class_names.begin(), class_names.end(), name);
  if (it == class_names.end()) throw ContractViolation("class '" + name + "' is not in the label map");
  return static_cast<int>(it - class_names.begin());
}

const std::string& class_name_of(int id, const std::vector<std::string>& class_names) {
  if (id < 0 || static_cast<std::size_t>(id) >= class_names.size()) {
    throw ContractViolation("class id " + std::to_string(id) + " is not in the label map");
  }
  return class_names[static_cast<std::size_t>(id)];
}

}  // namespace

Json detection_to_json(const Detection& d, const std::vector<std::string>& class_names) {
  return Json{{"video", d.video_id}, {"class", class_name_of(d.class_id, class_names)},
              {"t0", d.t0},          {"t1", d.t1},
              {"score", d.confidence}, {"track", d.track_id}};
}

Detection detection_from_json(const Json& j, const std::vector<std::string>& class_names) {
  Detection d;
  d.video_id = j.at("video").get<std::string>();
  d.class_id = class_id_of(j.at("class").get<std::string>(), class_names);
  d.t0 = j.at("t0").get<int>();
  d.t1 = j.at("t1").get<int>();
  d.confidence = j.at("score").get<double>();
  d.track_id = j.value("track", -1);
  if (d.t1 <= d.t0) throw ContractViolation("detection with empty span");
  return d;
}

Json truth_to_json(const GroundTruthActivity& g, const std::vector<std::string>& class_names) {
  Json j{{"video", g.video_id}, {"class", class_name_of(g.class_id, class_names)}, {"t0", g.t0}, {"t1", g.t1}};
  if (g.track_id >= 0) j["track"] = g.track_id;
  return j;
}

GroundTruthActivity truth_from_json(const Json& j, const std::vector<std::string>& class_names) {
  GroundTruthActivity g;
  g.video_id = j.at("video").get<std::string>();
  g.class_id = class_id_of(j.at("class").get<std::string>(), class_names);
  g.t0 = j.at("t0").get<int>();
  g.t1 = j.at("t1").get<int>();
  g.track_id = j.value("track", -1);
  if (g.t1 <= g.t0) throw ContractViolation("ground truth with empty span");
  return g;
}

Json proposal_to_json(const std::string& video, const Proposal& p) {
  return Json{{"video", video},
              {"proposal", p.proposal_id},
              {"track", p.track_id},
              {"class", std::string(to_string(p.obj_class))},
              {"t0", p.t0},
              {"t1", p.t1},
              {"valid", p.valid_frames},
              {"crop", {p.crop.x, p.crop.y, p.crop.w, p.crop.h}},
              {"resized", {p.resized_h, p.resized_w}}};
}

Proposal proposal_from_json(const Json& j, std::string* video) {
  Proposal p;
  p.proposal_id = j.at("proposal").get<int>();
  p.track_id = j.at("track").get<int>();
  p.obj_class = obj_class_from_string(j.at("class").get<std::string>());
  p.t0 = j.at("t0").get<int>();
  p.t1 = j.at("t1").get<int>();
  p.valid_frames = j.at("valid").get<int>();
  const auto crop = j.at("crop").get<std::vector<double>>();
  if (crop.size() != 4) throw ContractViolation("proposal crop must have 4 entries");
  p.crop = {crop[0], crop[1], crop[2], crop[3]};
  const auto resized = j.at("resized").get<std::vector<int>>();
  if (resized.size() != 2) throw ContractViolation("proposal resized size must have 2 entries");
  p.resized_h = resized[0];
  p.resized_w = resized[1];
  if (video) *video = j.at("video").get<std::string>();
  return p;
}

Json mask_to_json(const std::string& video, const ForegroundMask& mask) {
  return Json{{"video", video}, {"frame", mask.frame}, {"h", mask.height}, {"w", mask.width}, {"runs", encode_runs(mask)}};
}

ForegroundMask mask_from_json(const Json& j) {
  const auto runs = j.at("runs").get<std::vector<int>>();
  return decode_runs(runs, j.at("frame").get<int>(), j.at("h").get<int>(), j.at("w").get<int>());
}

}  // namespace actdet
