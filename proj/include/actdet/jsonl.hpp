#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "actdet/bbox.hpp"
#include "actdet/bgfilter.hpp"
#include "actdet/refiner.hpp"
#include "actdet/scorer.hpp"
#include "actdet/tracklet.hpp"

namespace actdet {

using Json = nlohmann::json;

// Throws MissingInputError when the file does not exist.
std::string read_file(const std::filesystem::path& path);

// Writes to a sibling temp file, then renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

std::vector<Json> read_jsonl(const std::filesystem::path& path);
void write_jsonl(const std::filesystem::path& path, const std::vector<Json>& records);

// Box record: {"video","frame","x","y","w","h","score","class","track"}.
// `track` is omitted when negative.
Json box_to_json(const std::string& video, const BBox& box, int track = -1);
BBox box_from_json(const Json& j, std::string* video = nullptr, int* track = nullptr);

// Final detection record: {"video","class","t0","t1","score","track"}.
Json detection_to_json(const Detection& d, const std::vector<std::string>& class_names);
Detection detection_from_json(const Json& j, const std::vector<std::string>& class_names);

// Ground-truth record: {"video","class","t0","t1","track"}.
Json truth_to_json(const GroundTruthActivity& g, const std::vector<std::string>& class_names);
GroundTruthActivity truth_from_json(const Json& j, const std::vector<std::string>& class_names);

// Proposal record: track, class, span, valid frame count and crop; boxes
// are recovered from the track file.
Json proposal_to_json(const std::string& video, const Proposal& p);
Proposal proposal_from_json(const Json& j, std::string* video = nullptr);

// Run-length mask record: {"video","frame","h","w","runs"}.
Json mask_to_json(const std::string& video, const ForegroundMask& mask);
ForegroundMask mask_from_json(const Json& j);

}  // namespace actdet
