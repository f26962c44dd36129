#include "actdet/clip_tensor.hpp"

#include <bit>
#include <cmath>
#include <cstring>

#include <json.hpp>

#include "actdet/errors.hpp"
#include "actdet/jsonl.hpp"

namespace actdet {

ClipTensor::ClipTensor(int t, int h, int w, int c, float fill) : t_(t), h_(h), w_(w), c_(c) {
  if (t < 0 || h < 0 || w < 0 || c < 0) throw ContractViolation("ClipTensor: negative dimension");
  data_.assign(static_cast<std::size_t>(t) * h * w * c, fill);
}

void check_finite(const ClipTensor& clip) {
  for (const float v : clip.data()) {
    if (!std::isfinite(v)) throw ContractViolation("ClipTensor: non-finite value");
  }
}

std::string encode_f32le(const float* values, std::size_t count) {
  std::string out(count * 4, '\0');
  for (std::size_t i = 0; i < count; ++i) {
    const auto bits = std::bit_cast<std::uint32_t>(values[i]);
    for (int b = 0; b < 4; ++b) out[i * 4 + b] = static_cast<char>((bits >> (8 * b)) & 0xFFu);
  }
  return out;
}

std::vector<float> decode_f32le(const std::string& bytes) {
  if (bytes.size() % 4 != 0) throw ContractViolation("float32 payload length is not a multiple of 4");
  std::vector<float> out(bytes.size() / 4);
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::uint32_t bits = 0;
    for (int b = 0; b < 4; ++b) {
      bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[i * 4 + b])) << (8 * b);
    }
    out[i] = std::bit_cast<float>(bits);
  }
  return out;
}

void save_clip(const ClipTensor& clip, const std::filesystem::path& base) {
  nlohmann::json header;
  header["shape"] = {clip.frames(), clip.height(), clip.width(), clip.channels()};
  header["layout"] = "THWC";
  header["dtype"] = "float32le";
  header["channels"] = clip.channel_names;
  header["value_scale"] = clip.value_scale;
  write_file_atomic(base.string() + ".json", header.dump(2) + "\n");
  write_file_atomic(base.string() + ".bin", encode_f32le(clip.data().data(), clip.size()));
}

ClipTensor load_clip(const std::filesystem::path& base) {
  const auto header = nlohmann::json::parse(read_file(base.string() + ".json"));
  const auto shape = header.at("shape").get<std::vector<int>>();
  if (shape.size() != 4) throw ContractViolation("clip sidecar shape must have 4 entries");
  ClipTensor clip(shape[0], shape[1], shape[2], shape[3]);
  clip.channel_names = header.value("channels", std::vector<std::string>{});
  clip.value_scale = header.value("value_scale", std::string{});
  auto payload = decode_f32le(read_file(base.string() + ".bin"));
  if (payload.size() != clip.size()) throw ContractViolation("clip payload size does not match declared shape");
  clip.data() = std::move(payload);
  return clip;
}

}  // namespace actdet
