#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

namespace actdet {

// Dense T x H x W x C clip, frame-major then row-major, channels innermost.
class ClipTensor {
 public:
  ClipTensor() = default;
  ClipTensor(int t, int h, int w, int c, float fill = 0.0f);

  int frames() const { return t_; }
  int height() const { return h_; }
  int width() const { return w_; }
  int channels() const { return c_; }
  std::array<int, 4> shape() const { return {t_, h_, w_, c_}; }
  std::size_t size() const { return data_.size(); }

  std::size_t index(int t, int y, int x, int c) const {
    return ((static_cast<std::size_t>(t) * h_ + y) * w_ + x) * c_ + c;
  }
  float& at(int t, int y, int x, int c) { return data_[index(t, y, x, c)]; }
  float at(int t, int y, int x, int c) const { return data_[index(t, y, x, c)]; }

  std::vector<float>& data() { return data_; }
  const std::vector<float>& data() const { return data_; }

  // Names for the channel axis, e.g. {"R","G","B"} or {"dx","dy"}.
  std::vector<std::string> channel_names;
  // Free-form description of the value range, written to the sidecar.
  std::string value_scale = "[-1,1]";

  bool operator==(const ClipTensor& o) const {
    return shape() == o.shape() && data_ == o.data_;
  }

 private:
  int t_ = 0, h_ = 0, w_ = 0, c_ = 0;
  std::vector<float> data_;
};

// Throws ContractViolation if any element is NaN or infinite.
void check_finite(const ClipTensor& clip);

// On-disk format: `<base>.json` sidecar with shape, channel names and value
// scale, plus `<base>.bin` holding little-endian float32 in declared layout.
// Both files are written through a temp file and renamed.
void save_clip(const ClipTensor& clip, const std::filesystem::path& base);
ClipTensor load_clip(const std::filesystem::path& base);

// Raw little-endian float32 helpers shared with the checkpoint format.
std::string encode_f32le(const float* values, std::size_t count);
std::vector<float> decode_f32le(const std::string& bytes);

}  // namespace actdet
