#ifndef RESMIA_IMAGE_H_
#define RESMIA_IMAGE_H_

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace resmia {

struct ImageShape {
  int channels = 0;
  int height = 0;
  int width = 0;

  std::size_t size() const {
    return static_cast<std::size_t>(channels) * height * width;
  }
  friend bool operator==(const ImageShape&, const ImageShape&) = default;
};

// A C x H x W image stored as contiguous channel planes, each plane
// row-major. Dataset images hold intensities in [0, 1].
class ImageTensor {
 public:
  ImageTensor() = default;
  // Zero-filled image. Throws ShapeError on non-positive dimensions.
  explicit ImageTensor(ImageShape shape);
  // Throws ShapeError if data.size() != channels * height * width.
  ImageTensor(ImageShape shape, std::vector<float> data);

  const ImageShape& shape() const { return shape_; }
  int channels() const { return shape_.channels; }
  int height() const { return shape_.height; }
  int width() const { return shape_.width; }

  std::span<const float> data() const { return data_; }
  std::span<float> mutable_data() { return data_; }

  std::span<const float> plane(int c) const;
  std::span<float> mutable_plane(int c);

  float at(int c, int y, int x) const {
    return data_[(static_cast<std::size_t>(c) * shape_.height + y) *
                     shape_.width +
                 x];
  }
  float& at(int c, int y, int x) {
    return data_[(static_cast<std::size_t>(c) * shape_.height + y) *
                     shape_.width +
                 x];
  }

  bool AllFinite() const;
  bool WithinUnitRange() const;

  friend bool operator==(const ImageTensor&, const ImageTensor&) = default;

 private:
  ImageShape shape_;
  std::vector<float> data_;
};

enum class UpsampleMode { kNearest, kBilinear };

std::string_view UpsampleModeName(UpsampleMode mode);
// Accepts "nearest" and "bilinear". Throws ConfigError otherwise.
UpsampleMode ParseUpsampleMode(std::string_view name);

struct ErosionConfig {
  int steps = 5;
  int pool_factor = 2;
  UpsampleMode upsample = UpsampleMode::kNearest;
};

// Throws ConfigError unless steps >= 0, pool_factor >= 2 and
// pool_factor^steps divides both spatial dimensions of `shape`.
void ValidateErosion(const ErosionConfig& cfg, const ImageShape& shape);

// Non-overlapping factor x factor mean pooling with stride `factor`.
// Throws ShapeError naming the axis when a dimension is not divisible.
ImageTensor AvgPool(const ImageTensor& img, int factor);

// Enlarges each spatial dimension by `factor`. Nearest mode replicates every
// source pixel into a factor x factor block. Bilinear mode samples the source
// at (dst + 0.5) / factor - 0.5, clamped to the border pixels.
ImageTensor Upsample(const ImageTensor& img, int factor, UpsampleMode mode);

// One erosion: Upsample(AvgPool(img, pool_factor), pool_factor, mode).
ImageTensor ErodeStep(const ImageTensor& img, const ErosionConfig& cfg);

// Returns steps + 1 images at the original resolution. Element 0 is `img`.
// Element k is the source pooled k times (effective resolution divided by
// pool_factor^k) and restored to full size in a single upsampling pass, so
// element 1 == ErodeStep(img) and with steps = log_f(size) the last element
// is constant per channel.
std::vector<ImageTensor> ErosionSequence(const ImageTensor& img,
                                         const ErosionConfig& cfg);

}  // namespace resmia

#endif  // RESMIA_IMAGE_H_
