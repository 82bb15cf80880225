#include "resmia/image.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "resmia/errors.h"

namespace resmia {
namespace {

void CheckShape(const ImageShape& shape) {
  if (shape.channels <= 0 || shape.height <= 0 || shape.width <= 0) {
    throw ShapeError("image dimensions must be positive, got " +
                     std::to_string(shape.channels) + "x" +
                     std::to_string(shape.height) + "x" +
                     std::to_string(shape.width));
  }
}

void CheckFactor(int factor) {
  if (factor < 2) {
    throw ShapeError("resampling factor must be >= 2, got " +
                     std::to_string(factor));
  }
}

// Source sampling positions for half-pixel-centre bilinear resizing along one
// axis.
struct Tap {
  int lo;
  int hi;
  float t;
};

// Clamped so float rounding never leaves the [a, b] hull.
float Lerp(float a, float b, float t) {
  const float v = a + t * (b - a);
  return std::clamp(v, std::min(a, b), std::max(a, b));
}

std::vector<Tap> BilinearTaps(int src_len, int factor) {
  std::vector<Tap> taps(static_cast<std::size_t>(src_len) * factor);
  for (std::size_t d = 0; d < taps.size(); ++d) {
    double s = (static_cast<double>(d) + 0.5) / factor - 0.5;
    s = std::clamp(s, 0.0, static_cast<double>(src_len - 1));
    int lo = static_cast<int>(std::floor(s));
    int hi = std::min(lo + 1, src_len - 1);
    taps[d] = {lo, hi, static_cast<float>(s - lo)};
  }
  return taps;
}

}  // namespace

ImageTensor::ImageTensor(ImageShape shape) : shape_(shape) {
  CheckShape(shape_);
  data_.assign(shape_.size(), 0.0f);
}

ImageTensor::ImageTensor(ImageShape shape, std::vector<float> data)
    : shape_(shape), data_(std::move(data)) {
  CheckShape(shape_);
  if (data_.size() != shape_.size()) {
    throw ShapeError("image data length " + std::to_string(data_.size()) +
                     " does not match shape size " +
                     std::to_string(shape_.size()));
  }
}

std::span<const float> ImageTensor::plane(int c) const {
  const std::size_t n = static_cast<std::size_t>(shape_.height) * shape_.width;
  return std::span<const float>(data_).subspan(c * n, n);
}

std::span<float> ImageTensor::mutable_plane(int c) {
  const std::size_t n = static_cast<std::size_t>(shape_.height) * shape_.width;
  return std::span<float>(data_).subspan(c * n, n);
}

bool ImageTensor::AllFinite() const {
  return std::all_of(data_.begin(), data_.end(),
                     [](float v) { return std::isfinite(v); });
}

bool ImageTensor::WithinUnitRange() const {
  return std::all_of(data_.begin(), data_.end(),
                     [](float v) { return v >= 0.0f && v <= 1.0f; });
}

std::string_view UpsampleModeName(UpsampleMode mode) {
  return mode == UpsampleMode::kNearest ? "nearest" : "bilinear";
}

UpsampleMode ParseUpsampleMode(std::string_view name) {
  if (name == "nearest") return UpsampleMode::kNearest;
  if (name == "bilinear") return UpsampleMode::kBilinear;
  throw ConfigError("unknown upsample mode '" + std::string(name) +
                    "' (expected nearest or bilinear)");
}

void ValidateErosion(const ErosionConfig& cfg, const ImageShape& shape) {
  if (cfg.steps < 0) throw ConfigError("erosion steps must be >= 0");
  if (cfg.pool_factor < 2) throw ConfigError("pool_factor must be >= 2");
  long long total = 1;
  for (int k = 0; k < cfg.steps; ++k) {
    total *= cfg.pool_factor;
    if (total > std::min(shape.height, shape.width)) {
      throw ConfigError("pool_factor^steps = " + std::to_string(cfg.pool_factor) +
                        "^" + std::to_string(cfg.steps) +
                        " exceeds image size " + std::to_string(shape.height) +
                        "x" + std::to_string(shape.width));
    }
  }
  if (shape.height % total != 0 || shape.width % total != 0) {
    throw ConfigError("pool_factor^steps = " + std::to_string(total) +
                      " does not divide image size " +
                      std::to_string(shape.height) + "x" +
                      std::to_string(shape.width));
  }
}

ImageTensor AvgPool(const ImageTensor& img, int factor) {
  CheckFactor(factor);
  if (img.height() % factor != 0) {
    throw ShapeError("avg_pool: height " + std::to_string(img.height()) +
                     " is not divisible by factor " + std::to_string(factor));
  }
  if (img.width() % factor != 0) {
    throw ShapeError("avg_pool: width " + std::to_string(img.width()) +
                     " is not divisible by factor " + std::to_string(factor));
  }
  const int oh = img.height() / factor;
  const int ow = img.width() / factor;
  ImageTensor out({img.channels(), oh, ow});
  // Double accumulation keeps the mean of a constant block exact.
  const double count = static_cast<double>(factor) * factor;
  for (int c = 0; c < img.channels(); ++c) {
    for (int y = 0; y < oh; ++y) {
      for (int x = 0; x < ow; ++x) {
        double sum = 0.0;
        for (int dy = 0; dy < factor; ++dy) {
          for (int dx = 0; dx < factor; ++dx) {
            sum += img.at(c, y * factor + dy, x * factor + dx);
          }
        }
        out.at(c, y, x) = static_cast<float>(sum / count);
      }
    }
  }
  return out;
}

ImageTensor Upsample(const ImageTensor& img, int factor, UpsampleMode mode) {
  CheckFactor(factor);
  const int oh = img.height() * factor;
  const int ow = img.width() * factor;
  ImageTensor out({img.channels(), oh, ow});
  if (mode == UpsampleMode::kNearest) {
    for (int c = 0; c < img.channels(); ++c) {
      for (int y = 0; y < oh; ++y) {
        for (int x = 0; x < ow; ++x) {
          out.at(c, y, x) = img.at(c, y / factor, x / factor);
        }
      }
    }
    return out;
  }
  const std::vector<Tap> rows = BilinearTaps(img.height(), factor);
  const std::vector<Tap> cols = BilinearTaps(img.width(), factor);
  for (int c = 0; c < img.channels(); ++c) {
    for (int y = 0; y < oh; ++y) {
      const Tap& r = rows[y];
      for (int x = 0; x < ow; ++x) {
        const Tap& q = cols[x];
        const float top = Lerp(img.at(c, r.lo, q.lo), img.at(c, r.lo, q.hi), q.t);
        const float bottom =
            Lerp(img.at(c, r.hi, q.lo), img.at(c, r.hi, q.hi), q.t);
        out.at(c, y, x) = Lerp(top, bottom, r.t);
      }
    }
  }
  return out;
}

ImageTensor ErodeStep(const ImageTensor& img, const ErosionConfig& cfg) {
  return Upsample(AvgPool(img, cfg.pool_factor), cfg.pool_factor,
                  cfg.upsample);
}

std::vector<ImageTensor> ErosionSequence(const ImageTensor& img,
                                         const ErosionConfig& cfg) {
  ValidateErosion(cfg, img.shape());
  std::vector<ImageTensor> seq;
  seq.reserve(cfg.steps + 1);
  seq.push_back(img);
  ImageTensor low = img;
  int scale = 1;
  for (int k = 1; k <= cfg.steps; ++k) {
    low = AvgPool(low, cfg.pool_factor);
    scale *= cfg.pool_factor;
    seq.push_back(Upsample(low, scale, cfg.upsample));
  }
  return seq;
}

}  // namespace resmia
