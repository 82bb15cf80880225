#include "resmia/nn.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "resmia/errors.h"

namespace resmia {

int ProbVector::Argmax() const {
  return static_cast<int>(std::max_element(probs_.begin(), probs_.end()) -
                          probs_.begin());
}

float ProbVector::Max() const {
  return *std::max_element(probs_.begin(), probs_.end());
}

bool ProbVector::IsValid(double tol) const {
  if (probs_.empty()) return false;
  double sum = 0.0;
  for (float p : probs_) {
    if (!(p >= 0.0f && p <= 1.0f)) return false;
    sum += p;
  }
  return std::abs(sum - 1.0) <= tol;
}

std::string_view LayerKindName(LayerKind kind) {
  switch (kind) {
    case LayerKind::kConv3x3Relu:
      return "conv3x3_relu";
    case LayerKind::kMaxPool2:
      return "maxpool2";
    case LayerKind::kFlatten:
      return "flatten";
    case LayerKind::kDenseRelu:
      return "dense_relu";
    case LayerKind::kDense:
      return "dense";
  }
  return "unknown";
}

LayerKind ParseLayerKind(std::string_view name) {
  for (LayerKind k : {LayerKind::kConv3x3Relu, LayerKind::kMaxPool2,
                      LayerKind::kFlatten, LayerKind::kDenseRelu,
                      LayerKind::kDense}) {
    if (LayerKindName(k) == name) return k;
  }
  throw ConfigError("unknown layer kind '" + std::string(name) + "'");
}

Architecture::Architecture(ImageShape input, std::vector<LayerSpec> layers,
                           int num_classes)
    : input_(input), layers_(std::move(layers)), num_classes_(num_classes) {
  if (input_.channels <= 0 || input_.height <= 0 || input_.width <= 0) {
    throw ConfigError("architecture input dimensions must be positive");
  }
  if (num_classes_ < 2) throw ConfigError("need at least two classes");
  if (layers_.empty()) throw ConfigError("architecture has no layers");
  shapes_.push_back(input_);
  bool flat = false;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const LayerSpec& l = layers_[i];
    ImageShape s = shapes_.back();
    const std::string where = "layer " + std::to_string(i) + " (" +
                              std::string(LayerKindName(l.kind)) + ")";
    switch (l.kind) {
      case LayerKind::kConv3x3Relu:
        if (flat) throw ConfigError(where + " follows flatten");
        if (l.width <= 0) throw ConfigError(where + " needs a positive width");
        s.channels = l.width;
        break;
      case LayerKind::kMaxPool2:
        if (flat) throw ConfigError(where + " follows flatten");
        if (s.height % 2 != 0 || s.width % 2 != 0) {
          throw ConfigError(where + " needs even spatial input, got " +
                            std::to_string(s.height) + "x" +
                            std::to_string(s.width));
        }
        s.height /= 2;
        s.width /= 2;
        break;
      case LayerKind::kFlatten:
        if (flat) throw ConfigError(where + " repeats flatten");
        s = {static_cast<int>(s.size()), 1, 1};
        flat = true;
        break;
      case LayerKind::kDenseRelu:
      case LayerKind::kDense:
        if (!flat) throw ConfigError(where + " requires a preceding flatten");
        if (l.width <= 0) throw ConfigError(where + " needs a positive width");
        s = {l.width, 1, 1};
        break;
    }
    shapes_.push_back(s);
  }
  if (layers_.back().kind != LayerKind::kDense ||
      layers_.back().width != num_classes_) {
    throw ConfigError("final layer must be dense with width " +
                      std::to_string(num_classes_));
  }
}

Architecture Architecture::DeskScale(ImageShape input, int num_classes) {
  return Architecture(input,
                      {{LayerKind::kConv3x3Relu, 8},
                       {LayerKind::kMaxPool2},
                       {LayerKind::kConv3x3Relu, 16},
                       {LayerKind::kMaxPool2},
                       {LayerKind::kFlatten},
                       {LayerKind::kDenseRelu, 64},
                       {LayerKind::kDense, num_classes}},
                      num_classes);
}

template <typename T>
std::size_t BasicModelParams<T>::NumValues() const {
  std::size_t n = 0;
  for (const auto& b : blocks) n += b.values.size();
  return n;
}

template <typename T>
bool BasicModelParams<T>::AllFinite() const {
  for (const auto& b : blocks) {
    for (T v : b.values) {
      if (!std::isfinite(v)) return false;
    }
  }
  return true;
}

template <typename T>
bool BasicModelParams<T>::SameShapeAs(const BasicModelParams& other) const {
  if (blocks.size() != other.blocks.size()) return false;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    if (blocks[i].shape != other.blocks[i].shape ||
        blocks[i].values.size() != other.blocks[i].values.size()) {
      return false;
    }
  }
  return true;
}

namespace {

bool HasParams(LayerKind kind) {
  return kind == LayerKind::kConv3x3Relu || kind == LayerKind::kDenseRelu ||
         kind == LayerKind::kDense;
}

std::vector<std::vector<int>> BlockShapes(const Architecture& arch) {
  std::vector<std::vector<int>> shapes;
  const auto& acts = arch.activation_shapes();
  for (std::size_t i = 0; i < arch.layers().size(); ++i) {
    const LayerSpec& l = arch.layers()[i];
    if (l.kind == LayerKind::kConv3x3Relu) {
      shapes.push_back({l.width, acts[i].channels, 3, 3});
      shapes.push_back({l.width});
    } else if (HasParams(l.kind)) {
      shapes.push_back({l.width, static_cast<int>(acts[i].size())});
      shapes.push_back({l.width});
    }
  }
  return shapes;
}

std::size_t Product(const std::vector<int>& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         [](std::size_t a, int b) { return a * b; });
}

// Forward/backward over one sample. Activations are cached per layer so the
// backward pass can reuse them.
template <typename T>
class Engine {
 public:
  Engine(const BasicModelParams<T>& params, const Architecture& arch)
      : params_(params), arch_(arch) {
    const auto& layers = arch.layers();
    int block = 0;
    for (const LayerSpec& l : layers) {
      weight_block_.push_back(HasParams(l.kind) ? block : -1);
      if (HasParams(l.kind)) block += 2;
    }
    acts_.resize(layers.size() + 1);
    for (std::size_t i = 0; i < acts_.size(); ++i) {
      acts_[i].resize(arch.activation_shapes()[i].size());
    }
    argmax_.resize(layers.size());
  }

  std::span<const T> Forward(const ImageTensor& img) {
    std::copy(img.data().begin(), img.data().end(), acts_[0].begin());
    const auto& shapes = arch_.activation_shapes();
    for (std::size_t i = 0; i < arch_.layers().size(); ++i) {
      const LayerSpec& l = arch_.layers()[i];
      const std::vector<T>& in = acts_[i];
      std::vector<T>& out = acts_[i + 1];
      switch (l.kind) {
        case LayerKind::kConv3x3Relu:
          ConvForward(shapes[i], shapes[i + 1], Weights(i), Bias(i), in, out);
          Relu(out);
          break;
        case LayerKind::kMaxPool2:
          PoolForward(shapes[i], in, out, argmax_[i]);
          break;
        case LayerKind::kFlatten:
          out = in;
          break;
        case LayerKind::kDenseRelu:
          DenseForward(Weights(i), Bias(i), in, out);
          Relu(out);
          break;
        case LayerKind::kDense:
          DenseForward(Weights(i), Bias(i), in, out);
          break;
      }
    }
    return acts_.back();
  }

  // Accumulates d(loss)/d(params) into `grads` given d(loss)/d(logits).
  void Backward(std::span<const T> dlogits, BasicModelParams<T>& grads) {
    const auto& shapes = arch_.activation_shapes();
    std::vector<T> delta(dlogits.begin(), dlogits.end());
    std::vector<T> next;
    for (std::size_t ii = arch_.layers().size(); ii-- > 0;) {
      const LayerSpec& l = arch_.layers()[ii];
      const std::vector<T>& in = acts_[ii];
      const std::vector<T>& out = acts_[ii + 1];
      const bool need_input_grad = ii > 0;
      switch (l.kind) {
        case LayerKind::kConv3x3Relu: {
          MaskRelu(out, delta);
          const int b = weight_block_[ii];
          next.assign(need_input_grad ? in.size() : 0, T(0));
          ConvBackward(shapes[ii], shapes[ii + 1], Weights(ii), in, delta,
                       grads.blocks[b].values, grads.blocks[b + 1].values,
                       need_input_grad ? &next : nullptr);
          break;
        }
        case LayerKind::kMaxPool2:
          next.assign(in.size(), T(0));
          for (std::size_t o = 0; o < delta.size(); ++o) {
            next[argmax_[ii][o]] += delta[o];
          }
          break;
        case LayerKind::kFlatten:
          next = delta;
          break;
        case LayerKind::kDenseRelu:
        case LayerKind::kDense: {
          if (l.kind == LayerKind::kDenseRelu) MaskRelu(out, delta);
          const int b = weight_block_[ii];
          next.assign(need_input_grad ? in.size() : 0, T(0));
          DenseBackward(Weights(ii), in, delta, grads.blocks[b].values,
                        grads.blocks[b + 1].values,
                        need_input_grad ? &next : nullptr);
          break;
        }
      }
      delta.swap(next);
    }
  }

  std::vector<std::uint8_t> Signature() const {
    std::vector<std::uint8_t> sig;
    for (std::size_t i = 0; i < arch_.layers().size(); ++i) {
      const LayerKind k = arch_.layers()[i].kind;
      if (k == LayerKind::kConv3x3Relu || k == LayerKind::kDenseRelu) {
        for (T v : acts_[i + 1]) sig.push_back(v > T(0) ? 1 : 0);
      } else if (k == LayerKind::kMaxPool2) {
        for (int idx : argmax_[i]) sig.push_back(static_cast<std::uint8_t>(idx & 0xff));
      }
    }
    return sig;
  }

 private:
  const std::vector<T>& Weights(std::size_t layer) const {
    return params_.blocks[weight_block_[layer]].values;
  }
  const std::vector<T>& Bias(std::size_t layer) const {
    return params_.blocks[weight_block_[layer] + 1].values;
  }

  static void Relu(std::vector<T>& v) {
    for (T& x : v) x = x > T(0) ? x : T(0);
  }

  static void MaskRelu(const std::vector<T>& out, std::vector<T>& delta) {
    for (std::size_t i = 0; i < delta.size(); ++i) {
      if (!(out[i] > T(0))) delta[i] = T(0);
    }
  }

  static void ConvForward(const ImageShape& is, const ImageShape& os,
                          const std::vector<T>& w, const std::vector<T>& b,
                          const std::vector<T>& in, std::vector<T>& out) {
    const int h = is.height;
    const int wd = is.width;
    const std::size_t hw = static_cast<std::size_t>(h) * wd;
    for (int o = 0; o < os.channels; ++o) {
      T* op = out.data() + o * hw;
      std::fill(op, op + hw, b[o]);
      for (int c = 0; c < is.channels; ++c) {
        const T* ip = in.data() + c * hw;
        const T* k = w.data() + (static_cast<std::size_t>(o) * is.channels + c) * 9;
        for (int ky = 0; ky < 3; ++ky) {
          const int dy = ky - 1;
          const int y0 = std::max(0, -dy);
          const int y1 = std::min(h, h - dy);
          for (int kx = 0; kx < 3; ++kx) {
            const int dx = kx - 1;
            const int x0 = std::max(0, -dx);
            const int x1 = std::min(wd, wd - dx);
            const T kv = k[ky * 3 + kx];
            for (int y = y0; y < y1; ++y) {
              T* orow = op + y * wd;
              const T* irow = ip + (y + dy) * wd + dx;
              for (int x = x0; x < x1; ++x) orow[x] += kv * irow[x];
            }
          }
        }
      }
    }
  }

  static void ConvBackward(const ImageShape& is, const ImageShape& os,
                           const std::vector<T>& w, const std::vector<T>& in,
                           const std::vector<T>& delta, std::vector<T>& dw,
                           std::vector<T>& db, std::vector<T>* din) {
    const int h = is.height;
    const int wd = is.width;
    const std::size_t hw = static_cast<std::size_t>(h) * wd;
    for (int o = 0; o < os.channels; ++o) {
      const T* dp = delta.data() + o * hw;
      T bsum = 0;
      for (std::size_t p = 0; p < hw; ++p) bsum += dp[p];
      db[o] += bsum;
      for (int c = 0; c < is.channels; ++c) {
        const T* ip = in.data() + c * hw;
        const std::size_t kbase =
            (static_cast<std::size_t>(o) * is.channels + c) * 9;
        for (int ky = 0; ky < 3; ++ky) {
          const int dy = ky - 1;
          const int y0 = std::max(0, -dy);
          const int y1 = std::min(h, h - dy);
          for (int kx = 0; kx < 3; ++kx) {
            const int dx = kx - 1;
            const int x0 = std::max(0, -dx);
            const int x1 = std::min(wd, wd - dx);
            T acc = 0;
            for (int y = y0; y < y1; ++y) {
              const T* drow = dp + y * wd;
              const T* irow = ip + (y + dy) * wd + dx;
              for (int x = x0; x < x1; ++x) acc += drow[x] * irow[x];
            }
            dw[kbase + ky * 3 + kx] += acc;
            if (din != nullptr) {
              const T kv = w[kbase + ky * 3 + kx];
              T* gp = din->data() + c * hw;
              for (int y = y0; y < y1; ++y) {
                const T* drow = dp + y * wd;
                T* grow = gp + (y + dy) * wd + dx;
                for (int x = x0; x < x1; ++x) grow[x] += kv * drow[x];
              }
            }
          }
        }
      }
    }
  }

  static void PoolForward(const ImageShape& is, const std::vector<T>& in,
                          std::vector<T>& out, std::vector<int>& argmax) {
    const int oh = is.height / 2;
    const int ow = is.width / 2;
    argmax.resize(out.size());
    for (int c = 0; c < is.channels; ++c) {
      for (int y = 0; y < oh; ++y) {
        for (int x = 0; x < ow; ++x) {
          int best = (c * is.height + 2 * y) * is.width + 2 * x;
          for (int d = 1; d < 4; ++d) {
            const int idx =
                (c * is.height + 2 * y + d / 2) * is.width + 2 * x + d % 2;
            if (in[idx] > in[best]) best = idx;
          }
          const int o = (c * oh + y) * ow + x;
          out[o] = in[best];
          argmax[o] = best;
        }
      }
    }
  }

  static void DenseForward(const std::vector<T>& w, const std::vector<T>& b,
                           const std::vector<T>& in, std::vector<T>& out) {
    const std::size_t n = in.size();
    for (std::size_t j = 0; j < out.size(); ++j) {
      const T* row = w.data() + j * n;
      T acc = b[j];
      for (std::size_t k = 0; k < n; ++k) acc += row[k] * in[k];
      out[j] = acc;
    }
  }

  static void DenseBackward(const std::vector<T>& w, const std::vector<T>& in,
                            const std::vector<T>& delta, std::vector<T>& dw,
                            std::vector<T>& db, std::vector<T>* din) {
    const std::size_t n = in.size();
    for (std::size_t j = 0; j < delta.size(); ++j) {
      const T d = delta[j];
      db[j] += d;
      if (d == T(0)) continue;
      T* grow = dw.data() + j * n;
      for (std::size_t k = 0; k < n; ++k) grow[k] += d * in[k];
      if (din != nullptr) {
        const T* row = w.data() + j * n;
        T* g = din->data();
        for (std::size_t k = 0; k < n; ++k) g[k] += d * row[k];
      }
    }
  }

  const BasicModelParams<T>& params_;
  const Architecture& arch_;
  std::vector<int> weight_block_;
  std::vector<std::vector<T>> acts_;
  std::vector<std::vector<int>> argmax_;
};

void CheckImage(const Architecture& arch, const ImageTensor& img) {
  if (img.shape() != arch.input()) {
    const auto& a = arch.input();
    throw ShapeError("input image " + std::to_string(img.channels()) + "x" +
                     std::to_string(img.height()) + "x" +
                     std::to_string(img.width()) +
                     " does not match architecture input " +
                     std::to_string(a.channels) + "x" +
                     std::to_string(a.height) + "x" + std::to_string(a.width));
  }
}

}  // namespace

template <typename T>
BasicModelParams<T> ZeroParams(const Architecture& arch) {
  BasicModelParams<T> p;
  for (auto& shape : BlockShapes(arch)) {
    const std::size_t n = Product(shape);
    p.blocks.push_back({std::move(shape), std::vector<T>(n, T(0))});
  }
  return p;
}

ModelParams InitParams(const Architecture& arch, std::uint64_t seed) {
  ModelParams p = ZeroParams<float>(arch);
  std::mt19937_64 rng(seed);
  for (std::size_t b = 0; b < p.blocks.size(); b += 2) {
    const std::vector<int>& shape = p.blocks[b].shape;
    double fan_in;
    double fan_out;
    if (shape.size() == 4) {
      fan_in = static_cast<double>(shape[1]) * 9;
      fan_out = static_cast<double>(shape[0]) * 9;
    } else {
      fan_in = shape[1];
      fan_out = shape[0];
    }
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (float& v : p.blocks[b].values) v = static_cast<float>(dist(rng));
  }
  return p;
}

template <typename T>
void CheckParams(const BasicModelParams<T>& params, const Architecture& arch) {
  const auto shapes = BlockShapes(arch);
  if (params.blocks.size() != shapes.size()) {
    throw ShapeError("parameter block count " +
                     std::to_string(params.blocks.size()) +
                     " does not match architecture (" +
                     std::to_string(shapes.size()) + ")");
  }
  for (std::size_t i = 0; i < shapes.size(); ++i) {
    if (params.blocks[i].shape != shapes[i] ||
        params.blocks[i].values.size() != Product(shapes[i])) {
      throw ShapeError("parameter block " + std::to_string(i) +
                       " has the wrong shape");
    }
  }
}

template <typename T>
std::vector<T> Logits(const BasicModelParams<T>& params,
                      const Architecture& arch, const ImageTensor& img) {
  CheckParams(params, arch);
  CheckImage(arch, img);
  Engine<T> engine(params, arch);
  auto out = engine.Forward(img);
  return std::vector<T>(out.begin(), out.end());
}

template <typename T>
std::vector<T> Softmax(std::span<const T> logits) {
  const T mx = *std::max_element(logits.begin(), logits.end());
  std::vector<T> p(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const double e = std::exp(static_cast<double>(logits[i]) - mx);
    p[i] = static_cast<T>(e);
    sum += e;
  }
  for (T& v : p) v = static_cast<T>(v / sum);
  return p;
}

ProbVector Forward(const ModelParams& params, const Architecture& arch,
                   const ImageTensor& img) {
  const std::vector<float> logits = Logits(params, arch, img);
  return ProbVector(Softmax<float>(logits));
}

template <typename T>
LossAndGrads<T> LossAndGradients(const BasicModelParams<T>& params,
                                 const Architecture& arch,
                                 std::span<const BatchItem> batch) {
  CheckParams(params, arch);
  if (batch.empty()) throw ConfigError("loss_and_gradients: empty batch");
  LossAndGrads<T> result;
  result.grads = ZeroParams<T>(arch);
  Engine<T> engine(params, arch);
  const T inv_batch = T(1) / static_cast<T>(batch.size());
  double loss = 0.0;
  std::vector<T> dlogits(arch.num_classes());
  for (const BatchItem& item : batch) {
    if (item.label < 0 || item.label >= arch.num_classes()) {
      throw ConfigError("label " + std::to_string(item.label) +
                        " out of range for " +
                        std::to_string(arch.num_classes()) + " classes");
    }
    CheckImage(arch, *item.image);
    std::span<const T> logits = engine.Forward(*item.image);
    const T mx = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (T z : logits) sum += std::exp(static_cast<double>(z - mx));
    const double lse = mx + std::log(sum);
    loss += lse - logits[item.label];
    for (std::size_t k = 0; k < logits.size(); ++k) {
      const double p = std::exp(static_cast<double>(logits[k]) - lse);
      dlogits[k] = static_cast<T>(p) * inv_batch;
    }
    dlogits[item.label] -= inv_batch;
    engine.Backward(dlogits, result.grads);
  }
  result.loss = static_cast<T>(loss / batch.size());
  return result;
}

void ApplySgdStep(ModelParams& params, const ModelParams& grads, float lr) {
  if (!params.SameShapeAs(grads)) {
    throw ShapeError("sgd_step: gradient shapes do not match parameters");
  }
  for (std::size_t b = 0; b < params.blocks.size(); ++b) {
    auto& v = params.blocks[b].values;
    const auto& g = grads.blocks[b].values;
    for (std::size_t i = 0; i < v.size(); ++i) v[i] -= lr * g[i];
  }
}

ModelParams SgdStep(const ModelParams& params, const ModelParams& grads,
                    float lr) {
  ModelParams out = params;
  ApplySgdStep(out, grads, lr);
  return out;
}

template <typename T>
std::vector<std::uint8_t> ActivationSignature(const BasicModelParams<T>& params,
                                              const Architecture& arch,
                                              const ImageTensor& img) {
  CheckParams(params, arch);
  CheckImage(arch, img);
  Engine<T> engine(params, arch);
  engine.Forward(img);
  return engine.Signature();
}

#define RESMIA_INSTANTIATE(T)                                                 \
  template struct BasicModelParams<T>;                                        \
  template BasicModelParams<T> ZeroParams<T>(const Architecture&);            \
  template void CheckParams<T>(const BasicModelParams<T>&,                    \
                               const Architecture&);                          \
  template std::vector<T> Logits<T>(const BasicModelParams<T>&,               \
                                    const Architecture&, const ImageTensor&); \
  template std::vector<T> Softmax<T>(std::span<const T>);                     \
  template LossAndGrads<T> LossAndGradients<T>(                               \
      const BasicModelParams<T>&, const Architecture&,                        \
      std::span<const BatchItem>);                                            \
  template std::vector<std::uint8_t> ActivationSignature<T>(                  \
      const BasicModelParams<T>&, const Architecture&, const ImageTensor&);

RESMIA_INSTANTIATE(float)
RESMIA_INSTANTIATE(double)

#undef RESMIA_INSTANTIATE

}  // namespace resmia
