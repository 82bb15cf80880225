#ifndef RESMIA_NN_H_
#define RESMIA_NN_H_

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "resmia/black_box.h"
#include "resmia/image.h"

namespace resmia {

enum class LayerKind {
  kConv3x3Relu,  // 3x3 kernel, stride 1, zero padding 1
  kMaxPool2,     // 2x2 window, stride 2
  kFlatten,
  kDenseRelu,
  kDense,
};

std::string_view LayerKindName(LayerKind kind);
LayerKind ParseLayerKind(std::string_view name);  // throws ConfigError

struct LayerSpec {
  LayerKind kind;
  int width = 0;  // output channels (conv) or units (dense); unused otherwise

  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

class Architecture {
 public:
  Architecture() = default;
  // Throws ConfigError if the layer sequence is inconsistent with the input
  // shape or the last layer does not produce `num_classes` outputs.
  Architecture(ImageShape input, std::vector<LayerSpec> layers,
               int num_classes);

  // conv(8) -> pool -> conv(16) -> pool -> flatten -> dense(64) -> dense(C).
  static Architecture DeskScale(ImageShape input, int num_classes);

  const ImageShape& input() const { return input_; }
  const std::vector<LayerSpec>& layers() const { return layers_; }
  int num_classes() const { return num_classes_; }

  // Activation shape after each layer; element 0 is the input shape. Dense
  // activations are reported as {units, 1, 1}.
  const std::vector<ImageShape>& activation_shapes() const { return shapes_; }

  friend bool operator==(const Architecture& a, const Architecture& b) {
    return a.input_ == b.input_ && a.layers_ == b.layers_ &&
           a.num_classes_ == b.num_classes_;
  }

 private:
  ImageShape input_;
  std::vector<LayerSpec> layers_;
  int num_classes_ = 0;
  std::vector<ImageShape> shapes_;
};

template <typename T>
struct ParamBlock {
  std::vector<int> shape;
  std::vector<T> values;
};

// Parameter blocks in layer order; each conv/dense layer contributes a
// weight block followed by a bias block.
template <typename T>
struct BasicModelParams {
  std::vector<ParamBlock<T>> blocks;

  std::size_t NumValues() const;
  bool AllFinite() const;
  bool SameShapeAs(const BasicModelParams& other) const;
};

using ModelParams = BasicModelParams<float>;

template <typename To, typename From>
BasicModelParams<To> CastParams(const BasicModelParams<From>& params) {
  BasicModelParams<To> out;
  out.blocks.reserve(params.blocks.size());
  for (const auto& b : params.blocks) {
    out.blocks.push_back(
        {b.shape, std::vector<To>(b.values.begin(), b.values.end())});
  }
  return out;
}

// Zero-valued parameters shaped for `arch`.
template <typename T>
BasicModelParams<T> ZeroParams(const Architecture& arch);

// Weights uniform in +-sqrt(6 / (fan_in + fan_out)), biases zero.
ModelParams InitParams(const Architecture& arch, std::uint64_t seed);

// Throws ShapeError if `params` do not fit `arch`.
template <typename T>
void CheckParams(const BasicModelParams<T>& params, const Architecture& arch);

template <typename T>
std::vector<T> Logits(const BasicModelParams<T>& params,
                      const Architecture& arch, const ImageTensor& img);

// Max-shifted softmax.
template <typename T>
std::vector<T> Softmax(std::span<const T> logits);

ProbVector Forward(const ModelParams& params, const Architecture& arch,
                   const ImageTensor& img);

struct BatchItem {
  const ImageTensor* image;
  int label;
};

template <typename T>
struct LossAndGrads {
  T loss = 0;
  BasicModelParams<T> grads;
};

// Mean cross-entropy over the batch and its exact gradient. Throws
// ConfigError on an empty batch or an out-of-range label.
template <typename T>
LossAndGrads<T> LossAndGradients(const BasicModelParams<T>& params,
                                 const Architecture& arch,
                                 std::span<const BatchItem> batch);

// params - lr * grads. Throws ShapeError on mismatched shapes.
ModelParams SgdStep(const ModelParams& params, const ModelParams& grads,
                    float lr);
void ApplySgdStep(ModelParams& params, const ModelParams& grads, float lr);

// ReLU on/off bits and max-pool winners for one forward pass. Two inputs with
// equal signatures lie in the same linear piece of the network.
template <typename T>
std::vector<std::uint8_t> ActivationSignature(const BasicModelParams<T>& params,
                                              const Architecture& arch,
                                              const ImageTensor& img);

}  // namespace resmia

#endif  // RESMIA_NN_H_
