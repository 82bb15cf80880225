#ifndef RESMIA_BLACK_BOX_H_
#define RESMIA_BLACK_BOX_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "resmia/image.h"

namespace resmia {

// Class-probability vector returned by a classifier query.
class ProbVector {
 public:
  ProbVector() = default;
  explicit ProbVector(std::vector<float> probs) : probs_(std::move(probs)) {}

  std::size_t size() const { return probs_.size(); }
  float operator[](std::size_t i) const { return probs_[i]; }
  std::span<const float> values() const { return probs_; }

  // Index of the largest probability; ties go to the lowest index.
  int Argmax() const;
  float Max() const;
  // Entries in [0, 1] summing to 1 within `tol`.
  bool IsValid(double tol = 1e-5) const;

  friend bool operator==(const ProbVector&, const ProbVector&) = default;

 private:
  std::vector<float> probs_;
};

// The only surface the attacks see: image in, probabilities out. No
// parameters, no gradients.
class BlackBox {
 public:
  virtual ~BlackBox() = default;

  virtual ProbVector Query(const ImageTensor& image) = 0;
  // Total number of Query calls served so far.
  virtual std::uint64_t query_count() const = 0;
};

}  // namespace resmia

#endif  // RESMIA_BLACK_BOX_H_
