#include "support/centralized.h"

#include <algorithm>
#include <numeric>
#include <random>

#include "resmia/fed.h"

namespace resmia::testing {

ModelParams CentralizedTrain(const ModelParams& init, const Architecture& arch,
                             const std::vector<Sample>& data, int rounds,
                             int epochs, int batch_size, float lr,
                             std::uint64_t seed) {
  ModelParams params = init;
  std::vector<std::size_t> order(data.size());
  for (int round = 0; round < rounds; ++round) {
    std::mt19937_64 rng(LocalTrainSeed(seed, round, 0));
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (int epoch = 0; epoch < epochs; ++epoch) {
      std::shuffle(order.begin(), order.end(), rng);
      for (std::size_t start = 0; start < order.size();
           start += static_cast<std::size_t>(batch_size)) {
        std::vector<BatchItem> batch;
        const std::size_t end = std::min(order.size(), start + batch_size);
        for (std::size_t k = start; k < end; ++k) {
          batch.push_back({&data[order[k]].image, data[order[k]].label});
        }
        const auto grads = LossAndGradients(params, arch, batch).grads;
        for (std::size_t b = 0; b < params.blocks.size(); ++b) {
          for (std::size_t i = 0; i < params.blocks[b].values.size(); ++i) {
            params.blocks[b].values[i] -= lr * grads.blocks[b].values[i];
          }
        }
      }
    }
  }
  return params;
}

}  // namespace resmia::testing
