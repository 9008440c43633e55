#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace sbi {

// All randomness in a run flows from one root seed through named streams:
// stream("shocks", i), stream("prior"), stream("train", round) and so on.
// Draws on one stream never shift the draws of another.
class RngStream {
 public:
  RngStream() : RngStream(0) {}
  explicit RngStream(std::uint64_t seed) : eng_(seed) {}

  double uniform() { return unif_(eng_); }                  // [0,1)
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double gaussian();                                        // N(0,1), Box-Muller
  std::uint64_t next_u64() { return eng_(); }
  // Uniform integer in [0, n), n >= 1.
  std::size_t uniform_index(std::size_t n);

  // Fisher-Yates using this stream.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = uniform_index(i);
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 eng_;
  std::uniform_real_distribution<double> unif_{0.0, 1.0};
  bool have_spare_ = false;
  double spare_ = 0.0;
};

// Derives the seed of a named substream from a root seed. fnv1a over the name,
// mixed with splitmix64 so adjacent indices decorrelate.
std::uint64_t derive_seed(std::uint64_t root, const std::string& name, std::uint64_t index = 0);

inline RngStream make_stream(std::uint64_t root, const std::string& name, std::uint64_t index = 0) {
  return RngStream(derive_seed(root, name, index));
}

}  // namespace sbi
