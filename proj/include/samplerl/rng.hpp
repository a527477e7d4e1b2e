#ifndef SAMPLERL_RNG_HPP_
#define SAMPLERL_RNG_HPP_

#include <cstdint>
#include <span>
#include <string_view>

namespace samplerl {

// Deterministic generator with named substream derivation. Every random
// choice in a run flows from one master seed; substreams are derived by
// mixing (root, tag, index), so results do not depend on the order in
// which streams are consumed or on the number of worker threads.
class Rng {
  public:
    explicit Rng(uint64_t seed);

    // substream rooted at this stream's seed; independent of consumption
    Rng derive(std::string_view tag, uint64_t index = 0) const;

    uint64_t next_u64();
    double uniform();                      // [0, 1)
    double uniform(double lo, double hi);
    double normal();                       // standard normal
    void normal_fill(std::span<double> out);
    int uniform_int(int n);                // {0, ..., n-1}, n >= 1
    int categorical(std::span<const double> probs);

    uint64_t root() const { return root_; }

  private:
    uint64_t root_;
    uint64_t state_;
    double spare_normal_ = 0.0;
    bool has_spare_normal_ = false;
};

}  // namespace samplerl

#endif  // SAMPLERL_RNG_HPP_
