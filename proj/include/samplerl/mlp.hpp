#ifndef SAMPLERL_MLP_HPP_
#define SAMPLERL_MLP_HPP_

#include <span>
#include <vector>

#include "samplerl/rng.hpp"

namespace samplerl {

// Dense feedforward net, tanh hidden layers, linear output. Parameters live
// in one flat buffer [W0 b0 W1 b1 ...] (W row-major, out x in) so updates,
// EMA tracking and snapshots treat every model the same way.
class Mlp {
  public:
    Mlp() = default;
    explicit Mlp(std::vector<int> sizes);  // input, hidden..., output widths

    // Xavier-uniform hidden layers; zero_last leaves the output layer at 0 so
    // the initial map is a constant (set via output biases)
    void init_xavier(Rng& rng, bool zero_last = true);

    int input_dim() const { return sizes_.front(); }
    int output_dim() const { return sizes_.back(); }
    int num_params() const { return static_cast<int>(params_.size()); }

    std::span<double> params() { return params_; }
    std::span<const double> params() const { return params_; }
    std::span<double> output_bias();

    std::vector<double> forward(std::span<const double> x) const;

    struct Tape {
        std::vector<std::vector<double>> activations;  // input, then per-layer outputs
    };
    std::vector<double> forward(std::span<const double> x, Tape& tape) const;

    // accumulates dL/dparams into grad (size num_params) given dL/doutput
    void backward(const Tape& tape, std::span<const double> dout, std::span<double> grad) const;

    const std::vector<int>& sizes() const { return sizes_; }

  private:
    std::vector<int> sizes_;
    std::vector<double> params_;
    std::vector<int> layer_offsets_;  // offset of W_l within params_
};

}  // namespace samplerl

#endif  // SAMPLERL_MLP_HPP_
