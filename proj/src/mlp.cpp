#include "samplerl/mlp.hpp"

#include <cmath>
#include <stdexcept>

namespace samplerl {

Mlp::Mlp(std::vector<int> sizes) : sizes_(std::move(sizes)) {
    if (sizes_.size() < 2) throw std::invalid_argument("mlp: need input and output widths");
    int total = 0;
    for (size_t l = 0; l + 1 < sizes_.size(); ++l) {
        if (sizes_[l] < 1 || sizes_[l + 1] < 1)
            throw std::invalid_argument("mlp: widths must be positive");
        layer_offsets_.push_back(total);
        total += sizes_[l + 1] * sizes_[l] + sizes_[l + 1];
    }
    params_.assign(total, 0.0);
}

void Mlp::init_xavier(Rng& rng, bool zero_last) {
    const size_t layers = sizes_.size() - 1;
    for (size_t l = 0; l < layers; ++l) {
        const int in = sizes_[l], out = sizes_[l + 1];
        double* w = params_.data() + layer_offsets_[l];
        double* b = w + out * in;
        if (zero_last && l == layers - 1) {
            for (int i = 0; i < out * in + out; ++i) w[i] = 0.0;
            continue;
        }
        const double bound = std::sqrt(6.0 / (in + out));
        for (int i = 0; i < out * in; ++i) w[i] = rng.uniform(-bound, bound);
        for (int i = 0; i < out; ++i) b[i] = 0.0;
    }
}

std::span<double> Mlp::output_bias() {
    const size_t last = sizes_.size() - 2;
    const int in = sizes_[last], out = sizes_[last + 1];
    return {params_.data() + layer_offsets_[last] + out * in, static_cast<size_t>(out)};
}

std::vector<double> Mlp::forward(std::span<const double> x) const {
    Tape tape;
    return forward(x, tape);
}

std::vector<double> Mlp::forward(std::span<const double> x, Tape& tape) const {
    if (static_cast<int>(x.size()) != input_dim())
        throw std::invalid_argument("mlp: input dimension mismatch");
    tape.activations.clear();
    tape.activations.emplace_back(x.begin(), x.end());
    const size_t layers = sizes_.size() - 1;
    for (size_t l = 0; l < layers; ++l) {
        const int in = sizes_[l], out = sizes_[l + 1];
        const double* w = params_.data() + layer_offsets_[l];
        const double* b = w + out * in;
        const std::vector<double>& a = tape.activations.back();
        std::vector<double> z(out);
        for (int i = 0; i < out; ++i) {
            double acc = b[i];
            const double* row = w + i * in;
            for (int j = 0; j < in; ++j) acc += row[j] * a[j];
            z[i] = (l == layers - 1) ? acc : std::tanh(acc);
        }
        tape.activations.push_back(std::move(z));
    }
    return tape.activations.back();
}

void Mlp::backward(const Tape& tape, std::span<const double> dout,
                   std::span<double> grad) const {
    if (grad.size() != params_.size()) throw std::invalid_argument("mlp: grad size mismatch");
    const size_t layers = sizes_.size() - 1;
    std::vector<double> delta(dout.begin(), dout.end());
    for (size_t li = layers; li-- > 0;) {
        const int in = sizes_[li], out = sizes_[li + 1];
        const double* w = params_.data() + layer_offsets_[li];
        double* gw = grad.data() + layer_offsets_[li];
        double* gb = gw + out * in;
        const std::vector<double>& a = tape.activations[li];
        // tanh derivative uses the stored post-activation except on the linear output
        if (li != layers - 1) {
            const std::vector<double>& y = tape.activations[li + 1];
            for (int i = 0; i < out; ++i) delta[i] *= 1.0 - y[i] * y[i];
        }
        for (int i = 0; i < out; ++i) {
            gb[i] += delta[i];
            double* grow = gw + i * in;
            for (int j = 0; j < in; ++j) grow[j] += delta[i] * a[j];
        }
        if (li == 0) break;
        std::vector<double> prev(in, 0.0);
        for (int i = 0; i < out; ++i) {
            const double* row = w + i * in;
            for (int j = 0; j < in; ++j) prev[j] += row[j] * delta[i];
        }
        delta = std::move(prev);
    }
}

}  // namespace samplerl
