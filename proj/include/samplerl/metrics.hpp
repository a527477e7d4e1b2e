#ifndef SAMPLERL_METRICS_HPP_
#define SAMPLERL_METRICS_HPP_

#include <span>
#include <vector>

#include "samplerl/gaussian_mixture.hpp"
#include "samplerl/mdp.hpp"

namespace samplerl {

struct MetricReport {
    double energy_distance = 0.0;
    double histogram_kl = 0.0;
    double class_tv = 0.0;  // 0.5 L1 between class histograms
    double mean_nfe = 0.0;
    int n_samples = 0;
};

// plug-in energy distance 2 E|x-y| - E|x-x'| - E|y-y'| between empirical
// measures; nonnegative by construction and exactly 0 for equal multisets
double energy_distance(const std::vector<Vec>& x, const std::vector<Vec>& y);

// KL between smoothed histograms of 1D samples on a shared grid
double histogram_kl(std::span<const double> x, std::span<const double> y, int bins, double lo,
                    double hi, double smoothing = 1e-6);

// soft class assignment: mean posterior at sigma = 0
Vec class_histogram(const GaussianMixture& target, const std::vector<Vec>& samples);

double total_variation(std::span<const double> p, std::span<const double> q);

double mean_nfe(const std::vector<Trajectory>& trajectories);

// report comparing generated samples against the expert mixture; the
// histogram term averages per-dimension marginal KLs
MetricReport evaluate_samples(const GaussianMixture& expert, const std::vector<Vec>& generated,
                              const std::vector<Vec>& reference, double nfe);

}  // namespace samplerl

#endif  // SAMPLERL_METRICS_HPP_
