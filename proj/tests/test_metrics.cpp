#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "samplerl/metrics.hpp"

using namespace samplerl;

namespace {

std::vector<Vec> gaussian_cloud(Rng& rng, double mean, double std, int n) {
    std::vector<Vec> out(n);
    for (Vec& x : out) x = {mean + std * rng.normal()};
    return out;
}

}  // namespace

TEST_CASE("energy distance basics") {
    Rng rng(1);
    const std::vector<Vec> x = gaussian_cloud(rng, 0.0, 1.0, 400);
    // identical multisets give exactly zero with the plug-in statistic
    CHECK(energy_distance(x, x) == doctest::Approx(0.0).epsilon(1e-12));

    // permutation invariance
    std::vector<Vec> shuffled = x;
    std::reverse(shuffled.begin(), shuffled.end());
    CHECK(energy_distance(shuffled, x) == doctest::Approx(energy_distance(x, x)));

    // symmetry
    const std::vector<Vec> y = gaussian_cloud(rng, 1.0, 1.0, 300);
    CHECK(energy_distance(x, y) == energy_distance(y, x));

    // separated clouds dominate same-distribution noise
    const std::vector<Vec> far = gaussian_cloud(rng, 5.0, 1.0, 400);
    const std::vector<Vec> x2 = gaussian_cloud(rng, 0.0, 1.0, 400);
    CHECK(energy_distance(x, far) > 5.0 * std::abs(energy_distance(x, x2)));
    CHECK(energy_distance(x, far) > 0.0);

    CHECK_THROWS_AS(energy_distance({}, x), std::invalid_argument);
}

TEST_CASE("histogram KL") {
    Rng rng(2);
    std::vector<double> x(100000), y(100000);
    for (double& v : x) v = rng.normal();
    for (double& v : y) v = rng.normal() * std::sqrt(2.0);

    CHECK(histogram_kl(x, x, 50, -5.0, 5.0) == doctest::Approx(0.0).epsilon(1e-12));

    // against the binned analytic KL oracle between N(0,1) and N(0,2)
    auto binned_reference = [&]() {
        const int bins = 50;
        std::vector<double> p(bins), q(bins);
        double zp = 0.0, zq = 0.0;
        for (int b = 0; b < bins; ++b) {
            // midpoint quadrature of the densities per bin
            const double mid = -5.0 + (b + 0.5) * 10.0 / bins;
            p[b] = std::exp(-0.5 * mid * mid);
            q[b] = std::exp(-0.25 * mid * mid) / std::sqrt(2.0);
            zp += p[b];
            zq += q[b];
        }
        double kl = 0.0;
        for (int b = 0; b < bins; ++b) kl += (p[b] / zp) * std::log((p[b] / zp) / (q[b] / zq));
        return kl;
    };
    const double estimate = histogram_kl(x, y, 50, -5.0, 5.0);
    CHECK(std::abs(estimate - binned_reference()) < 0.2 * binned_reference());

    // disjoint supports stay finite thanks to smoothing
    std::vector<double> left(1000, -3.0), right(1000, 3.0);
    const double disjoint = histogram_kl(left, right, 20, -5.0, 5.0, 1e-6);
    CHECK(std::isfinite(disjoint));
    CHECK(disjoint < std::log(1.0 / 1e-6) + 1.0);
    CHECK_THROWS_AS(histogram_kl(x, y, 0, -5.0, 5.0), std::invalid_argument);
}

TEST_CASE("class histogram and total variation") {
    Rng rng(3);
    const GaussianMixture m =
        make_mixture({0.7, 0.3}, {{-3.0}, {3.0}}, {{0.5}, {0.5}});
    const std::vector<Vec> xs = sample_expert(m, 0.0, 100000, rng);
    const Vec hist = class_histogram(m, xs);
    CHECK(std::abs(hist[0] - 0.7) < 0.01);
    CHECK(std::abs(hist[1] - 0.3) < 0.01);
    CHECK(total_variation(hist, m.weights) <= 0.02);

    const GaussianMixture single = make_mixture({1.0}, {{0.0}}, {{1.0}});
    CHECK(class_histogram(single, xs)[0] == doctest::Approx(1.0));

    // samples at the symmetric midpoint of two equal components
    const GaussianMixture balanced =
        make_mixture({0.5, 0.5}, {{-1.0}, {1.0}}, {{1.0}, {1.0}});
    const Vec mid = class_histogram(balanced, {{0.0}, {0.0}});
    CHECK(mid[0] == doctest::Approx(0.5));
    CHECK(mid[1] == doctest::Approx(0.5));

    CHECK(total_variation(std::vector<double>{1.0, 0.0}, std::vector<double>{0.0, 1.0}) ==
          doctest::Approx(1.0));
    CHECK_THROWS_AS(total_variation(std::vector<double>{1.0}, std::vector<double>{0.5, 0.5}),
                    std::invalid_argument);
}

TEST_CASE("mean nfe") {
    Trajectory a, b;
    a.total_nfe = 7;
    b.total_nfe = 9;
    CHECK(mean_nfe({a, b}) == doctest::Approx(8.0));
    CHECK_THROWS_AS(mean_nfe({}), std::invalid_argument);
}

TEST_CASE("sample evaluation report") {
    Rng rng(4);
    const GaussianMixture m =
        make_mixture({0.5, 0.5}, {{-2.0, 0.0}, {2.0, 0.0}}, {{0.3, 0.3}, {0.3, 0.3}});
    const std::vector<Vec> reference = sample_expert(m, 0.0, 2000, rng);
    const std::vector<Vec> good = sample_expert(m, 0.0, 2000, rng);
    const MetricReport report = evaluate_samples(m, good, reference, 15.0);
    CHECK(report.n_samples == 2000);
    CHECK(report.mean_nfe == 15.0);
    CHECK(report.class_tv < 0.05);
    CHECK(report.histogram_kl < 0.05);
    CHECK(std::abs(report.energy_distance) < 0.05);

    // a biased generator scores worse on every axis
    const GaussianMixture biased =
        make_mixture({0.9, 0.1}, {{-2.0, 0.0}, {2.0, 0.0}}, {{0.3, 0.3}, {0.3, 0.3}});
    const std::vector<Vec> bad = sample_expert(biased, 0.0, 2000, rng);
    const MetricReport worse = evaluate_samples(m, bad, reference, 15.0);
    CHECK(worse.energy_distance > report.energy_distance);
    CHECK(worse.class_tv > 0.3);
}
