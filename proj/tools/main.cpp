// samplerl: learn sampling-time control policies for diffusion-style
// generators by matching expert state occupancies.
//
// Subcommands: train, sample, eval, gradcheck, sweep-temp, oracle-check.
// Exit codes: 0 success, 1 validation error, 2 verification failure.

#include <CLI11.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "samplerl/learner.hpp"
#include "samplerl/metrics.hpp"
#include "samplerl/snapshot.hpp"
#include "samplerl/tabular.hpp"

using namespace samplerl;

namespace {

constexpr int kExitValidation = 1;
constexpr int kExitVerification = 2;

bool verbose() {
    const char* v = std::getenv("SAMPLERL_VERBOSE");
    return v == nullptr || std::string(v) != "0";
}

std::ostream* log_stream() {
    static std::ostream* silent = nullptr;
    return verbose() ? &std::cerr : silent;
}

struct CheckCounter {
    int failures = 0;
    void check(bool ok, const std::string& label) {
        std::cout << (ok ? "[PASS] " : "[FAIL] ") << label << "\n";
        if (!ok) ++failures;
    }
};

std::vector<Vec> terminal_states(const std::vector<Trajectory>& trajs) {
    std::vector<Vec> out;
    for (const Trajectory& t : trajs)
        if (t.states.back().level_index == 0) out.push_back(t.states.back().x);
    if (out.empty())
        for (const Trajectory& t : trajs) out.push_back(t.states.back().x);
    return out;
}

void write_samples_csv(const std::string& path, const GaussianMixture& expert,
                       const std::vector<Vec>& samples) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    const int d = expert.dim();
    for (int j = 0; j < d; ++j) out << (j ? "," : "") << "x" << j;
    for (int k = 0; k < expert.components(); ++k) out << ",class_" << k;
    out << "\n";
    for (const Vec& x : samples) {
        for (int j = 0; j < d; ++j) out << (j ? "," : "") << format_double(x[j]);
        for (double p : class_posterior(expert, x, 0.0)) out << ',' << format_double(p);
        out << "\n";
    }
}

void print_report(std::ostream& out, const MetricReport& report) {
    out << "energy_distance = " << format_double(report.energy_distance) << "\n"
        << "histogram_kl = " << format_double(report.histogram_kl) << "\n"
        << "class_tv = " << format_double(report.class_tv) << "\n"
        << "mean_nfe = " << format_double(report.mean_nfe) << "\n"
        << "n_samples = " << report.n_samples << "\n";
}

MetricReport rollout_and_evaluate(const ExperimentConfig& cfg, const Policy& policy, double beta,
                                  int n, uint64_t seed, int threads, std::vector<Vec>* samples_out,
                                  std::vector<Trajectory>* trajs_out = nullptr) {
    const SamplerEnv env = cfg.build_env();
    const Rng root(seed);
    const std::vector<Trajectory> trajs =
        rollout_batch(env, policy, beta, n, root.derive("sample"), threads);
    std::vector<Vec> generated = terminal_states(trajs);
    Rng expert_rng = root.derive("reference");
    const std::vector<Vec> reference =
        sample_expert(env.expert, 0.0, static_cast<int>(generated.size()), expert_rng);
    const MetricReport report =
        evaluate_samples(env.expert, generated, reference, mean_nfe(trajs));
    if (samples_out) *samples_out = std::move(generated);
    if (trajs_out) *trajs_out = trajs;
    return report;
}

int run_train(const std::string& config_path, const std::string& out_dir, int64_t seed_override,
              int threads) {
    ExperimentConfig cfg = load_experiment_config(config_path);
    if (seed_override >= 0) cfg.seed = static_cast<uint64_t>(seed_override);
    const std::string dir = out_dir.empty() ? cfg.out_dir : out_dir;
    if (dir.empty()) throw ConfigError("no output directory (set --out or out_dir)");
    std::filesystem::create_directories(dir);

    std::ofstream metrics(dir + "/metrics.csv", std::ios::binary);
    if (!metrics) throw std::runtime_error("cannot write metrics.csv under " + dir);
    metrics << kMetricsHeader << "\n";
    const MetricsSink sink = [&metrics](const MetricsRow& row) {
        metrics << metrics_row_csv(row) << "\n";
    };

    const TrainResult result = train(cfg, sink, threads, log_stream());
    save_policy_snapshot(dir + "/policy.txt", cfg, result.policy, SnapshotKind::Policy);
    save_policy_snapshot(dir + "/ema.txt", cfg, result.ema_policy, SnapshotKind::Ema);
    save_discriminator_snapshot(dir + "/discriminator.txt", cfg, result.discriminator);
    if (verbose())
        std::cerr << "wrote " << dir << "/{policy,ema,discriminator}.txt and metrics.csv\n";
    return 0;
}

int run_sample(const std::string& policy_path, int n, double beta, const std::string& out_path,
               int64_t seed_override, int threads) {
    const LoadedPolicy loaded = load_policy_snapshot(policy_path);
    const uint64_t seed =
        seed_override >= 0 ? static_cast<uint64_t>(seed_override) : loaded.config.seed + 1;
    std::vector<Vec> samples;
    const MetricReport report =
        rollout_and_evaluate(loaded.config, loaded.policy, beta, n, seed, threads, &samples);
    write_samples_csv(out_path, loaded.config.build_env().expert, samples);
    print_report(std::cout, report);
    if (verbose()) std::cerr << "wrote " << out_path << "\n";
    return 0;
}

int run_eval(const std::string& policy_path, const std::string& config_path, int n,
             int64_t seed_override, int threads) {
    const LoadedPolicy loaded = load_policy_snapshot(policy_path);
    const ExperimentConfig cfg =
        config_path.empty() ? loaded.config : load_experiment_config(config_path);
    const uint64_t seed = seed_override >= 0 ? static_cast<uint64_t>(seed_override) : cfg.seed + 1;
    const MetricReport report =
        rollout_and_evaluate(cfg, loaded.policy, 1.0, n, seed, threads, nullptr);
    print_report(std::cout, report);
    return 0;
}

int run_sweep_temp(const std::string& policy_path, const std::string& betas_arg, int n,
                   int64_t seed_override, int threads, const std::string& out_path) {
    const LoadedPolicy loaded = load_policy_snapshot(policy_path);
    std::vector<double> betas;
    std::stringstream stream(betas_arg);
    std::string token;
    while (std::getline(stream, token, ',')) {
        const double beta = std::stod(token);
        if (!(beta > 0.0)) throw ConfigError("temperatures must be positive");
        betas.push_back(beta);
    }
    if (betas.empty()) throw ConfigError("no temperatures given");
    const uint64_t seed =
        seed_override >= 0 ? static_cast<uint64_t>(seed_override) : loaded.config.seed + 2;

    std::ostringstream csv;
    csv << "beta,energy_distance,histogram_kl,class_tv,mean_nfe,n_samples\n";
    for (double beta : betas) {
        const MetricReport report =
            rollout_and_evaluate(loaded.config, loaded.policy, beta, n, seed, threads, nullptr);
        csv << format_double(beta) << ',' << format_double(report.energy_distance) << ','
            << format_double(report.histogram_kl) << ',' << format_double(report.class_tv) << ','
            << format_double(report.mean_nfe) << ',' << report.n_samples << "\n";
    }
    if (out_path.empty()) {
        std::cout << csv.str();
    } else {
        std::ofstream out(out_path, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + out_path);
        out << csv.str();
        if (verbose()) std::cerr << "wrote " << out_path << "\n";
    }
    return 0;
}

int run_gradcheck(int cases, uint64_t seed) {
    CheckCounter counter;
    Rng rng(seed);
    double worst = 0.0;
    for (int i = 0; i < cases; ++i) {
        const int s_count = 2 + rng.uniform_int(3);
        const int a_count = 2 + rng.uniform_int(2);
        const int horizon = 1 + rng.uniform_int(4);
        const TabularMdp mdp = random_tabular_mdp(s_count, a_count, horizon, rng);
        const TabularPolicy policy = random_tabular_policy(s_count, a_count, rng);
        std::vector<double> mu_e(s_count);
        double sum = 0.0;
        for (double& v : mu_e) {
            v = 0.05 + rng.uniform();
            sum += v;
        }
        for (double& v : mu_e) v /= sum;

        for (DivergenceKind kind : {DivergenceKind::KL, DivergenceKind::RKL}) {
            const FGenerator gen = make_generator(kind);
            const std::vector<double> est = estimator_gradient(mdp, policy, mu_e, gen);
            const std::vector<double> fd = fd_gradient(mdp, policy, mu_e, gen, 1e-5);
            double diff = 0.0;
            for (size_t j = 0; j < est.size(); ++j)
                diff = std::max(diff, std::abs(est[j] - fd[j]));
            worst = std::max(worst, diff);
            std::ostringstream label;
            label << "instance " << i << " S=" << s_count << " A=" << a_count << " T=" << horizon
                  << " " << divergence_name(kind) << ": max|est - fd| = " << diff;
            counter.check(diff < 1e-6, label.str());
        }
    }
    std::cout << "worst-case deviation: " << worst << "\n";
    return counter.failures == 0 ? 0 : kExitVerification;
}

int run_oracle_check(uint64_t seed) {
    CheckCounter counter;
    Rng rng(seed);

    // denoiser-score identity on random mixtures
    {
        const GaussianMixture ring = ring_mixture(8, 2.0, 0.2);
        double worst = 0.0;
        for (int i = 0; i < 200; ++i) {
            const Vec x{rng.uniform(-4.0, 4.0), rng.uniform(-4.0, 4.0)};
            const double sigma = rng.uniform(0.0, 6.0);
            const Vec d = denoise(ring, x, sigma);
            const Vec s = score(ring, x, sigma);
            for (int j = 0; j < 2; ++j)
                worst = std::max(worst, std::abs(d[j] - (x[j] + sigma * sigma * s[j])));
        }
        counter.check(worst < 1e-10, "denoiser equals Tweedie route, max dev " +
                                         format_double(worst));
    }

    // score vs finite differences of the log density
    {
        const GaussianMixture ring = ring_mixture(5, 1.5, 0.3);
        double worst = 0.0;
        for (int i = 0; i < 100; ++i) {
            const Vec x{rng.uniform(-3.0, 3.0), rng.uniform(-3.0, 3.0)};
            const double sigma = rng.uniform(0.0, 4.0);
            const Vec s = score(ring, x, sigma);
            for (int j = 0; j < 2; ++j) {
                Vec hi = x, lo = x;
                hi[j] += 1e-6;
                lo[j] -= 1e-6;
                const double fd =
                    (log_density(ring, hi, sigma) - log_density(ring, lo, sigma)) / 2e-6;
                worst = std::max(worst, std::abs(s[j] - fd));
            }
        }
        counter.check(worst < 1e-5, "score equals FD of log density, max dev " +
                                        format_double(worst));
    }

    // integrator orders against the closed-form single-Gaussian flow
    {
        const GaussianMixture g = make_mixture({1.0}, {{0.0}}, {{1.0}});
        const DenoiserFn d = [&g](std::span<const double> x, double s) {
            return denoise(g, x, s);
        };
        auto endpoint_error = [&](bool heun, int steps) {
            Vec x{3.0};
            const double from = 2.0, to = 0.5;
            for (int i = 0; i < steps; ++i) {
                const double a = from + (to - from) * i / steps;
                const double b = from + (to - from) * (i + 1) / steps;
                x = heun ? heun_step(d, x, a, b).x : euler_step(d, x, a, b).x;
            }
            const double exact = 3.0 * std::sqrt((1.0 + to * to) / (1.0 + from * from));
            return std::abs(x[0] - exact);
        };
        const double h1 = endpoint_error(true, 8), h2 = endpoint_error(true, 16);
        const double e1 = endpoint_error(false, 8), e2 = endpoint_error(false, 16);
        counter.check(h1 / h2 > 2.5 && h1 / h2 < 6.0,
                      "Heun halving ratio " + format_double(h1 / h2) + " in [2.5, 6]");
        counter.check(e1 / e2 > 1.5 && e1 / e2 < 3.0,
                      "Euler halving ratio " + format_double(e1 / e2) + " in [1.5, 3]");
    }

    // renoise and EDM perturbation variance laws (Monte Carlo)
    {
        Rng mc = rng.derive("variance");
        const double s2 = 0.6, si = 0.5, sj = 1.25;
        double acc = 0.0;
        const int n = 200000;
        for (int i = 0; i < n; ++i) {
            Vec x{std::sqrt(s2 + si * si) * mc.normal()};
            acc += std::pow(renoise(x, si, sj, mc)[0], 2);
        }
        const double rel = std::abs(acc / n - (s2 + sj * sj)) / (s2 + sj * sj);
        counter.check(rel < 0.02, "renoise variance law, rel dev " + format_double(rel));
    }

    // exact conditional ratio oracle identities
    {
        const GaussianMixture p = make_mixture({1.0}, {{0.0}}, {{1.0}});
        const GaussianMixture q = make_mixture({1.0}, {{0.0}}, {{2.0}});
        const double at0 = exact_ratio_oracle(p, q, Vec{0.0}, 0.0);
        counter.check(std::abs(at0 - std::sqrt(2.0)) < 1e-12,
                      "density ratio at the origin is sqrt(2)");
        bool ok = true;
        for (int i = 0; i < 100; ++i) {
            const Vec x{rng.uniform(-3.0, 3.0)};
            const double sigma = rng.uniform(0.0, 2.0);
            if (std::abs(exact_ratio_oracle(p, p, x, sigma) - 1.0) > 1e-12) ok = false;
        }
        counter.check(ok, "self-ratio is identically 1");
    }

    return counter.failures == 0 ? 0 : kExitVerification;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"occupancy-matching policy learning for diffusion-style samplers"};
    app.require_subcommand(1);

    std::string config_path, out_dir, policy_path, out_path, betas_arg;
    int64_t seed_override = -1;
    int threads = 1, n = 1000, cases = 20;
    double beta = 1.0;
    uint64_t check_seed = 12345;

    CLI::App* train_cmd = app.add_subcommand("train", "train a sampling policy");
    train_cmd->add_option("--config", config_path, "experiment config file")->required();
    train_cmd->add_option("--out", out_dir, "output directory");
    train_cmd->add_option("--seed", seed_override, "override the config seed");
    train_cmd->add_option("--threads", threads, "rollout worker threads");

    CLI::App* sample_cmd = app.add_subcommand("sample", "generate samples from a policy");
    sample_cmd->add_option("--policy", policy_path, "policy snapshot")->required();
    sample_cmd->add_option("--n", n, "number of trajectories");
    sample_cmd->add_option("--beta", beta, "sampling temperature");
    sample_cmd->add_option("--out", out_path, "samples csv path")->default_val("samples.csv");
    sample_cmd->add_option("--seed", seed_override, "sampling seed");
    sample_cmd->add_option("--threads", threads, "rollout worker threads");

    CLI::App* eval_cmd = app.add_subcommand("eval", "recompute metrics for a policy");
    eval_cmd->add_option("--policy", policy_path, "policy snapshot")->required();
    eval_cmd->add_option("--config", config_path, "config override (defaults to embedded)");
    eval_cmd->add_option("--n", n, "number of trajectories");
    eval_cmd->add_option("--seed", seed_override, "evaluation seed");
    eval_cmd->add_option("--threads", threads, "rollout worker threads");

    CLI::App* grad_cmd = app.add_subcommand("gradcheck", "tabular gradient oracle suite");
    grad_cmd->add_option("--cases", cases, "number of random instances");
    grad_cmd->add_option("--seed", check_seed, "instance seed");

    CLI::App* sweep_cmd = app.add_subcommand("sweep-temp", "metrics across temperatures");
    sweep_cmd->add_option("--policy", policy_path, "policy snapshot")->required();
    sweep_cmd->add_option("--betas", betas_arg, "comma-separated temperatures")->required();
    sweep_cmd->add_option("--n", n, "trajectories per temperature");
    sweep_cmd->add_option("--seed", seed_override, "sampling seed");
    sweep_cmd->add_option("--threads", threads, "rollout worker threads");
    sweep_cmd->add_option("--out", out_path, "write csv here instead of stdout");

    CLI::App* oracle_cmd = app.add_subcommand("oracle-check", "sampler and ratio oracles");
    oracle_cmd->add_option("--seed", check_seed, "probe seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitValidation;
    }

    try {
        if (train_cmd->parsed()) return run_train(config_path, out_dir, seed_override, threads);
        if (sample_cmd->parsed())
            return run_sample(policy_path, n, beta, out_path, seed_override, threads);
        if (eval_cmd->parsed())
            return run_eval(policy_path, config_path, n, seed_override, threads);
        if (grad_cmd->parsed()) return run_gradcheck(cases, check_seed);
        if (sweep_cmd->parsed())
            return run_sweep_temp(policy_path, betas_arg, n, seed_override, threads, out_path);
        if (oracle_cmd->parsed()) return run_oracle_check(check_seed);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    }
    return kExitValidation;
}
