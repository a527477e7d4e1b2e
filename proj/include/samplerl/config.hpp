#ifndef SAMPLERL_CONFIG_HPP_
#define SAMPLERL_CONFIG_HPP_

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "samplerl/divergence.hpp"
#include "samplerl/gaussian_mixture.hpp"
#include "samplerl/mdp.hpp"
#include "samplerl/policy.hpp"

namespace samplerl {

// parse/validation failure with the offending line when known
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& message, int line = 0)
        : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + message
                                      : message),
          line_number(line) {}
    int line_number;
};

// flat sectioned key = value text; '#' starts a comment
struct IniEntry {
    std::string key;
    std::string value;
    int line = 0;
};

struct IniSection {
    std::string name;
    std::vector<IniEntry> entries;
    int line = 0;
};

struct IniDoc {
    std::vector<IniSection> sections;

    const IniSection* find(std::string_view name) const;
};

IniDoc parse_ini(std::string_view text);

struct TargetSpec {
    std::vector<double> weights;
    std::vector<Vec> means;
    std::vector<Vec> variances;

    GaussianMixture build() const;
};

struct ScheduleSpec {
    ScheduleKind kind = ScheduleKind::Geometric;
    int n = 8;
    double sigma_min = 0.05;
    double sigma_max = 10.0;
    double rho = 7.0;
    double coverage_factor = 10.0;

    NoiseSchedule build() const { return build_schedule(kind, n, sigma_min, sigma_max, rho); }
};

struct MdpSpec {
    Strategy strategy = Strategy::Gamma;
    int horizon = 8;
    int nfe_budget = -1;
    std::vector<double> action_grid;
    int renoise_span = 4;
};

struct LearnerSpec {
    int n_epoch = 40;
    int regen_every = 4;  // K
    int n_traj = 256;
    double ppo_epsilon = 0.2;
    double lr = 0.05;
    int minibatch = 256;
    double ema_decay = 0.99;
    bool normalize_signals = false;
};

struct DiscriminatorSpec {
    std::vector<int> widths = {64, 64};
    int dre_init_iters = 100;
    int train_iters = 200;
    int batch = 128;
    double lr = 1e-3;
    double label_smoothing = 0.05;
    double smoothing_sigma_frac = 0.5;  // smooth labels for sigma >= frac * sigma_max
    double ratio_clamp_min = 1e-3;
    double ratio_clamp_max = 1e3;
    int expert_per_level = 2048;
};

struct PolicyConfigSpec {
    PolicyFamily family = PolicyFamily::SigmaOnly;
    std::vector<int> widths = {64, 64};
    InitHeuristic heuristic = InitHeuristic::SafeAction;
    bool stationary = true;
};

struct ExperimentConfig {
    TargetSpec target;
    std::optional<TargetSpec> expert;  // defaults to target
    ScheduleSpec schedule;
    MdpSpec mdp;
    DivergenceKind divergence = DivergenceKind::KL;
    uint64_t seed = 1;
    std::optional<double> w_e_terminal_mass;
    std::string out_dir;
    LearnerSpec learner;
    DiscriminatorSpec discriminator;
    PolicyConfigSpec policy;

    double effective_terminal_mass() const;
    SamplerEnv build_env() const;
    PolicySpec build_policy_spec() const;
    int safe_action_index() const;
};

ExperimentConfig parse_experiment_config(std::string_view text);
// allow_extra_sections lets container formats (snapshots) carry a config
ExperimentConfig parse_experiment_config(const IniDoc& doc, bool allow_extra_sections = false);
ExperimentConfig load_experiment_config(const std::string& path);
std::string emit_experiment_config(const ExperimentConfig& config);

std::string format_double(double v);  // shortest round-trip decimal

}  // namespace samplerl

#endif  // SAMPLERL_CONFIG_HPP_
