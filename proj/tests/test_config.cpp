#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <string>

#include "samplerl/config.hpp"

using namespace samplerl;

namespace {

const char* kBaseConfig = R"(# two modes in 1D
[target]
weights = 0.5 0.5
means = -1.5 ; 1.5
variances = 0.25 ; 0.25

[schedule]
kind = geometric
n = 4
sigma_min = 0.1
sigma_max = 6

[mdp]
strategy = gamma
horizon = 4
action_grid = 0 0.3 0.8

[run]
divergence = kl
seed = 7

[learner]
n_epoch = 4
k = 2
n_traj = 32
lr = 0.02
)";

std::string replaced(std::string text, const std::string& from, const std::string& to) {
    const size_t pos = text.find(from);
    REQUIRE(pos != std::string::npos);
    return text.replace(pos, from.size(), to);
}

}  // namespace

TEST_CASE("ini parsing basics") {
    const IniDoc doc = parse_ini("[a]\nx = 1\ny = hello world\n# comment\n[b]\nz = 2 # tail\n");
    REQUIRE(doc.sections.size() == 2);
    CHECK(doc.sections[0].name == "a");
    CHECK(doc.sections[0].entries[1].value == "hello world");
    CHECK(doc.sections[1].entries[0].value == "2");
    CHECK(doc.find("b") != nullptr);
    CHECK(doc.find("c") == nullptr);

    CHECK_THROWS_AS(parse_ini("x = 1\n"), ConfigError);          // key outside section
    CHECK_THROWS_AS(parse_ini("[a\nx = 1\n"), ConfigError);      // unterminated header
    CHECK_THROWS_AS(parse_ini("[a]\nnot a pair\n"), ConfigError);
    CHECK_THROWS_AS(parse_ini("[a]\n[a]\n"), ConfigError);       // duplicate section

    // errors carry line numbers
    try {
        parse_ini("[a]\nok = 1\nbroken\n");
        CHECK(false);
    } catch (const ConfigError& e) {
        CHECK(e.line_number == 3);
        CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
}

TEST_CASE("experiment config happy path") {
    const ExperimentConfig cfg = parse_experiment_config(kBaseConfig);
    CHECK(cfg.target.weights.size() == 2);
    CHECK(cfg.target.means[1][0] == 1.5);
    CHECK(cfg.schedule.n == 4);
    CHECK(cfg.mdp.strategy == Strategy::Gamma);
    CHECK(cfg.mdp.action_grid.size() == 3);
    CHECK(cfg.divergence == DivergenceKind::KL);
    CHECK(cfg.seed == 7);
    CHECK(cfg.learner.regen_every == 2);
    // defaults fill the optional sections
    CHECK(cfg.discriminator.train_iters == 200);
    CHECK(cfg.policy.family == PolicyFamily::SigmaOnly);
    // derived quantities
    CHECK(cfg.safe_action_index() == 0);
    CHECK(cfg.effective_terminal_mass() == doctest::Approx(1.0 / 4 + 0.1));
    const SamplerEnv env = cfg.build_env();
    CHECK(env.dim() == 1);
    CHECK(env.schedule.max_index() == 4);
    const PolicySpec spec = cfg.build_policy_spec();
    CHECK(spec.action_count == 3);
    CHECK(spec.num_levels == 5);
    CHECK(spec.level_sigmas[0] == 0.0);
    CHECK(spec.level_sigmas[4] == 6.0);
}

TEST_CASE("unknown keys and sections are rejected with line anchors") {
    CHECK_THROWS_AS(parse_experiment_config(std::string(kBaseConfig) + "\n[bogus]\nx = 1\n"),
                    ConfigError);
    try {
        parse_experiment_config(replaced(kBaseConfig, "seed = 7", "seed = 7\ntypo_key = 3"));
        CHECK(false);
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("typo_key") != std::string::npos);
        CHECK(e.line_number > 0);
    }
}

TEST_CASE("validation catches bad values") {
    CHECK_THROWS_AS(parse_experiment_config(replaced(kBaseConfig, "horizon = 4", "horizon = 3")),
                    ConfigError);  // gamma requires T = N
    CHECK_THROWS_AS(
        parse_experiment_config(replaced(kBaseConfig, "action_grid = 0 0.3 0.8",
                                         "action_grid = 0.3 0.8")),
        ConfigError);  // missing the no-op action
    CHECK_THROWS_AS(
        parse_experiment_config(replaced(kBaseConfig, "weights = 0.5 0.5", "weights = 0.5 0.6")),
        std::invalid_argument);
    CHECK_THROWS_AS(parse_experiment_config(replaced(kBaseConfig, "lr = 0.02", "lr = -1")),
                    ConfigError);
    CHECK_THROWS_AS(parse_experiment_config(replaced(kBaseConfig, "n_traj = 32", "n_traj = 1")),
                    ConfigError);
    CHECK_THROWS_AS(parse_experiment_config(replaced(kBaseConfig, "kind = geometric",
                                                     "kind = linear")),
                    std::invalid_argument);
}

TEST_CASE("renoise config") {
    std::string text = replaced(kBaseConfig, "strategy = gamma", "strategy = renoise");
    text = replaced(text, "action_grid = 0 0.3 0.8", "m = 3\nnfe_budget = 20");
    text = replaced(text, "horizon = 4", "horizon = 8");
    const ExperimentConfig cfg = parse_experiment_config(text);
    CHECK(cfg.mdp.renoise_span == 3);
    CHECK(cfg.mdp.nfe_budget == 20);
    const SamplerEnv env = cfg.build_env();
    CHECK(env.action_count() == 4);

    // renoise rejects an action grid
    CHECK_THROWS_AS(
        parse_experiment_config(replaced(kBaseConfig, "strategy = gamma", "strategy = renoise")),
        ConfigError);
}

TEST_CASE("expert section overrides the target") {
    const std::string text = std::string(kBaseConfig) +
                             "\n[expert]\nweights = 0.9 0.1\nmeans = -1.5 ; 1.5\nvariances = "
                             "0.25 ; 0.25\n";
    const ExperimentConfig cfg = parse_experiment_config(text);
    REQUIRE(cfg.expert.has_value());
    const SamplerEnv env = cfg.build_env();
    CHECK(env.expert.weights[0] == 0.9);
    CHECK(env.target.weights[0] == 0.5);
}

TEST_CASE("round trip: parse, emit, parse is idempotent") {
    const std::string with_extras =
        std::string(kBaseConfig) +
        "\n[discriminator]\ntrain_iters = 99\n\n[policy]\nfamily = state_dependent\nwidths = 8 "
        "8\n";
    const ExperimentConfig once = parse_experiment_config(with_extras);
    const std::string emitted = emit_experiment_config(once);
    const ExperimentConfig twice = parse_experiment_config(emitted);
    CHECK(emit_experiment_config(twice) == emitted);
    CHECK(twice.discriminator.train_iters == 99);
    CHECK(twice.policy.family == PolicyFamily::StateDependent);
    CHECK(twice.target.means[0][0] == once.target.means[0][0]);
}

TEST_CASE("format_double round trips") {
    for (double v : {0.1, 1.0 / 3.0, 6.02e23, -1e-12, 80.0, 0.0}) {
        CHECK(std::stod(format_double(v)) == v);
    }
}
