#include "samplerl/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "samplerl/occupancy.hpp"

namespace samplerl {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

std::vector<std::string> split_ws(std::string_view s) {
    std::vector<std::string> out;
    std::istringstream stream{std::string(s)};
    std::string token;
    while (stream >> token) out.push_back(token);
    return out;
}

double parse_double(std::string_view s, int line) {
    try {
        size_t consumed = 0;
        const std::string str(s);
        const double v = std::stod(str, &consumed);
        if (consumed != str.size()) throw std::invalid_argument("");
        return v;
    } catch (const std::exception&) {
        throw ConfigError("expected a number, got '" + std::string(s) + "'", line);
    }
}

long long parse_int(std::string_view s, int line) {
    long long v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
        throw ConfigError("expected an integer, got '" + std::string(s) + "'", line);
    return v;
}

bool parse_bool(std::string_view s, int line) {
    if (s == "true") return true;
    if (s == "false") return false;
    throw ConfigError("expected true or false, got '" + std::string(s) + "'", line);
}

// strict access to one section; every key must be consumed exactly once
class SectionReader {
  public:
    SectionReader(const IniDoc& doc, std::string_view name, bool required) {
        section_ = doc.find(name);
        name_ = name;
        if (!section_ && required) throw ConfigError("missing [" + std::string(name) + "] section");
        if (section_) {
            std::set<std::string> seen;
            for (const IniEntry& e : section_->entries)
                if (!seen.insert(e.key).second)
                    throw ConfigError("duplicate key '" + e.key + "'", e.line);
        }
    }

    bool present() const { return section_ != nullptr; }

    const IniEntry* find(std::string_view key) {
        if (!section_) return nullptr;
        for (const IniEntry& e : section_->entries) {
            if (e.key == key) {
                consumed_.insert(e.key);
                return &e;
            }
        }
        return nullptr;
    }

    const IniEntry& require(std::string_view key) {
        const IniEntry* e = find(key);
        if (!e)
            throw ConfigError("missing key '" + std::string(key) + "' in [" +
                              std::string(name_) + "]");
        return *e;
    }

    double number(std::string_view key) {
        const IniEntry& e = require(key);
        return parse_double(e.value, e.line);
    }
    double number(std::string_view key, double fallback) {
        const IniEntry* e = find(key);
        return e ? parse_double(e->value, e->line) : fallback;
    }
    long long integer(std::string_view key) {
        const IniEntry& e = require(key);
        return parse_int(e.value, e.line);
    }
    long long integer(std::string_view key, long long fallback) {
        const IniEntry* e = find(key);
        return e ? parse_int(e->value, e->line) : fallback;
    }
    bool boolean(std::string_view key, bool fallback) {
        const IniEntry* e = find(key);
        return e ? parse_bool(e->value, e->line) : fallback;
    }
    std::string text(std::string_view key) { return require(key).value; }
    std::string text(std::string_view key, std::string fallback) {
        const IniEntry* e = find(key);
        return e ? e->value : fallback;
    }

    std::vector<double> numbers(std::string_view key) {
        const IniEntry& e = require(key);
        std::vector<double> out;
        for (const std::string& tok : split_ws(e.value)) out.push_back(parse_double(tok, e.line));
        if (out.empty()) throw ConfigError("empty list for '" + std::string(key) + "'", e.line);
        return out;
    }
    std::vector<int> integers(std::string_view key, std::vector<int> fallback) {
        const IniEntry* e = find(key);
        if (!e) return fallback;
        std::vector<int> out;
        for (const std::string& tok : split_ws(e->value))
            out.push_back(static_cast<int>(parse_int(tok, e->line)));
        return out;
    }
    std::vector<Vec> rows(std::string_view key) {
        const IniEntry& e = require(key);
        std::vector<Vec> out;
        std::string_view rest = e.value;
        while (true) {
            const size_t semi = rest.find(';');
            const std::string_view part = trim(rest.substr(0, semi));
            Vec row;
            for (const std::string& tok : split_ws(part)) row.push_back(parse_double(tok, e.line));
            if (row.empty()) throw ConfigError("empty row in '" + std::string(key) + "'", e.line);
            out.push_back(std::move(row));
            if (semi == std::string_view::npos) break;
            rest.remove_prefix(semi + 1);
        }
        return out;
    }

    void finish() {
        if (!section_) return;
        for (const IniEntry& e : section_->entries)
            if (!consumed_.count(e.key))
                throw ConfigError("unknown key '" + e.key + "' in [" + std::string(name_) + "]",
                                  e.line);
    }

  private:
    const IniSection* section_ = nullptr;
    std::string_view name_;
    std::set<std::string> consumed_;
};

TargetSpec read_target(SectionReader& section) {
    TargetSpec spec;
    spec.weights = section.numbers("weights");
    spec.means = section.rows("means");
    spec.variances = section.rows("variances");
    return spec;
}

}  // namespace

const IniSection* IniDoc::find(std::string_view name) const {
    for (const IniSection& s : sections)
        if (s.name == name) return &s;
    return nullptr;
}

IniDoc parse_ini(std::string_view text) {
    IniDoc doc;
    int line_number = 0;
    size_t pos = 0;
    while (pos <= text.size()) {
        const size_t eol = text.find('\n', pos);
        std::string_view line = text.substr(pos, eol == std::string_view::npos ? eol : eol - pos);
        pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
        ++line_number;

        const size_t hash = line.find('#');
        if (hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;

        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError("unterminated section header", line_number);
            const std::string name{trim(line.substr(1, line.size() - 2))};
            if (name.empty()) throw ConfigError("empty section name", line_number);
            if (doc.find(name)) throw ConfigError("duplicate section [" + name + "]", line_number);
            doc.sections.push_back(IniSection{name, {}, line_number});
            continue;
        }
        const size_t eq = line.find('=');
        if (eq == std::string_view::npos)
            throw ConfigError("expected 'key = value'", line_number);
        if (doc.sections.empty())
            throw ConfigError("key outside of any section", line_number);
        const std::string key{trim(line.substr(0, eq))};
        if (key.empty()) throw ConfigError("empty key", line_number);
        doc.sections.back().entries.push_back(
            IniEntry{key, std::string(trim(line.substr(eq + 1))), line_number});
    }
    return doc;
}

GaussianMixture TargetSpec::build() const { return make_mixture(weights, means, variances); }

double ExperimentConfig::effective_terminal_mass() const {
    if (w_e_terminal_mass) return *w_e_terminal_mass;
    return default_terminal_mass(mdp.horizon, schedule.n);
}

SamplerEnv ExperimentConfig::build_env() const {
    GaussianMixture target_mixture = target.build();
    GaussianMixture expert_mixture = expert ? expert->build() : target.build();
    return make_env(std::move(target_mixture), std::move(expert_mixture), schedule.build(),
                    mdp.strategy, mdp.action_grid, mdp.renoise_span, mdp.horizon, mdp.nfe_budget);
}

int ExperimentConfig::safe_action_index() const {
    if (mdp.strategy == Strategy::Renoise) return 0;  // continue
    for (size_t i = 0; i < mdp.action_grid.size(); ++i)
        if (mdp.action_grid[i] == 0.0) return static_cast<int>(i);
    throw ConfigError("action_grid must include 0 (the heuristic no-op action)");
}

PolicySpec ExperimentConfig::build_policy_spec() const {
    PolicySpec spec;
    spec.family = policy.family;
    spec.action_count = mdp.strategy == Strategy::Renoise ? 1 + mdp.renoise_span
                                                          : static_cast<int>(mdp.action_grid.size());
    spec.num_levels = schedule.n + 1;
    spec.state_dim = static_cast<int>(target.means.front().size());
    const NoiseSchedule sched = schedule.build();
    spec.level_sigmas.resize(spec.num_levels);
    for (int k = 0; k <= sched.max_index(); ++k) spec.level_sigmas[k] = sched.sigma(k);
    spec.hidden = policy.widths;
    spec.safe_action = safe_action_index();
    spec.stationary = policy.stationary;
    spec.horizon = mdp.horizon;
    return spec;
}

ExperimentConfig parse_experiment_config(std::string_view text) {
    return parse_experiment_config(parse_ini(text), /*allow_extra_sections=*/false);
}

ExperimentConfig parse_experiment_config(const IniDoc& doc, bool allow_extra_sections) {
    static const std::set<std::string> known = {"target", "expert",        "schedule", "mdp",
                                                "run",    "discriminator", "learner",  "policy"};
    if (!allow_extra_sections)
        for (const IniSection& s : doc.sections)
            if (!known.count(s.name))
                throw ConfigError("unknown section [" + s.name + "]", s.line);

    ExperimentConfig cfg;
    {
        SectionReader s(doc, "target", true);
        cfg.target = read_target(s);
        s.finish();
    }
    {
        SectionReader s(doc, "expert", false);
        if (s.present()) {
            cfg.expert = read_target(s);
            s.finish();
        }
    }
    {
        SectionReader s(doc, "schedule", true);
        cfg.schedule.kind = schedule_kind_from_name(s.text("kind"));
        cfg.schedule.n = static_cast<int>(s.integer("n"));
        cfg.schedule.sigma_min = s.number("sigma_min");
        cfg.schedule.sigma_max = s.number("sigma_max");
        cfg.schedule.rho = s.number("rho", 7.0);
        cfg.schedule.coverage_factor = s.number("coverage_factor", 10.0);
        s.finish();
    }
    {
        SectionReader s(doc, "mdp", true);
        cfg.mdp.strategy = strategy_from_name(s.text("strategy"));
        cfg.mdp.horizon = static_cast<int>(s.integer("horizon"));
        cfg.mdp.nfe_budget = static_cast<int>(s.integer("nfe_budget", -1));
        cfg.mdp.renoise_span = static_cast<int>(s.integer("m", 4));
        if (cfg.mdp.strategy == Strategy::Renoise) {
            if (s.find("action_grid"))
                throw ConfigError("renoise does not take an action_grid (set m instead)");
        } else {
            cfg.mdp.action_grid = s.numbers("action_grid");
        }
        s.finish();
    }
    {
        SectionReader s(doc, "run", true);
        cfg.divergence = divergence_from_name(s.text("divergence"));
        cfg.seed = static_cast<uint64_t>(s.integer("seed", 1));
        if (s.find("w_e_terminal_mass")) {
            // re-read through the typed accessor for error reporting
            cfg.w_e_terminal_mass = s.number("w_e_terminal_mass");
            if (!(*cfg.w_e_terminal_mass > 0.0 && *cfg.w_e_terminal_mass < 1.0))
                throw ConfigError("w_e_terminal_mass must lie in (0, 1)");
        }
        cfg.out_dir = s.text("out_dir", "");
        s.finish();
    }
    {
        SectionReader s(doc, "learner", true);
        cfg.learner.n_epoch = static_cast<int>(s.integer("n_epoch"));
        cfg.learner.regen_every = static_cast<int>(s.integer("k", 1));
        cfg.learner.n_traj = static_cast<int>(s.integer("n_traj"));
        cfg.learner.ppo_epsilon = s.number("ppo_epsilon", 0.2);
        cfg.learner.lr = s.number("lr");
        cfg.learner.minibatch = static_cast<int>(s.integer("minibatch", 256));
        cfg.learner.ema_decay = s.number("ema_decay", 0.99);
        cfg.learner.normalize_signals = s.boolean("normalize_signals", false);
        s.finish();
        if (cfg.learner.n_epoch < 1 || cfg.learner.n_traj < 2 || cfg.learner.regen_every < 1)
            throw ConfigError("learner: n_epoch >= 1, n_traj >= 2 and k >= 1 required");
        if (!(cfg.learner.ppo_epsilon >= 0.0 && cfg.learner.ppo_epsilon < 1.0))
            throw ConfigError("learner: ppo_epsilon must lie in [0, 1)");
        if (!(cfg.learner.lr > 0.0)) throw ConfigError("learner: lr must be positive");
        if (cfg.learner.minibatch < 1) throw ConfigError("learner: minibatch must be >= 1");
        if (!(cfg.learner.ema_decay >= 0.0 && cfg.learner.ema_decay <= 1.0))
            throw ConfigError("learner: ema_decay must lie in [0, 1]");
    }
    {
        SectionReader s(doc, "discriminator", false);
        if (s.present()) {
            cfg.discriminator.widths = s.integers("widths", {64, 64});
            cfg.discriminator.dre_init_iters = static_cast<int>(s.integer("dre_init_iters", 100));
            cfg.discriminator.train_iters = static_cast<int>(s.integer("train_iters", 200));
            cfg.discriminator.batch = static_cast<int>(s.integer("batch", 128));
            cfg.discriminator.lr = s.number("lr", 1e-3);
            cfg.discriminator.label_smoothing = s.number("label_smoothing", 0.05);
            cfg.discriminator.smoothing_sigma_frac = s.number("smoothing_sigma_frac", 0.5);
            cfg.discriminator.ratio_clamp_min = s.number("ratio_clamp_min", 1e-3);
            cfg.discriminator.ratio_clamp_max = s.number("ratio_clamp_max", 1e3);
            cfg.discriminator.expert_per_level = static_cast<int>(s.integer("expert_per_level", 2048));
            s.finish();
            if (!(cfg.discriminator.ratio_clamp_min > 0.0) ||
                !(cfg.discriminator.ratio_clamp_max > cfg.discriminator.ratio_clamp_min))
                throw ConfigError("discriminator: bad ratio clamp bounds");
            if (!(cfg.discriminator.label_smoothing >= 0.0 &&
                  cfg.discriminator.label_smoothing < 0.5))
                throw ConfigError("discriminator: label_smoothing must lie in [0, 0.5)");
        }
    }
    {
        SectionReader s(doc, "policy", false);
        if (s.present()) {
            cfg.policy.family = policy_family_from_name(s.text("family", "sigma_only"));
            cfg.policy.widths = s.integers("widths", {64, 64});
            cfg.policy.heuristic = heuristic_from_name(s.text("heuristic", "safe"));
            cfg.policy.stationary = s.boolean("stationary", true);
            s.finish();
        }
    }

    // cross-checks
    if (cfg.mdp.strategy != Strategy::Renoise && cfg.mdp.horizon != cfg.schedule.n)
        throw ConfigError("gamma/guidance require horizon = n (one descent per step)");
    if (cfg.mdp.horizon < cfg.schedule.n)
        throw ConfigError("horizon must be at least the number of nonzero levels");
    (void)cfg.safe_action_index();
    // surface mixture/schedule problems at parse time
    (void)cfg.target.build();
    if (cfg.expert) (void)cfg.expert->build();
    (void)cfg.schedule.build();
    return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_experiment_config(buffer.str());
}

std::string format_double(double v) {
    char buf[64];
    for (int precision = 15; precision <= 17; ++precision) {
        std::snprintf(buf, sizeof(buf), "%.*g", precision, v);
        if (std::stod(buf) == v) break;
    }
    return buf;
}

namespace {

std::string format_rows(const std::vector<Vec>& rows) {
    std::string out;
    for (size_t r = 0; r < rows.size(); ++r) {
        if (r) out += " ; ";
        for (size_t j = 0; j < rows[r].size(); ++j) {
            if (j) out += ' ';
            out += format_double(rows[r][j]);
        }
    }
    return out;
}

std::string format_list(std::span<const double> values) {
    std::string out;
    for (size_t i = 0; i < values.size(); ++i) {
        if (i) out += ' ';
        out += format_double(values[i]);
    }
    return out;
}

std::string format_ints(std::span<const int> values) {
    std::string out;
    for (size_t i = 0; i < values.size(); ++i) {
        if (i) out += ' ';
        out += std::to_string(values[i]);
    }
    return out;
}

void emit_target(std::string& out, const char* name, const TargetSpec& t) {
    out += std::string("[") + name + "]\n";
    out += "weights = " + format_list(t.weights) + "\n";
    out += "means = " + format_rows(t.means) + "\n";
    out += "variances = " + format_rows(t.variances) + "\n\n";
}

}  // namespace

std::string emit_experiment_config(const ExperimentConfig& cfg) {
    std::string out;
    emit_target(out, "target", cfg.target);
    if (cfg.expert) emit_target(out, "expert", *cfg.expert);

    out += "[schedule]\n";
    out += std::string("kind = ") + schedule_kind_name(cfg.schedule.kind) + "\n";
    out += "n = " + std::to_string(cfg.schedule.n) + "\n";
    out += "sigma_min = " + format_double(cfg.schedule.sigma_min) + "\n";
    out += "sigma_max = " + format_double(cfg.schedule.sigma_max) + "\n";
    out += "rho = " + format_double(cfg.schedule.rho) + "\n";
    out += "coverage_factor = " + format_double(cfg.schedule.coverage_factor) + "\n\n";

    out += "[mdp]\n";
    out += std::string("strategy = ") + strategy_name(cfg.mdp.strategy) + "\n";
    out += "horizon = " + std::to_string(cfg.mdp.horizon) + "\n";
    out += "nfe_budget = " + std::to_string(cfg.mdp.nfe_budget) + "\n";
    if (cfg.mdp.strategy == Strategy::Renoise)
        out += "m = " + std::to_string(cfg.mdp.renoise_span) + "\n";
    else
        out += "action_grid = " + format_list(cfg.mdp.action_grid) + "\n";
    out += "\n[run]\n";
    out += std::string("divergence = ") + divergence_name(cfg.divergence) + "\n";
    out += "seed = " + std::to_string(cfg.seed) + "\n";
    if (cfg.w_e_terminal_mass)
        out += "w_e_terminal_mass = " + format_double(*cfg.w_e_terminal_mass) + "\n";
    if (!cfg.out_dir.empty()) out += "out_dir = " + cfg.out_dir + "\n";

    out += "\n[learner]\n";
    out += "n_epoch = " + std::to_string(cfg.learner.n_epoch) + "\n";
    out += "k = " + std::to_string(cfg.learner.regen_every) + "\n";
    out += "n_traj = " + std::to_string(cfg.learner.n_traj) + "\n";
    out += "ppo_epsilon = " + format_double(cfg.learner.ppo_epsilon) + "\n";
    out += "lr = " + format_double(cfg.learner.lr) + "\n";
    out += "minibatch = " + std::to_string(cfg.learner.minibatch) + "\n";
    out += "ema_decay = " + format_double(cfg.learner.ema_decay) + "\n";
    out += std::string("normalize_signals = ") +
           (cfg.learner.normalize_signals ? "true" : "false") + "\n";

    out += "\n[discriminator]\n";
    out += "widths = " + format_ints(cfg.discriminator.widths) + "\n";
    out += "dre_init_iters = " + std::to_string(cfg.discriminator.dre_init_iters) + "\n";
    out += "train_iters = " + std::to_string(cfg.discriminator.train_iters) + "\n";
    out += "batch = " + std::to_string(cfg.discriminator.batch) + "\n";
    out += "lr = " + format_double(cfg.discriminator.lr) + "\n";
    out += "label_smoothing = " + format_double(cfg.discriminator.label_smoothing) + "\n";
    out += "smoothing_sigma_frac = " + format_double(cfg.discriminator.smoothing_sigma_frac) + "\n";
    out += "ratio_clamp_min = " + format_double(cfg.discriminator.ratio_clamp_min) + "\n";
    out += "ratio_clamp_max = " + format_double(cfg.discriminator.ratio_clamp_max) + "\n";
    out += "expert_per_level = " + std::to_string(cfg.discriminator.expert_per_level) + "\n";

    out += "\n[policy]\n";
    out += std::string("family = ") + policy_family_name(cfg.policy.family) + "\n";
    out += "widths = " + format_ints(cfg.policy.widths) + "\n";
    out += std::string("heuristic = ") + heuristic_name(cfg.policy.heuristic) + "\n";
    out += std::string("stationary = ") + (cfg.policy.stationary ? "true" : "false") + "\n";
    return out;
}

}  // namespace samplerl
