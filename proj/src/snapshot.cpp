#include "samplerl/snapshot.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace samplerl {

namespace {

constexpr int kValuesPerLine = 64;

std::string hexfloat(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%a", v);
    return buf;
}

void emit_params(std::string& out, std::span<const double> params) {
    out += "\n[params]\n";
    out += "count = " + std::to_string(params.size()) + "\n";
    for (size_t start = 0, row = 0; start < params.size(); start += kValuesPerLine, ++row) {
        out += "data_" + std::to_string(row) + " =";
        const size_t stop = std::min(params.size(), start + kValuesPerLine);
        for (size_t i = start; i < stop; ++i) {
            out += ' ';
            out += hexfloat(params[i]);
        }
        out += '\n';
    }
}

std::vector<double> read_params(const IniDoc& doc) {
    const IniSection* section = doc.find("params");
    if (!section) throw ConfigError("snapshot: missing [params] section");
    size_t count = 0;
    std::vector<std::pair<int, std::string>> rows;
    for (const IniEntry& e : section->entries) {
        if (e.key == "count") {
            count = std::stoull(e.value);
        } else if (e.key.rfind("data_", 0) == 0) {
            rows.emplace_back(std::stoi(e.key.substr(5)), e.value);
        } else {
            throw ConfigError("snapshot: unknown key '" + e.key + "' in [params]", e.line);
        }
    }
    std::sort(rows.begin(), rows.end());
    std::vector<double> params;
    params.reserve(count);
    for (const auto& [row, text] : rows) {
        std::istringstream stream(text);
        std::string token;
        while (stream >> token) {
            char* end = nullptr;
            const double v = std::strtod(token.c_str(), &end);
            if (end == token.c_str() || *end != '\0')
                throw ConfigError("snapshot: bad parameter literal '" + token + "'");
            params.push_back(v);
        }
    }
    if (params.size() != count) throw ConfigError("snapshot: parameter count mismatch");
    return params;
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write file: " + path);
    out << content;
}

IniDoc read_doc(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open snapshot: " + path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_ini(buffer.str());
}

std::string snapshot_header(const ExperimentConfig& config, SnapshotKind kind) {
    std::string out = "[snapshot]\n";
    out += std::string("kind = ") + snapshot_kind_name(kind) + "\n";
    out += "format = 1\n";
    char hash[32];
    std::snprintf(hash, sizeof(hash), "%016llx",
                  static_cast<unsigned long long>(schedule_hash(config.schedule.build())));
    out += std::string("schedule_hash = ") + hash + "\n\n";
    out += emit_experiment_config(config);
    return out;
}

SnapshotKind kind_from_doc(const IniDoc& doc) {
    const IniSection* section = doc.find("snapshot");
    if (!section) throw ConfigError("snapshot: missing [snapshot] section");
    for (const IniEntry& e : section->entries) {
        if (e.key != "kind") continue;
        if (e.value == "policy") return SnapshotKind::Policy;
        if (e.value == "ema") return SnapshotKind::Ema;
        if (e.value == "discriminator") return SnapshotKind::Discriminator;
        throw ConfigError("snapshot: unknown kind '" + e.value + "'", e.line);
    }
    throw ConfigError("snapshot: missing kind");
}

}  // namespace

const char* snapshot_kind_name(SnapshotKind kind) {
    switch (kind) {
        case SnapshotKind::Policy: return "policy";
        case SnapshotKind::Ema: return "ema";
        case SnapshotKind::Discriminator: return "discriminator";
    }
    return "?";
}

void save_policy_snapshot(const std::string& path, const ExperimentConfig& config,
                          const Policy& policy, SnapshotKind kind) {
    if (kind == SnapshotKind::Discriminator)
        throw std::invalid_argument("save_policy_snapshot: wrong kind");
    std::string out = snapshot_header(config, kind);
    emit_params(out, policy.params());
    write_file(path, out);
}

void save_discriminator_snapshot(const std::string& path, const ExperimentConfig& config,
                                 const Discriminator& disc) {
    std::string out = snapshot_header(config, SnapshotKind::Discriminator);
    emit_params(out, disc.net().params());
    write_file(path, out);
}

LoadedPolicy load_policy_snapshot(const std::string& path) {
    const IniDoc doc = read_doc(path);
    LoadedPolicy loaded;
    loaded.kind = kind_from_doc(doc);
    if (loaded.kind == SnapshotKind::Discriminator)
        throw ConfigError("snapshot: expected a policy snapshot, found a discriminator");
    loaded.config = parse_experiment_config(doc, /*allow_extra_sections=*/true);
    const std::vector<double> params = read_params(doc);

    Rng dummy(0);
    loaded.policy =
        Policy::init(loaded.config.build_policy_spec(), loaded.config.policy.heuristic, dummy);
    if (params.size() != static_cast<size_t>(loaded.policy.num_params()))
        throw ConfigError("snapshot: parameter size does not match the configured policy");
    loaded.policy.set_params(params);
    return loaded;
}

LoadedDiscriminator load_discriminator_snapshot(const std::string& path) {
    const IniDoc doc = read_doc(path);
    if (kind_from_doc(doc) != SnapshotKind::Discriminator)
        throw ConfigError("snapshot: expected a discriminator snapshot");
    LoadedDiscriminator loaded;
    loaded.config = parse_experiment_config(doc, /*allow_extra_sections=*/true);
    const std::vector<double> params = read_params(doc);

    Rng dummy(0);
    loaded.discriminator = Discriminator::init(
        static_cast<int>(loaded.config.target.means.front().size()),
        loaded.config.discriminator.widths, dummy);
    if (params.size() != loaded.discriminator.net().params().size())
        throw ConfigError("snapshot: parameter size does not match the configured discriminator");
    std::copy(params.begin(), params.end(), loaded.discriminator.net().params().begin());
    return loaded;
}

}  // namespace samplerl
