#ifndef SAMPLERL_SNAPSHOT_HPP_
#define SAMPLERL_SNAPSHOT_HPP_

#include <string>

#include "samplerl/config.hpp"
#include "samplerl/policy.hpp"
#include "samplerl/ratio.hpp"

namespace samplerl {

enum class SnapshotKind { Policy, Ema, Discriminator };

const char* snapshot_kind_name(SnapshotKind kind);

// Snapshots are the same sectioned text as configs, with [snapshot] metadata
// and hexfloat [params] appended; they embed the full experiment config so a
// policy file alone can rebuild its environment. Round-trips are bit-exact.
void save_policy_snapshot(const std::string& path, const ExperimentConfig& config,
                          const Policy& policy, SnapshotKind kind);
void save_discriminator_snapshot(const std::string& path, const ExperimentConfig& config,
                                 const Discriminator& disc);

struct LoadedPolicy {
    ExperimentConfig config;
    Policy policy;
    SnapshotKind kind = SnapshotKind::Policy;
};

struct LoadedDiscriminator {
    ExperimentConfig config;
    Discriminator discriminator;
};

LoadedPolicy load_policy_snapshot(const std::string& path);
LoadedDiscriminator load_discriminator_snapshot(const std::string& path);

}  // namespace samplerl

#endif  // SAMPLERL_SNAPSHOT_HPP_
