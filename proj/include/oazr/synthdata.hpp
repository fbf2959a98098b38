#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "oazr/geometry.hpp"

namespace oazr {

enum class GeneratorId { wave, raise_arm, squat, jumping_jack, point, march };

const char* generator_name(GeneratorId id);
GeneratorId generator_from_name(const std::string& name);  // throws on unknown id

struct ActionSpec {
    std::string name;
    GeneratorId generator = GeneratorId::wave;
    double amp_lo = 0, amp_hi = 0;    // radians or meters, generator-specific
    double freq_lo = 0, freq_hi = 0;  // Hz
    double dur_lo = 0, dur_hi = 0;    // seconds
    double fps = 30.0;

    void validate() const;
};

struct SyntheticDataset {
    std::vector<MotionSequence3D> motions;
    std::vector<std::string> classes;
    std::map<std::string, int> per_class_counts;
    uint64_t root_seed = 0;
};

enum class YawDistribution { continuous_uniform, bins_uniform };

// Canonical upright COCO-17 rest pose (meters): facing -y, left side at +x.
std::vector<Vec3> rest_pose();

MotionSequence3D gen_action(const ActionSpec& spec, double yaw_deg, Rng& rng);

SyntheticDataset gen_dataset(const std::vector<ActionSpec>& specs, int per_class,
                             YawDistribution yaw_dist, uint64_t root_seed);

// The six stock generators with their sampling ranges.
std::vector<ActionSpec> default_action_specs();

}  // namespace oazr
