#include "oazr/synthdata.hpp"

#include <cmath>
#include <stdexcept>

namespace oazr {

namespace {
constexpr double kPi = 3.141592653589793238462643383279502884;
constexpr double kTwoPi = 2.0 * kPi;

constexpr double kUpperArm = 0.28;
constexpr double kForearm = 0.26;
constexpr double kThigh = 0.45;
constexpr double kShank = 0.42;
}  // namespace

const char* generator_name(GeneratorId id) {
    switch (id) {
        case GeneratorId::wave: return "wave";
        case GeneratorId::raise_arm: return "raise_arm";
        case GeneratorId::squat: return "squat";
        case GeneratorId::jumping_jack: return "jumping_jack";
        case GeneratorId::point: return "point";
        case GeneratorId::march: return "march";
    }
    throw std::invalid_argument("generator_name: unknown id");
}

GeneratorId generator_from_name(const std::string& name) {
    for (GeneratorId id : {GeneratorId::wave, GeneratorId::raise_arm, GeneratorId::squat,
                           GeneratorId::jumping_jack, GeneratorId::point, GeneratorId::march})
        if (name == generator_name(id)) return id;
    throw std::invalid_argument("unknown generator id: " + name);
}

void ActionSpec::validate() const {
    if (name.empty()) throw std::invalid_argument("action spec: empty name");
    if (!(amp_lo > 0 && amp_hi >= amp_lo)) throw std::invalid_argument("action spec: bad amplitude range");
    if (!(freq_lo > 0 && freq_hi >= freq_lo)) throw std::invalid_argument("action spec: bad frequency range");
    if (!(dur_lo > 0 && dur_hi >= dur_lo)) throw std::invalid_argument("action spec: bad duration range");
    if (!(fps >= 10)) throw std::invalid_argument("action spec: fps must be >= 10");
}

std::vector<Vec3> rest_pose() {
    std::vector<Vec3> p(kJoints);
    p[kNose] = {0.00, -0.09, 1.62};
    p[kLeftEye] = {0.04, -0.085, 1.66};
    p[kRightEye] = {-0.04, -0.085, 1.66};
    p[kLeftEar] = {0.08, -0.02, 1.64};
    p[kRightEar] = {-0.08, -0.02, 1.64};
    p[kLeftShoulder] = {0.18, 0.0, 1.45};
    p[kRightShoulder] = {-0.18, 0.0, 1.45};
    p[kLeftElbow] = {0.24, 0.0, 1.18};
    p[kRightElbow] = {-0.24, 0.0, 1.18};
    p[kLeftWrist] = {0.26, 0.0, 0.93};
    p[kRightWrist] = {-0.26, 0.0, 0.93};
    p[kLeftHip] = {0.10, 0.0, 0.92};
    p[kRightHip] = {-0.10, 0.0, 0.92};
    p[kLeftKnee] = {0.11, 0.0, 0.50};
    p[kRightKnee] = {-0.11, 0.0, 0.50};
    p[kLeftAnkle] = {0.12, 0.0, 0.08};
    p[kRightAnkle] = {-0.12, 0.0, 0.08};
    return p;
}

namespace {

struct SampledParams {
    double amp, freq, phase, duration;
    int frames;
};

SampledParams sample_params(const ActionSpec& spec, Rng& rng) {
    SampledParams s;
    s.amp = rng.uniform(spec.amp_lo, spec.amp_hi);
    s.freq = rng.uniform(spec.freq_lo, spec.freq_hi);
    s.duration = rng.uniform(spec.dur_lo, spec.dur_hi);
    s.phase = rng.uniform(0.0, kTwoPi);
    s.frames = std::max(2, static_cast<int>(std::lround(s.duration * spec.fps)));
    return s;
}

// One kinematic template frame at time tau (seconds), canonical orientation.
void pose_at(GeneratorId id, const SampledParams& sp, double tau, std::vector<Vec3>& pose) {
    pose = rest_pose();
    const double w = kTwoPi * sp.freq;

    switch (id) {
        case GeneratorId::wave: {
            // raised right forearm swings laterally about the elbow by +-amp
            const Vec3 shoulder = pose[kRightShoulder];
            const Vec3 elbow = shoulder + Vec3{-0.12, 0.0, 0.10};
            const double a = sp.amp * std::sin(w * tau + sp.phase);
            pose[kRightElbow] = elbow;
            pose[kRightWrist] = elbow + Vec3{std::sin(a), 0.0, std::cos(a)} * kForearm;
            break;
        }
        case GeneratorId::raise_arm: {
            // straight right arm sweeps in the frontal plane from down to up
            const double g = sp.amp * 0.5 * (1.0 - std::cos(w * tau + sp.phase));
            const Vec3 dir{-std::sin(g), 0.0, -std::cos(g)};
            pose[kRightElbow] = pose[kRightShoulder] + dir * kUpperArm;
            pose[kRightWrist] = pose[kRightElbow] + dir * kForearm;
            break;
        }
        case GeneratorId::squat: {
            const double d = sp.amp * 0.5 * (1.0 - std::cos(w * tau + sp.phase));
            for (int j : {kNose, kLeftEye, kRightEye, kLeftEar, kRightEar, kLeftShoulder,
                          kRightShoulder, kLeftElbow, kRightElbow, kLeftWrist, kRightWrist,
                          kLeftHip, kRightHip})
                pose[static_cast<size_t>(j)].z -= d;
            for (int j : {kLeftKnee, kRightKnee}) {
                pose[static_cast<size_t>(j)].z -= 0.45 * d;
                pose[static_cast<size_t>(j)].y -= 0.5 * d;  // knees bend toward the front
            }
            break;
        }
        case GeneratorId::jumping_jack: {
            const double g = kPi * 0.5 * (1.0 - std::cos(w * tau + sp.phase));
            const Vec3 dl{std::sin(g), 0.0, -std::cos(g)};
            const Vec3 dr{-std::sin(g), 0.0, -std::cos(g)};
            pose[kLeftElbow] = pose[kLeftShoulder] + dl * kUpperArm;
            pose[kLeftWrist] = pose[kLeftElbow] + dl * kForearm;
            pose[kRightElbow] = pose[kRightShoulder] + dr * kUpperArm;
            pose[kRightWrist] = pose[kRightElbow] + dr * kForearm;
            const double s = sp.amp * 0.5 * (1.0 - std::cos(w * tau + sp.phase));
            pose[kLeftAnkle].x += s;
            pose[kRightAnkle].x -= s;
            pose[kLeftKnee].x += 0.5 * s;
            pose[kRightKnee].x -= 0.5 * s;
            break;
        }
        case GeneratorId::point: {
            // right arm extends forward (sagittal plane)
            const double g = sp.amp * 0.5 * (1.0 - std::cos(w * tau + sp.phase));
            const Vec3 dir{0.0, -std::sin(g), -std::cos(g)};
            pose[kRightElbow] = pose[kRightShoulder] + dir * kUpperArm;
            pose[kRightWrist] = pose[kRightElbow] + dir * kForearm;
            break;
        }
        case GeneratorId::march: {
            const double s = std::sin(w * tau + sp.phase);
            const double gl = sp.amp * std::max(0.0, s);
            const double gr = sp.amp * std::max(0.0, -s);
            const Vec3 dl{0.0, -std::sin(gl), -std::cos(gl)};
            const Vec3 dr{0.0, -std::sin(gr), -std::cos(gr)};
            pose[kLeftKnee] = pose[kLeftHip] + dl * kThigh;
            pose[kLeftAnkle] = pose[kLeftKnee] + Vec3{0.0, 0.0, -kShank};
            pose[kRightKnee] = pose[kRightHip] + dr * kThigh;
            pose[kRightAnkle] = pose[kRightKnee] + Vec3{0.0, 0.0, -kShank};
            break;
        }
    }
}

Vec3 rotate_z(const Vec3& p, double yaw_rad) {
    const double c = std::cos(yaw_rad), s = std::sin(yaw_rad);
    return {p.x * c - p.y * s, p.x * s + p.y * c, p.z};
}

}  // namespace

MotionSequence3D gen_action(const ActionSpec& spec, double yaw_deg, Rng& rng) {
    spec.validate();
    const SampledParams sp = sample_params(spec, rng);
    const double yaw_rad = yaw_deg * kPi / 180.0;

    MotionSequence3D motion;
    motion.frames = sp.frames;
    motion.fps = spec.fps;
    motion.label = spec.name;
    motion.joints.resize(static_cast<size_t>(sp.frames) * kJoints * 3);

    std::vector<Vec3> pose;
    for (int t = 0; t < sp.frames; ++t) {
        pose_at(spec.generator, sp, t / spec.fps, pose);
        for (int j = 0; j < kJoints; ++j) motion.set(t, j, rotate_z(pose[static_cast<size_t>(j)], yaw_rad));
    }
    return motion;
}

SyntheticDataset gen_dataset(const std::vector<ActionSpec>& specs, int per_class,
                             YawDistribution yaw_dist, uint64_t root_seed) {
    if (per_class < 1) throw std::invalid_argument("gen_dataset: per_class must be >= 1");
    if (specs.size() < 2) throw std::invalid_argument("gen_dataset: need at least 2 action specs");
    for (const ActionSpec& s : specs) s.validate();

    SyntheticDataset ds;
    ds.root_seed = root_seed;
    const Rng root(root_seed);
    for (size_t c = 0; c < specs.size(); ++c) {
        ds.classes.push_back(specs[c].name);
        const Rng class_stream = root.derive(specs[c].name);
        for (int k = 0; k < per_class; ++k) {
            Rng rng = class_stream.derive(static_cast<uint64_t>(k));
            double yaw = 0.0;
            if (yaw_dist == YawDistribution::continuous_uniform) {
                yaw = rng.uniform(-180.0, 180.0);
            } else {
                yaw = kOrientationBins[rng.uniform_int(kOrientationBins.size())];
            }
            MotionSequence3D m = gen_action(specs[c], yaw, rng);
            m.subject = specs[c].name + "-" + std::to_string(k);
            ds.motions.push_back(std::move(m));
        }
        ds.per_class_counts[specs[c].name] = per_class;
    }
    return ds;
}

std::vector<ActionSpec> default_action_specs() {
    std::vector<ActionSpec> specs;
    auto add = [&](GeneratorId id, double a0, double a1, double f0, double f1) {
        ActionSpec s;
        s.name = generator_name(id);
        s.generator = id;
        s.amp_lo = a0;
        s.amp_hi = a1;
        s.freq_lo = f0;
        s.freq_hi = f1;
        s.dur_lo = 3.0;
        s.dur_hi = 5.0;
        s.fps = 30.0;
        specs.push_back(s);
    };
    add(GeneratorId::wave, 0.5, 0.9, 1.2, 2.0);          // radians, lateral forearm swing
    add(GeneratorId::raise_arm, 2.2, 2.9, 0.3, 0.6);     // radians, frontal sweep
    add(GeneratorId::squat, 0.25, 0.40, 0.4, 0.8);       // meters, vertical drop
    add(GeneratorId::jumping_jack, 0.20, 0.35, 0.8, 1.4);  // meters, leg spread
    add(GeneratorId::point, 1.2, 1.6, 0.3, 0.6);         // radians, sagittal sweep
    add(GeneratorId::march, 0.6, 1.0, 0.8, 1.4);         // radians, alternating thigh lift
    return specs;
}

}  // namespace oazr
