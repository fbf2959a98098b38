#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "oazr/rng.hpp"

namespace oazr {

struct Vec3 {
    double x = 0, y = 0, z = 0;

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
    Vec3 cross(const Vec3& o) const {
        return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
    }
    double norm() const;
    Vec3 normalized() const;
};

// COCO-17 joint order.
enum CocoJoint : int {
    kNose = 0,
    kLeftEye = 1,
    kRightEye = 2,
    kLeftEar = 3,
    kRightEar = 4,
    kLeftShoulder = 5,
    kRightShoulder = 6,
    kLeftElbow = 7,
    kRightElbow = 8,
    kLeftWrist = 9,
    kRightWrist = 10,
    kLeftHip = 11,
    kRightHip = 12,
    kLeftKnee = 13,
    kRightKnee = 14,
    kLeftAnkle = 15,
    kRightAnkle = 16,
};
constexpr int kJoints = 17;

// Limb joints are the only ones subject to the torso-plane occlusion test.
bool is_limb_joint(int j);

// TxJx3 joint trajectory in meters.
struct MotionSequence3D {
    int frames = 0;
    std::vector<double> joints;  // frames * 17 * 3, row-major (t, j, xyz)
    double fps = 30.0;
    std::string label;
    std::string subject;  // optional; empty = absent

    Vec3 at(int t, int j) const {
        const size_t o = (static_cast<size_t>(t) * kJoints + j) * 3;
        return {joints[o], joints[o + 1], joints[o + 2]};
    }
    void set(int t, int j, const Vec3& p) {
        const size_t o = (static_cast<size_t>(t) * kJoints + j) * 3;
        joints[o] = p.x;
        joints[o + 1] = p.y;
        joints[o + 2] = p.z;
    }
    void validate() const;  // T >= 2, finite, correct size
};

struct CameraIntrinsics {
    double focal = 1000.0;  // pixels
    double cx = 512.0;
    double cy = 512.0;
};

// Pinhole camera on the rig circle, looking at the rig target. The yaw is the
// bearing of the camera position around the target (yaw 0 sits on the -y side
// of the target and looks toward +y).
struct VirtualCamera {
    Vec3 position;
    double yaw_deg = 0.0;
    CameraIntrinsics intrinsics;
    // look-at basis: image right / image down / optical axis
    Vec3 right, down, forward;
};

struct CameraRig {
    std::vector<VirtualCamera> cameras;  // exactly 12, yaw -180..150 step 30
    double radius = 3.0;
    double height = 1.5;
    Vec3 target;
};

// Ordered shoulder-left, shoulder-right, hip-right, hip-left at one frame.
struct TorsoPlane {
    std::array<Vec3, 4> quad;
};

struct ProjectedView {
    int frames = 0;
    std::vector<double> joints2d;     // frames * 17 * 2 (pixels), zero where invisible
    std::vector<uint8_t> visibility;  // frames * 17, 0/1
    double theta_deg = 0.0;           // body orientation bin for this view
    int view_index = -1;
    std::string label;
    int degenerate_torso_frames = 0;  // diagnostics only, not serialized

    double u(int t, int j) const { return joints2d[(static_cast<size_t>(t) * kJoints + j) * 2]; }
    double v(int t, int j) const { return joints2d[(static_cast<size_t>(t) * kJoints + j) * 2 + 1]; }
    bool visible(int t, int j) const { return visibility[static_cast<size_t>(t) * kJoints + j] != 0; }
};

struct NoiseParams {
    double p_outlier = 0.05;
    double sigma = 2.0;        // pixels
    double bbox_margin = 0.1;  // expansion of the outlier support box
    void validate() const;
};

// --- operations --------------------------------------------------------------

extern const std::vector<int> kOrientationBins;  // -180, -150, ..., 150

CameraRig build_camera_rig(double radius, double height, const Vec3& target,
                           const CameraIntrinsics& intrinsics);

// Continuous yaw (degrees) of the viewpoint whose optical axis is orthogonal
// to the frame-0 hip-to-hip vector, facing the body front.
double reference_yaw(const MotionSequence3D& motion);

// Nearest bin in {-180,...,150} with wraparound; ties go to the smaller value.
int assign_orientation_bin(double yaw_deg);

bool occlusion_test(const Vec3& camera_pos, const Vec3& joint_pos, const TorsoPlane& torso,
                    bool* degenerate = nullptr);

ProjectedView project_motion(const MotionSequence3D& motion, const VirtualCamera& camera);

MotionSequence3D uniform_sample_frames(const MotionSequence3D& motion, int n, Rng& rng);

ProjectedView corrupt_2d(const ProjectedView& view, const NoiseParams& params, Rng& rng);

std::vector<ProjectedView> render_all_views(const MotionSequence3D& motion, const CameraRig& rig,
                                            const NoiseParams& params, Rng& rng,
                                            std::vector<std::string>* warnings = nullptr);

}  // namespace oazr
