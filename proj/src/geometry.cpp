#include "oazr/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "oazr/error.hpp"

namespace oazr {

namespace {
constexpr double kPi = 3.141592653589793238462643383279502884;
constexpr double kDegToRad = kPi / 180.0;

double wrap_deg(double deg) {
    double w = std::fmod(deg, 360.0);
    if (w <= -180.0) w += 360.0;
    if (w > 180.0) w -= 360.0;
    return w;
}
}  // namespace

double Vec3::norm() const { return std::sqrt(x * x + y * y + z * z); }

Vec3 Vec3::normalized() const {
    const double n = norm();
    if (n < 1e-12) throw DegenerateInput("normalized: zero-length vector");
    return {x / n, y / n, z / n};
}

bool is_limb_joint(int j) {
    switch (j) {
        case kLeftElbow:
        case kRightElbow:
        case kLeftWrist:
        case kRightWrist:
        case kLeftKnee:
        case kRightKnee:
        case kLeftAnkle:
        case kRightAnkle:
            return true;
        default:
            return false;
    }
}

void MotionSequence3D::validate() const {
    if (frames < 2) throw std::invalid_argument("motion: needs at least 2 frames");
    if (joints.size() != static_cast<size_t>(frames) * kJoints * 3)
        throw std::invalid_argument("motion: joint buffer size mismatch");
    for (double v : joints)
        if (!std::isfinite(v)) throw std::invalid_argument("motion: non-finite coordinate");
}

void NoiseParams::validate() const {
    if (!(p_outlier >= 0.0 && p_outlier <= 1.0))
        throw std::invalid_argument("noise: p_outlier must be in [0,1]");
    if (!(sigma >= 0.0)) throw std::invalid_argument("noise: sigma must be >= 0");
    if (!std::isfinite(bbox_margin) || bbox_margin < 0.0)
        throw std::invalid_argument("noise: bbox_margin must be >= 0");
}

const std::vector<int> kOrientationBins = {-180, -150, -120, -90, -60, -30,
                                           0,    30,   60,   90,  120, 150};

CameraRig build_camera_rig(double radius, double height, const Vec3& target,
                           const CameraIntrinsics& intrinsics) {
    if (!(radius > 0.0)) throw std::invalid_argument("rig: radius must be positive");
    if (!(intrinsics.focal > 0.0)) throw std::invalid_argument("rig: focal length must be positive");
    CameraRig rig;
    rig.radius = radius;
    rig.height = height;
    rig.target = target;
    rig.cameras.reserve(kOrientationBins.size());
    for (int yaw : kOrientationBins) {
        VirtualCamera cam;
        cam.yaw_deg = yaw;
        cam.intrinsics = intrinsics;
        const double a = yaw * kDegToRad;
        cam.position = {target.x + radius * std::sin(a), target.y - radius * std::cos(a), height};
        cam.forward = (target - cam.position).normalized();
        // horizontal rig circle keeps the axis off vertical, so this is safe
        cam.right = cam.forward.cross(Vec3{0, 0, 1}).normalized();
        cam.down = cam.forward.cross(cam.right);
        rig.cameras.push_back(cam);
    }
    return rig;
}

double reference_yaw(const MotionSequence3D& motion) {
    if (motion.frames < 1) throw std::invalid_argument("reference_yaw: empty motion");
    const Vec3 hl = motion.at(0, kLeftHip);
    const Vec3 hr = motion.at(0, kRightHip);
    if (!(std::isfinite(hl.x) && std::isfinite(hr.x)))
        throw std::invalid_argument("reference_yaw: non-finite hips");
    const Vec3 hips = hr - hl;
    if (std::hypot(hips.x, hips.y) < 1e-9)
        throw DegenerateInput("reference_yaw: coincident hip joints");
    // body front = up x (right_hip - left_hip)
    const Vec3 front = Vec3{0, 0, 1}.cross(hips);
    return std::atan2(front.x, -front.y) / kDegToRad;
}

int assign_orientation_bin(double yaw_deg) {
    if (!std::isfinite(yaw_deg)) throw std::invalid_argument("orientation bin: non-finite angle");
    int best = kOrientationBins[0];
    double best_dist = std::numeric_limits<double>::infinity();
    for (int bin : kOrientationBins) {
        const double d = std::abs(wrap_deg(yaw_deg - bin));
        if (d < best_dist) {  // ties keep the earlier (smaller) bin
            best_dist = d;
            best = bin;
        }
    }
    return best;
}

namespace {

double triangle_area(const Vec3& a, const Vec3& b, const Vec3& c) {
    return 0.5 * (b - a).cross(c - a).norm();
}

// Moller-Trumbore; returns true when the open segment p0->p1 crosses the
// triangle (intersection strictly inside the segment, barycentrics inclusive).
bool segment_hits_triangle(const Vec3& p0, const Vec3& p1, const Vec3& a, const Vec3& b,
                           const Vec3& c) {
    const Vec3 dir = p1 - p0;
    const Vec3 e1 = b - a;
    const Vec3 e2 = c - a;
    const Vec3 pv = dir.cross(e2);
    const double det = e1.dot(pv);
    if (std::abs(det) < 1e-14) return false;  // parallel
    const double inv = 1.0 / det;
    const Vec3 tv = p0 - a;
    const double u = tv.dot(pv) * inv;
    if (u < 0.0 || u > 1.0) return false;
    const Vec3 qv = tv.cross(e1);
    const double v = dir.dot(qv) * inv;
    if (v < 0.0 || u + v > 1.0) return false;
    const double t = e2.dot(qv) * inv;
    return t > 0.0 && t < 1.0;
}

}  // namespace

bool occlusion_test(const Vec3& camera_pos, const Vec3& joint_pos, const TorsoPlane& torso,
                    bool* degenerate) {
    if ((joint_pos - camera_pos).norm() < 1e-12)
        throw std::invalid_argument("occlusion_test: camera and joint coincide");
    const Vec3& sl = torso.quad[0];
    const Vec3& sr = torso.quad[1];
    const Vec3& hr = torso.quad[2];
    const Vec3& hl = torso.quad[3];
    const double area = triangle_area(sl, sr, hr) + triangle_area(sl, hr, hl);
    if (degenerate) *degenerate = false;
    if (area < 1e-8) {
        if (degenerate) *degenerate = true;
        return true;  // degenerate torso: treated as fully visible
    }
    if (segment_hits_triangle(camera_pos, joint_pos, sl, sr, hr)) return false;
    if (segment_hits_triangle(camera_pos, joint_pos, sl, hr, hl)) return false;
    return true;
}

ProjectedView project_motion(const MotionSequence3D& motion, const VirtualCamera& camera) {
    if (motion.frames < 1) throw std::invalid_argument("project_motion: empty motion");
    ProjectedView view;
    view.frames = motion.frames;
    view.joints2d.assign(static_cast<size_t>(motion.frames) * kJoints * 2, 0.0);
    view.visibility.assign(static_cast<size_t>(motion.frames) * kJoints, 0);
    view.label = motion.label;

    bool any_in_front = false;
    for (int t = 0; t < motion.frames; ++t) {
        const TorsoPlane torso{{motion.at(t, kLeftShoulder), motion.at(t, kRightShoulder),
                                motion.at(t, kRightHip), motion.at(t, kLeftHip)}};
        for (int j = 0; j < kJoints; ++j) {
            const Vec3 p = motion.at(t, j);
            const Vec3 q = p - camera.position;
            const double z = q.dot(camera.forward);
            if (z <= 0.0) continue;  // behind the camera: invisible, zero-filled
            any_in_front = true;
            if (is_limb_joint(j)) {
                bool degenerate = false;
                const bool vis = occlusion_test(camera.position, p, torso, &degenerate);
                if (degenerate) ++view.degenerate_torso_frames;
                if (!vis) continue;
            }
            const double u = camera.intrinsics.focal * q.dot(camera.right) / z + camera.intrinsics.cx;
            const double v = camera.intrinsics.focal * q.dot(camera.down) / z + camera.intrinsics.cy;
            view.joints2d[(static_cast<size_t>(t) * kJoints + j) * 2] = u;
            view.joints2d[(static_cast<size_t>(t) * kJoints + j) * 2 + 1] = v;
            view.visibility[static_cast<size_t>(t) * kJoints + j] = 1;
        }
    }
    if (!any_in_front) throw DegenerateInput("project_motion: all frames behind camera");
    return view;
}

MotionSequence3D uniform_sample_frames(const MotionSequence3D& motion, int n, Rng& rng) {
    if (motion.frames < 1) throw std::invalid_argument("uniform_sample_frames: empty motion");
    if (n < 1) throw std::invalid_argument("uniform_sample_frames: n must be >= 1");
    MotionSequence3D out;
    out.frames = n;
    out.fps = motion.fps;
    out.label = motion.label;
    out.subject = motion.subject;
    out.joints.resize(static_cast<size_t>(n) * kJoints * 3);
    const double t = static_cast<double>(motion.frames);
    for (int k = 0; k < n; ++k) {
        const double lo = t * k / n;
        const double hi = t * (k + 1) / n;
        int idx = static_cast<int>(std::floor(rng.uniform(lo, hi)));
        idx = std::clamp(idx, 0, motion.frames - 1);
        std::copy_n(motion.joints.begin() + static_cast<size_t>(idx) * kJoints * 3, kJoints * 3,
                    out.joints.begin() + static_cast<size_t>(k) * kJoints * 3);
    }
    return out;
}

ProjectedView corrupt_2d(const ProjectedView& view, const NoiseParams& params, Rng& rng) {
    params.validate();
    ProjectedView out = view;

    // outlier support: bounding box of the visible joints over the sequence,
    // expanded by bbox_margin on each side
    double min_x = std::numeric_limits<double>::infinity(), max_x = -min_x;
    double min_y = min_x, max_y = -min_x;
    bool any = false;
    for (int t = 0; t < view.frames; ++t)
        for (int j = 0; j < kJoints; ++j)
            if (view.visible(t, j)) {
                any = true;
                min_x = std::min(min_x, view.u(t, j));
                max_x = std::max(max_x, view.u(t, j));
                min_y = std::min(min_y, view.v(t, j));
                max_y = std::max(max_y, view.v(t, j));
            }
    if (!any) return out;
    const double mx = params.bbox_margin * (max_x - min_x);
    const double my = params.bbox_margin * (max_y - min_y);
    const double lo_x = min_x - mx, hi_x = max_x + mx;
    const double lo_y = min_y - my, hi_y = max_y + my;

    for (int t = 0; t < view.frames; ++t)
        for (int j = 0; j < kJoints; ++j) {
            if (!view.visible(t, j)) continue;
            const size_t o = (static_cast<size_t>(t) * kJoints + j) * 2;
            if (rng.uniform() < params.p_outlier) {
                out.joints2d[o] = rng.uniform(lo_x, hi_x);
                out.joints2d[o + 1] = rng.uniform(lo_y, hi_y);
            } else {
                out.joints2d[o] += params.sigma * rng.normal();
                out.joints2d[o + 1] += params.sigma * rng.normal();
            }
        }
    return out;
}

std::vector<ProjectedView> render_all_views(const MotionSequence3D& motion, const CameraRig& rig,
                                            const NoiseParams& params, Rng& rng,
                                            std::vector<std::string>* warnings) {
    const double ref = reference_yaw(motion);
    std::vector<Rng> streams;
    streams.reserve(rig.cameras.size());
    for (size_t i = 0; i < rig.cameras.size(); ++i) streams.push_back(rng.derive(i));

    std::vector<ProjectedView> views;
    views.reserve(rig.cameras.size());
    for (size_t i = 0; i < rig.cameras.size(); ++i) {
        const VirtualCamera& cam = rig.cameras[i];
        try {
            ProjectedView view = project_motion(motion, cam);
            view.view_index = static_cast<int>(i);
            view.theta_deg = assign_orientation_bin(cam.yaw_deg - ref);
            views.push_back(corrupt_2d(view, params, streams[i]));
        } catch (const DegenerateInput& e) {
            if (warnings)
                warnings->push_back("view " + std::to_string(i) + " dropped: " + e.what());
        }
    }
    return views;
}

}  // namespace oazr
