#include <pybind11/pybind11.h>
#include <pybind11/numpy.h>
#include <pybind11/stl.h>

#include "oazr/encoding.hpp"
#include "oazr/geometry.hpp"
#include "oazr/inference.hpp"
#include "oazr/model.hpp"
#include "oazr/synthdata.hpp"
#include "oazr/textbank.hpp"
#include "oazr/training.hpp"

namespace py = pybind11;
using namespace oazr;

namespace {

MotionSequence3D motion_from_array(py::array_t<double, py::array::c_style | py::array::forcecast> joints,
                                   double fps, const std::string& label) {
    const auto buf = joints.request();
    if (buf.ndim != 3 || buf.shape[1] != kJoints || buf.shape[2] != 3)
        throw std::invalid_argument("joints must have shape (T, 17, 3)");
    MotionSequence3D m;
    m.frames = static_cast<int>(buf.shape[0]);
    m.fps = fps;
    m.label = label;
    const double* p = static_cast<const double*>(buf.ptr);
    m.joints.assign(p, p + buf.size);
    return m;
}

py::array_t<double> to_array2(const std::vector<double>& data, int rows, int cols) {
    py::array_t<double> out({rows, cols});
    std::copy(data.begin(), data.end(), out.mutable_data());
    return out;
}

}  // namespace

PYBIND11_MODULE(_oazr, m) {
    m.doc() = "Orientation-aware zero-shot action recognition core";

    m.def("positional_encode", [](double theta_deg, int levels) {
        return positional_encode(normalize_orientation(theta_deg), levels).gamma;
    }, py::arg("theta_deg"), py::arg("levels") = 192);

    m.def("assign_orientation_bin", &assign_orientation_bin, py::arg("yaw_deg"));

    m.def("occlusion_test",
          [](std::array<double, 3> cam, std::array<double, 3> joint,
             std::array<std::array<double, 3>, 4> quad) {
              TorsoPlane torso;
              for (int i = 0; i < 4; ++i) torso.quad[static_cast<size_t>(i)] = {quad[i][0], quad[i][1], quad[i][2]};
              return occlusion_test({cam[0], cam[1], cam[2]}, {joint[0], joint[1], joint[2]}, torso);
          },
          py::arg("camera_pos"), py::arg("joint_pos"), py::arg("torso_quad"));

    m.def("reference_yaw", [](py::array_t<double> joints, double fps, const std::string& label) {
        return reference_yaw(motion_from_array(joints, fps, label));
    }, py::arg("joints"), py::arg("fps") = 30.0, py::arg("label") = "");

    m.def("fallback_embed", [](const std::string& text, int dim, uint64_t seed) {
        return fallback_embed(text, dim, seed).t_hat.data;
    }, py::arg("text"), py::arg("dim") = 512, py::arg("seed") = 0);

    m.def("contrastive_distance", [](const std::vector<double>& a, const std::vector<double>& b) {
        return contrastive_distance(Tensor({static_cast<int>(a.size())}, a),
                                    Tensor({static_cast<int>(b.size())}, b));
    });

    py::class_<ProjectedView>(m, "ProjectedView")
        .def_property_readonly("frames", [](const ProjectedView& v) { return v.frames; })
        .def_property_readonly("theta_deg", [](const ProjectedView& v) { return v.theta_deg; })
        .def_property_readonly("view_index", [](const ProjectedView& v) { return v.view_index; })
        .def_property_readonly("label", [](const ProjectedView& v) { return v.label; })
        .def("joints2d", [](const ProjectedView& v) { return to_array2(v.joints2d, v.frames, kJoints * 2); })
        .def("visibility", [](const ProjectedView& v) {
            std::vector<double> vis(v.visibility.begin(), v.visibility.end());
            return to_array2(vis, v.frames, kJoints);
        });

    m.def("gen_motion", [](const std::string& generator, double yaw_deg, uint64_t seed) {
        for (const ActionSpec& s : default_action_specs())
            if (s.name == generator) {
                Rng rng(seed);
                const MotionSequence3D mo = gen_action(s, yaw_deg, rng);
                py::array_t<double> arr({mo.frames, kJoints, 3});
                std::copy(mo.joints.begin(), mo.joints.end(), arr.mutable_data());
                return arr;
            }
        throw std::invalid_argument("unknown generator id: " + generator);
    }, py::arg("generator"), py::arg("yaw_deg") = 0.0, py::arg("seed") = 0);

    m.def("render_views", [](py::array_t<double> joints, double fps, const std::string& label,
                             double p_outlier, double sigma, uint64_t seed) {
        const MotionSequence3D mo = motion_from_array(joints, fps, label);
        const CameraRig rig = build_camera_rig(3.0, 1.5, mo.at(0, kLeftHip) * 0.5 + mo.at(0, kRightHip) * 0.5,
                                               CameraIntrinsics{});
        NoiseParams noise;
        noise.p_outlier = p_outlier;
        noise.sigma = sigma;
        Rng rng(seed);
        return render_all_views(mo, rig, noise, rng);
    }, py::arg("joints"), py::arg("fps") = 30.0, py::arg("label") = "",
       py::arg("p_outlier") = 0.0, py::arg("sigma") = 0.0, py::arg("seed") = 0);

    py::class_<Model>(m, "Model")
        .def(py::init([](int num_classes, uint64_t seed) {
                 ModelConfig cfg;
                 cfg.num_classes = num_classes;
                 return Model(cfg, seed);
             }),
             py::arg("num_classes") = 2, py::arg("seed") = 0)
        .def("embed_view", [](const Model& model, const ProjectedView& v) {
            return model.embed_view(v).m_hat.data;
        })
        .def("classify_probs", [](const Model& model, const ProjectedView& v) {
            return mv_classify_probs({v}, model);
        });

    m.def("load_model", &load_model, py::arg("path"));
}
