#include "oazr/io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "oazr/error.hpp"

namespace oazr {

using nlohmann::json;

namespace {

int line_of_offset(const std::string& buf, size_t byte) {
    return 1 + static_cast<int>(std::count(buf.begin(), buf.begin() + std::min(byte, buf.size()), '\n'));
}

json motion_to_json(const MotionSequence3D& m) {
    json joints = json::array();
    for (int t = 0; t < m.frames; ++t) {
        json frame = json::array();
        for (int j = 0; j < kJoints; ++j) {
            const Vec3 p = m.at(t, j);
            frame.push_back(json::array({p.x, p.y, p.z}));
        }
        joints.push_back(std::move(frame));
    }
    json doc;
    doc["label"] = m.label;
    doc["fps"] = m.fps;
    if (!m.subject.empty()) doc["subject"] = m.subject;
    doc["joints"] = std::move(joints);
    return doc;
}

MotionSequence3D motion_from_json(const json& doc, int lineno) {
    if (!doc.is_object()) throw ParseError("motion: record is not an object", lineno);
    for (const auto& [key, _] : doc.items())
        if (key != "label" && key != "fps" && key != "subject" && key != "joints")
            throw ParseError("motion: unknown field '" + key + "'", lineno);
    if (!doc.contains("label") || !doc["label"].is_string())
        throw ParseError("motion: missing string field 'label'", lineno);
    if (!doc.contains("fps") || !doc["fps"].is_number())
        throw ParseError("motion: missing numeric field 'fps'", lineno);
    if (!doc.contains("joints") || !doc["joints"].is_array())
        throw ParseError("motion: missing array field 'joints'", lineno);

    MotionSequence3D m;
    m.label = doc["label"].get<std::string>();
    m.fps = doc["fps"].get<double>();
    if (doc.contains("subject")) {
        if (!doc["subject"].is_string()) throw ParseError("motion: 'subject' must be a string", lineno);
        m.subject = doc["subject"].get<std::string>();
    }
    const json& joints = doc["joints"];
    m.frames = static_cast<int>(joints.size());
    if (m.frames < 2) throw ParseError("motion: needs at least 2 frames", lineno);
    m.joints.resize(static_cast<size_t>(m.frames) * kJoints * 3);
    for (int t = 0; t < m.frames; ++t) {
        const json& frame = joints[static_cast<size_t>(t)];
        if (!frame.is_array() || frame.size() != kJoints)
            throw ParseError("motion: frame must hold 17 joints", lineno);
        for (int j = 0; j < kJoints; ++j) {
            const json& p = frame[static_cast<size_t>(j)];
            if (!p.is_array() || p.size() != 3) throw ParseError("motion: joint must be [x,y,z]", lineno);
            Vec3 v{p[0].get<double>(), p[1].get<double>(), p[2].get<double>()};
            if (!std::isfinite(v.x) || !std::isfinite(v.y) || !std::isfinite(v.z))
                throw ParseError("motion: non-finite coordinate", lineno);
            m.set(t, j, v);
        }
    }
    return m;
}

}  // namespace

void write_motions(const std::vector<MotionSequence3D>& motions, const std::string& path) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw std::runtime_error("motions: cannot open for writing " + path);
    for (const MotionSequence3D& m : motions) f << motion_to_json(m).dump() << "\n";
    if (!f) throw std::runtime_error("motions: write failed " + path);
}

std::vector<MotionSequence3D> read_motions(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("motions: cannot open " + path);
    std::vector<MotionSequence3D> out;
    std::string line;
    int lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.empty()) continue;
        json doc;
        try {
            doc = json::parse(line);
        } catch (const json::parse_error& e) {
            throw ParseError(std::string("motion: ") + e.what(), lineno);
        }
        out.push_back(motion_from_json(doc, lineno));
    }
    return out;
}

void write_views(const std::vector<ProjectedView>& views, const std::string& path) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw std::runtime_error("views: cannot open for writing " + path);
    f << "[\n";
    for (size_t i = 0; i < views.size(); ++i) {
        const ProjectedView& v = views[i];
        json joints2d = json::array();
        json visibility = json::array();
        for (int t = 0; t < v.frames; ++t) {
            json frame = json::array();
            json vis = json::array();
            for (int j = 0; j < kJoints; ++j) {
                frame.push_back(json::array({v.u(t, j), v.v(t, j)}));
                vis.push_back(v.visible(t, j) ? 1 : 0);
            }
            joints2d.push_back(std::move(frame));
            visibility.push_back(std::move(vis));
        }
        json rec;
        rec["label"] = v.label;
        rec["view_index"] = v.view_index;
        rec["theta_deg"] = v.theta_deg;
        rec["joints2d"] = std::move(joints2d);
        rec["visibility"] = std::move(visibility);
        f << rec.dump() << (i + 1 < views.size() ? ",\n" : "\n");
    }
    f << "]\n";
    if (!f) throw std::runtime_error("views: write failed " + path);
}

std::vector<ProjectedView> read_views(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("views: cannot open " + path);
    std::string buf((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    json doc;
    try {
        doc = json::parse(buf);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("views: ") + e.what(), line_of_offset(buf, e.byte));
    }
    if (!doc.is_array()) throw ParseError("views: top-level document must be an array", 1);

    std::vector<ProjectedView> out;
    out.reserve(doc.size());
    for (size_t i = 0; i < doc.size(); ++i) {
        const json& rec = doc[i];
        const int lineno = static_cast<int>(i + 2);  // one record per line after '['
        if (!rec.is_object()) throw ParseError("views: record is not an object", lineno);
        for (const auto& [key, _] : rec.items())
            if (key != "label" && key != "view_index" && key != "theta_deg" && key != "joints2d" &&
                key != "visibility")
                throw ParseError("views: unknown field '" + key + "'", lineno);
        ProjectedView v;
        try {
            v.label = rec.at("label").get<std::string>();
            v.view_index = rec.at("view_index").get<int>();
            v.theta_deg = rec.at("theta_deg").get<double>();
        } catch (const json::exception& e) {
            throw ParseError(std::string("views: ") + e.what(), lineno);
        }
        if (v.view_index < 0 || v.view_index >= static_cast<int>(kOrientationBins.size()))
            throw ParseError("views: view_index out of range", lineno);
        if (assign_orientation_bin(v.theta_deg) != static_cast<int>(v.theta_deg))
            throw ParseError("views: theta_deg is not a valid orientation bin", lineno);
        const json& joints2d = rec.at("joints2d");
        const json& visibility = rec.at("visibility");
        if (!joints2d.is_array() || !visibility.is_array() || joints2d.size() != visibility.size())
            throw ParseError("views: joints2d/visibility size mismatch", lineno);
        v.frames = static_cast<int>(joints2d.size());
        if (v.frames < 1) throw ParseError("views: empty view", lineno);
        v.joints2d.resize(static_cast<size_t>(v.frames) * kJoints * 2);
        v.visibility.resize(static_cast<size_t>(v.frames) * kJoints);
        for (int t = 0; t < v.frames; ++t) {
            const json& frame = joints2d[static_cast<size_t>(t)];
            const json& vis = visibility[static_cast<size_t>(t)];
            if (!frame.is_array() || frame.size() != kJoints || !vis.is_array() || vis.size() != kJoints)
                throw ParseError("views: frame must hold 17 joints", lineno);
            for (int j = 0; j < kJoints; ++j) {
                const json& p = frame[static_cast<size_t>(j)];
                if (!p.is_array() || p.size() != 2) throw ParseError("views: joint must be [u,v]", lineno);
                const double u = p[0].get<double>(), w = p[1].get<double>();
                const int visf = vis[static_cast<size_t>(j)].get<int>();
                if (visf != 0 && visf != 1) throw ParseError("views: visibility must be 0 or 1", lineno);
                if (visf && (!std::isfinite(u) || !std::isfinite(w)))
                    throw ParseError("views: non-finite visible joint", lineno);
                v.joints2d[(static_cast<size_t>(t) * kJoints + j) * 2] = u;
                v.joints2d[(static_cast<size_t>(t) * kJoints + j) * 2 + 1] = w;
                v.visibility[static_cast<size_t>(t) * kJoints + j] = static_cast<uint8_t>(visf);
            }
        }
        out.push_back(std::move(v));
    }
    return out;
}

std::vector<ViewItem> group_views(std::vector<ProjectedView> views) {
    std::vector<ViewItem> items;
    for (ProjectedView& v : views) {
        const bool start_new =
            items.empty() || v.view_index <= items.back().views.back().view_index;
        if (start_new) items.push_back(ViewItem{{}, v.label});
        if (v.label != items.back().label)
            throw std::invalid_argument("group_views: label changes inside a view block");
        items.back().views.push_back(std::move(v));
    }
    return items;
}

}  // namespace oazr
