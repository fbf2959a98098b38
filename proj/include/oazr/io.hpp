#pragma once

#include <string>
#include <vector>

#include "oazr/geometry.hpp"

namespace oazr {

// Motion files hold one JSON document per line with fields label (string),
// fps (number), subject (optional string), joints (Tx17x3 nested array).
void write_motions(const std::vector<MotionSequence3D>& motions, const std::string& path);
std::vector<MotionSequence3D> read_motions(const std::string& path);

// Projected dataset: a JSON array of view records
// {label, view_index, theta_deg, joints2d (Tx17x2), visibility (Tx17 of 0/1)}.
void write_views(const std::vector<ProjectedView>& views, const std::string& path);
std::vector<ProjectedView> read_views(const std::string& path);

// A multi-view item: the views rendered from one motion sequence. Flat view
// files are grouped by consecutive runs of ascending view_index.
struct ViewItem {
    std::vector<ProjectedView> views;
    std::string label;
};
std::vector<ViewItem> group_views(std::vector<ProjectedView> views);

}  // namespace oazr
