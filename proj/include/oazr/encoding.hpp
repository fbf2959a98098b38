#pragma once

#include <vector>

namespace oazr {

// Body orientation angle in radians, wrapped to (-pi, pi], with the normalized
// scalar theta_hat = theta/pi and the continuous (sin, cos) pair.
struct OrientationAngle {
    double theta = 0.0;      // radians in (-pi, pi]
    double theta_hat = 0.0;  // theta / pi, in (-1, 1]
    double sin_theta = 0.0;
    double cos_theta = 1.0;
};

// Multi-frequency sinusoidal encoding: gamma[2k] = sin(2^k pi theta_hat),
// gamma[2k+1] = cos(2^k pi theta_hat), k = 0..levels-1.
struct OrientationEncoding {
    std::vector<double> gamma;  // length 2*levels
    int levels = 0;
};

OrientationAngle normalize_orientation(double theta_deg);
OrientationEncoding positional_encode(const OrientationAngle& angle, int levels);

}  // namespace oazr
