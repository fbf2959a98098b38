#include "oazr/encoding.hpp"

#include <cmath>
#include <stdexcept>

namespace oazr {

namespace {
constexpr double kPi = 3.141592653589793238462643383279502884;

// Wraps degrees into (-180, 180].
double wrap_deg(double deg) {
    double w = std::fmod(deg, 360.0);
    if (w <= -180.0) w += 360.0;
    if (w > 180.0) w -= 360.0;
    return w;
}
}  // namespace

OrientationAngle normalize_orientation(double theta_deg) {
    if (!std::isfinite(theta_deg)) throw std::invalid_argument("normalize_orientation: non-finite angle");
    const double deg = wrap_deg(theta_deg);
    OrientationAngle a;
    a.theta = deg * kPi / 180.0;
    a.theta_hat = deg / 180.0;
    a.sin_theta = std::sin(a.theta);
    a.cos_theta = std::cos(a.theta);
    return a;
}

OrientationEncoding positional_encode(const OrientationAngle& angle, int levels) {
    if (levels < 1) throw std::invalid_argument("positional_encode: levels must be >= 1");
    OrientationEncoding enc;
    enc.levels = levels;
    enc.gamma.resize(static_cast<size_t>(2 * levels));
    // sin(2^k pi t) has period 2 in t; reduce 2^k * t mod 2 before multiplying
    // by pi. The scaling by 2^k and fmod are exact in doubles, so the
    // high-frequency terms keep full precision instead of degenerating into
    // rounding noise of a huge sine argument.
    double scaled = angle.theta_hat;
    for (int k = 0; k < levels; ++k) {
        double u = std::fmod(scaled, 2.0);
        if (u > 1.0) u -= 2.0;
        if (u <= -1.0) u += 2.0;
        enc.gamma[static_cast<size_t>(2 * k)] = std::sin(kPi * u);
        enc.gamma[static_cast<size_t>(2 * k + 1)] = std::cos(kPi * u);
        scaled = std::fmod(scaled * 2.0, 2.0);
    }
    return enc;
}

}  // namespace oazr
