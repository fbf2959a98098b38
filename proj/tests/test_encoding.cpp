#include <doctest.h>

#include <cmath>

#include "oazr/encoding.hpp"
#include "oazr/geometry.hpp"

using namespace oazr;

TEST_CASE("normalize_orientation wraps into (-180, 180]") {
    const OrientationAngle a180 = normalize_orientation(180.0);
    CHECK(a180.theta == doctest::Approx(3.14159265358979).epsilon(1e-12));
    CHECK(a180.theta_hat == doctest::Approx(1.0));

    const OrientationAngle a0 = normalize_orientation(0.0);
    CHECK(a0.theta_hat == 0.0);
    CHECK(a0.sin_theta == 0.0);
    CHECK(a0.cos_theta == 1.0);

    const OrientationAngle a540 = normalize_orientation(540.0);
    CHECK(a540.theta == a180.theta);
    CHECK(a540.theta_hat == a180.theta_hat);

    const OrientationAngle am180 = normalize_orientation(-180.0);
    CHECK(am180.theta_hat == a180.theta_hat);  // -180 identifies with +180

    CHECK(std::abs(a540.sin_theta * a540.sin_theta + a540.cos_theta * a540.cos_theta - 1.0) < 1e-12);
    CHECK_THROWS(normalize_orientation(std::nan("")));
}

TEST_CASE("positional encoding basics") {
    SUBCASE("theta_hat = 0: every sin is 0, every cos is 1") {
        const OrientationEncoding e = positional_encode(normalize_orientation(0.0), 192);
        REQUIRE(static_cast<int>(e.gamma.size()) == 384);
        for (int k = 0; k < 192; ++k) {
            CHECK(e.gamma[static_cast<size_t>(2 * k)] == 0.0);
            CHECK(e.gamma[static_cast<size_t>(2 * k + 1)] == 1.0);
        }
    }
    SUBCASE("theta_hat = 1 equals theta_hat = -1; sines vanish") {
        OrientationAngle pos, neg;
        pos.theta_hat = 1.0;
        neg.theta_hat = -1.0;
        const OrientationEncoding ep = positional_encode(pos, 192);
        const OrientationEncoding en = positional_encode(neg, 192);
        for (size_t i = 0; i < ep.gamma.size(); ++i) CHECK(ep.gamma[i] == en.gamma[i]);
        for (int k = 0; k < 192; ++k) CHECK(std::abs(ep.gamma[static_cast<size_t>(2 * k)]) < 1e-12);
        // k = 0 term is cos(pi) = -1; all later frequencies land on full periods
        CHECK(ep.gamma[1] == doctest::Approx(-1.0).epsilon(1e-12));
        for (int k = 1; k < 192; ++k)
            CHECK(ep.gamma[static_cast<size_t>(2 * k + 1)] == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("theta_hat = 0.5, L = 3 gives (1, 0, 0, -1, 0, 1)") {
        OrientationAngle a;
        a.theta_hat = 0.5;
        const OrientationEncoding e = positional_encode(a, 3);
        const double expect[6] = {1, 0, 0, -1, 0, 1};
        REQUIRE(e.gamma.size() == 6);
        for (int i = 0; i < 6; ++i)
            CHECK(std::abs(e.gamma[static_cast<size_t>(i)] - expect[i]) < 1e-12);
    }
    SUBCASE("L = 0 rejected") {
        CHECK_THROWS(positional_encode(normalize_orientation(10.0), 0));
    }
}

TEST_CASE("encoding components stay in [-1, 1] and have period 2 in theta_hat") {
    for (double deg : {-171.0, -45.5, 3.25, 88.0, 179.0}) {
        const OrientationEncoding a = positional_encode(normalize_orientation(deg), 64);
        for (double v : a.gamma) CHECK(std::abs(v) <= 1.0 + 1e-15);
        OrientationAngle shifted;
        shifted.theta_hat = deg / 180.0 + 2.0;
        const OrientationEncoding b = positional_encode(shifted, 64);
        for (size_t i = 0; i < a.gamma.size(); ++i)
            CHECK(a.gamma[i] == doctest::Approx(b.gamma[i]).epsilon(1e-9));
    }
}

TEST_CASE("the 12 operating bins encode to pairwise distinct vectors") {
    std::vector<OrientationEncoding> encs;
    for (int bin : kOrientationBins)
        encs.push_back(positional_encode(normalize_orientation(bin), 192));
    double min_dist = 1e300;
    for (size_t i = 0; i < encs.size(); ++i)
        for (size_t j = i + 1; j < encs.size(); ++j) {
            double d2 = 0;
            for (size_t k = 0; k < encs[i].gamma.size(); ++k) {
                const double d = encs[i].gamma[k] - encs[j].gamma[k];
                d2 += d * d;
            }
            min_dist = std::min(min_dist, std::sqrt(d2));
        }
    CHECK(min_dist > 1e-3);
}

TEST_CASE("encoding length is 2L and the default matches the motion feature dim") {
    const OrientationEncoding e = positional_encode(normalize_orientation(30.0), 192);
    CHECK(static_cast<int>(e.gamma.size()) == 384);
    CHECK(e.levels == 192);
}
