#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "rcm/kinematics.hpp"

using namespace rcm;

namespace {

constexpr double kPi = std::numbers::pi;

// Closed-form values for the two reference points under CONFIG-A, evaluated with
// 40-digit arithmetic (mpmath) directly from v = rcm - p, d = |v|,
// psi = asin(v_y / d), theta = atan2(v_x, v_z), then q1 = theta, q2 = R(psi + pi/2),
// q3 = (R - m) + d.
constexpr Point3 kPointA{243.1147, 172.3870, 105.8209};
constexpr Point3 kPointB{263.6415, 57.6293, -21.5508};
constexpr SphericalCoords kSphericalA{-1.981334759472025517089802, -0.5764854716529728748786364,
                                      316.2595421515373028286945};
constexpr JointVector kJointsA{-1.981334759472025517089802, 298.2932565425771233058056, 566.2595421515373028286945};
constexpr JointVector kJointsB{-1.489234844599513643470949, 406.8855885676647754053749, 520.7257167713846870109777};

void check_rel(double actual, double expected, double rel) {
    CHECK(std::abs(actual - expected) <= rel * std::max(1.0, std::abs(expected)));
}

double dist(const Point3& a, const Point3& b) { return (a - b).norm(); }

RobotGeometry simple_geometry() {
    RobotGeometry g = RobotGeometry::config_a();
    g.tool_offset = 0.0;
    return g;
}

JointVector random_joints(std::mt19937_64& rng, const RobotGeometry& g) {
    auto draw = [&](Joint j) {
        std::uniform_real_distribution<double> d(g.limit(j).min, g.limit(j).max);
        return d(rng);
    };
    return {draw(Joint::q1), draw(Joint::q2), draw(Joint::q3)};
}

}  // namespace

TEST_CASE("config A is valid and reaches both reference points") {
    const RobotGeometry g = RobotGeometry::config_a();
    CHECK_NOTHROW(g.validate());
    CHECK(validate_joints(kJointsA, g).ok());
    CHECK(validate_joints(kJointsB, g).ok());
}

TEST_CASE("geometry validation rejects broken invariants") {
    RobotGeometry g = RobotGeometry::config_a();
    g.tool_offset = g.rail_radius;
    CHECK_THROWS_AS(g.validate(), std::invalid_argument);
    g = RobotGeometry::config_a();
    g.limit(Joint::q2).max = 1000.0;
    CHECK_THROWS_AS(g.validate(), std::invalid_argument);
    g = RobotGeometry::config_a();
    g.limit(Joint::q3).min = -1.0;
    CHECK_THROWS_AS(g.validate(), std::invalid_argument);
    g = RobotGeometry::config_a();
    g.rail_radius = 0.0;
    CHECK_THROWS_AS(g.validate(), std::invalid_argument);
}

TEST_CASE("forward model: trivial axis cases") {
    const RobotGeometry g = simple_geometry();

    SUBCASE("q3 = R - m puts the tip on the RCM") {
        RobotGeometry shifted = RobotGeometry::config_a();
        shifted.rcm = {10.0, -20.0, 30.0};
        for (double q1 : {-1.0, 0.0, 2.5}) {
            for (double q2 : {0.0, 200.0, 900.0}) {
                const Point3 e = forward_geometric({q1, q2, shifted.q3_at_rcm()}, shifted);
                CHECK(e == shifted.rcm);
            }
        }
    }
    SUBCASE("psi = 0, theta = 0 is a pure -Z offset") {
        const Point3 e = forward_geometric({0.0, 300.0 * kPi / 2.0, 350.0}, g);
        CHECK(e.x == doctest::Approx(0.0).epsilon(1e-12));
        CHECK(std::abs(e.y) < 1e-12);
        CHECK(e.z == doctest::Approx(-50.0).epsilon(1e-12));
    }
    SUBCASE("psi = pi/2 is a pure -Y offset") {
        const Point3 e = forward_geometric({0.0, 300.0 * kPi, 350.0}, g);
        CHECK(std::abs(e.x) < 1e-12);
        CHECK(e.y == doctest::Approx(-50.0).epsilon(1e-12));
        CHECK(std::abs(e.z) < 1e-9);
    }
}

TEST_CASE("cartesian to spherical") {
    const RobotGeometry g = RobotGeometry::config_a();

    SUBCASE("axis aligned") {
        const auto s = cartesian_to_spherical(g.rcm - Point3{0, 0, 80}, g);
        CHECK(s.coords.theta == 0.0);
        CHECK(s.coords.psi == 0.0);
        CHECK(s.coords.ins == doctest::Approx(80.0));
        CHECK_FALSE(s.singular);
    }
    SUBCASE("on the Y ray theta is free, tie-broken to 0 and flagged") {
        const auto s = cartesian_to_spherical(g.rcm - Point3{0, 60, 0}, g);
        CHECK(s.singular);
        CHECK(s.coords.theta == 0.0);
        CHECK(s.coords.psi == doctest::Approx(kPi / 2.0));
        CHECK(s.coords.ins == doctest::Approx(60.0));
    }
    SUBCASE("singular with a streaming hint keeps the previous theta") {
        const auto s = cartesian_to_spherical(g.rcm - Point3{0, -60, 0}, g, 1.25);
        CHECK(s.singular);
        CHECK(s.coords.theta == 1.25);
        CHECK(s.coords.psi == doctest::Approx(-kPi / 2.0));
    }
    SUBCASE("reference point A matches the high-precision oracle") {
        const auto s = cartesian_to_spherical(kPointA, g);
        CHECK_FALSE(s.singular);
        check_rel(s.coords.theta, kSphericalA.theta, 1e-12);
        check_rel(s.coords.psi, kSphericalA.psi, 1e-12);
        check_rel(s.coords.ins, kSphericalA.ins, 1e-12);
    }
    SUBCASE("tip at the RCM is degenerate") {
        CHECK_THROWS_AS(cartesian_to_spherical(g.rcm, g), DegenerateInput);
        CHECK_THROWS_AS(cartesian_to_spherical(g.rcm + Point3{5e-7, 0, 0}, g), DegenerateInput);
    }
}

TEST_CASE("inverse model") {
    const RobotGeometry g = RobotGeometry::config_a();

    SUBCASE("straight down with m = 0") {
        const auto sol = inverse_geometric(Point3{0, 0, -50}, simple_geometry());
        CHECK(sol.joints.q1 == 0.0);
        CHECK(sol.joints.q2 == doctest::Approx(150.0 * kPi));
        CHECK(sol.joints.q3 == doctest::Approx(350.0));
    }
    SUBCASE("reference points") {
        const auto a = inverse_geometric(kPointA, g);
        check_rel(a.joints.q1, kJointsA.q1, 1e-12);
        check_rel(a.joints.q2, kJointsA.q2, 1e-12);
        check_rel(a.joints.q3, kJointsA.q3, 1e-12);
        const auto b = inverse_geometric(kPointB, g);
        check_rel(b.joints.q1, kJointsB.q1, 1e-12);
        check_rel(b.joints.q2, kJointsB.q2, 1e-12);
        check_rel(b.joints.q3, kJointsB.q3, 1e-12);
        CHECK(dist(forward_geometric(a.joints, g), kPointA) < 1e-9);
        CHECK(dist(forward_geometric(b.joints, g), kPointB) < 1e-9);
    }
    SUBCASE("rcm is degenerate") {
        CHECK_THROWS_AS(inverse_geometric(g.rcm, g), DegenerateInput);
    }
    SUBCASE("out of workspace keeps the raw solution") {
        // 500 mm of insertion needs q3 = 750 > 600.
        const Point3 deep{0, 0, -500};
        try {
            (void)inverse_geometric(deep, g);
            FAIL("expected OutOfWorkspace");
        } catch (const OutOfWorkspace& e) {
            CHECK(e.joints().q3 == doctest::Approx(750.0));
            CHECK(e.report().status(Joint::q3).above_max);
            CHECK(e.report().status(Joint::q1).ok());
        }
    }
}

TEST_CASE("rcm residual") {
    const RobotGeometry g = RobotGeometry::config_a();
    CHECK(rcm_residual(kJointsA, g) < 1e-9);
    CHECK(rcm_residual(kJointsB, g) < 1e-9);

    SUBCASE("a broken probe pair is detected") {
        JointVector second = kJointsA;
        second.q3 += 1.0;
        second.q1 += 0.01;
        const double broken =
            point_line_distance(forward_geometric(kJointsA, g), forward_geometric(second, g), g.rcm);
        CHECK(broken > 1e-3);
    }
    SUBCASE("coincident probes are degenerate") {
        CHECK_THROWS_AS(point_line_distance(kPointA, kPointA, g.rcm), DegenerateInput);
    }
    SUBCASE("property sweep") {
        std::mt19937_64 rng(7);
        double worst = 0.0;
        for (int i = 0; i < 1000; ++i) worst = std::max(worst, rcm_residual(random_joints(rng, g), g));
        CHECK(worst < 1e-9);
    }
}

TEST_CASE("validate_joints") {
    const RobotGeometry g = RobotGeometry::config_a();
    const JointVector inside{0.1, 400.0, 300.0};
    const auto ok = validate_joints(inside, g);
    CHECK(ok.ok());
    CHECK(ok.clamped == inside);

    const auto low = validate_joints({0.1, -5.0, 300.0}, g);
    CHECK_FALSE(low.ok());
    CHECK(low.status(Joint::q2).below_min);
    CHECK(low.clamped.q2 == 0.0);

    const auto high = validate_joints({0.1, 400.0, 601.0}, g);
    CHECK(high.status(Joint::q3).above_max);
    CHECK(high.clamped.q3 == 600.0);
}

TEST_CASE("round trip properties") {
    const RobotGeometry g = RobotGeometry::config_a();
    std::mt19937_64 rng(11);
    int checked = 0;
    for (int i = 0; i < 2000; ++i) {
        const JointVector q = random_joints(rng, g);
        const SphericalCoords s = joints_to_spherical(q, g);
        if (s.ins < 1.0 || std::abs(std::cos(s.psi)) < 1e-6) continue;
        ++checked;
        const Point3 p = forward_geometric(q, g);
        const auto back = inverse_geometric(p, g);
        CHECK(std::abs(back.joints.q1 - q.q1) < 1e-9);
        CHECK(std::abs(back.joints.q2 - q.q2) < 1e-9);
        CHECK(std::abs(back.joints.q3 - q.q3) < 1e-9);
        CHECK(dist(forward_geometric(back.joints, g), p) < 1e-9);
    }
    CHECK(checked > 1000);
}

TEST_CASE("insertion is linear in q3 and q1 is irrelevant on the Y ray") {
    const RobotGeometry g = RobotGeometry::config_a();
    for (double q3 : {0.0, 100.0, 250.0, 400.0, 600.0}) {
        const Point3 e = forward_geometric({0.7, 350.0, q3}, g);
        CHECK(dist(e, g.rcm) == doctest::Approx(std::abs(q3 - g.q3_at_rcm())).epsilon(1e-13));
    }
    const Point3 a = forward_geometric({-2.0, 0.0, 400.0}, g);
    const Point3 b = forward_geometric({1.0, 0.0, 400.0}, g);
    CHECK(dist(a, b) < 1e-12);
}
