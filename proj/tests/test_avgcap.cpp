#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include <thinobs/avgcap.hpp>

using namespace thinobs;

namespace {

const double kPi = std::numbers::pi;

double disk_profile(double s) { return std::abs(s) >= 1.0 ? 0.0 : 8.0 * std::sqrt(1.0 - s * s); }

ProfileOptions opts(std::size_t m, QuadratureRule rule = QuadratureRule::Graded) {
    ProfileOptions o;
    o.m = m;
    o.rule = rule;
    return o;
}

} // namespace

TEST(Quadrature, WeightsIntegrateConstants) {
    for (auto rule : {QuadratureRule::Trapezoid, QuadratureRule::Simpson, QuadratureRule::Graded}) {
        const auto q = make_quadrature(rule, 41, 0.5);
        double w = 0.0;
        for (double v : q.weights) w += v;
        EXPECT_NEAR(w, 1.0, rule == QuadratureRule::Graded ? 1e-6 : 1e-14) << to_string(rule);
        EXPECT_EQ(q.nodes.front(), -0.5);
        EXPECT_EQ(q.nodes.back(), 0.5);
    }
}

TEST(Quadrature, EvenCountRejectedForSimpson) {
    EXPECT_THROW(make_quadrature(QuadratureRule::Simpson, 10, 1.0), Error);
    EXPECT_NO_THROW(make_quadrature(QuadratureRule::Trapezoid, 10, 1.0));
}

// The closed form is 4 pi r^2 in three dimensions; the disk-profile integral
// 2 * int_0^1 8 sqrt(1 - s^2) ds = 4 pi is the independent check.
TEST(ClosedForm, BallAveragedCapacity) {
    EXPECT_NEAR(ball_averaged_capacity(1.0), 4.0 * kPi, 1e-12);
    EXPECT_NEAR(ball_averaged_capacity(0.5), kPi, 1e-12);
    EXPECT_NEAR(integrate_profile(disk_profile, 1.0, QuadratureRule::Graded, 401), 4.0 * kPi, 1e-6);
    EXPECT_NEAR(integrate_profile(disk_profile, 1.0, QuadratureRule::Simpson, 4001), 4.0 * kPi, 1e-3);
}

TEST(ClosedForm, GeneralDimensionFormula) {
    // n = 4: 2 (2 pi^2) r^3 int_0^1 (1 - s^2) ds = 8 pi^2 r^3 / 3.
    EXPECT_NEAR(ball_averaged_capacity(1.0, 4), 8.0 * kPi * kPi / 3.0, 1e-10);
}

TEST(Profile, BallSlicesFollowDiskFormula) {
    const auto grid = default_capacity_grid(1.0 / 16, 1.0);
    const auto prof = slice_profile(ShapeSpec::ball(1.0), Vec{0.0, 0.6, 0.8}, grid, opts(5));
    ASSERT_EQ(prof.f_values.size(), 5u);
    for (std::size_t i = 0; i < 5; ++i) {
        const double exact = disk_profile(prof.s_nodes()[i]);
        if (exact == 0.0) EXPECT_EQ(prof.f_values[i].value, 0.0);
        else EXPECT_NEAR(prof.f_values[i].value, exact, 0.05 * exact) << "s=" << prof.s_nodes()[i];
    }
}

TEST(Averaged, BallNearFourPiRSquared) {
    const auto grid = default_capacity_grid(0.125, 1.0);
    const auto cap = averaged_capacity(slice_profile(ShapeSpec::ball(1.0), Vec{0.0, 0.0, 1.0}, grid, opts(11)));
    EXPECT_NEAR(cap.value, 4.0 * kPi, 0.06 * 4.0 * kPi);
    EXPECT_LE(cap.lower, cap.value);
    EXPECT_LE(cap.value, cap.upper);
}

TEST(Averaged, EmptyShapeGivesZero) {
    const auto empty = ShapeSpec::level_set("empty", [](std::span<const double>) { return 1.0; }, 0.5);
    const auto grid = default_capacity_grid(0.125, 0.5);
    const auto cap = averaged_capacity(slice_profile(empty, Vec{0.0, 0.0, 1.0}, grid, opts(5)));
    EXPECT_EQ(cap.value, 0.0);
    EXPECT_EQ(cap.upper, 0.0);
}

// Property: refining the quadrature m -> 2m - 1 moves the value by less than
// the bracket width.
TEST(Averaged, QuadratureRefinementWithinBracket) {
    const auto grid = default_capacity_grid(0.125, 1.0);
    const Vec nu{0.0, 0.0, 1.0};
    const auto coarse = averaged_capacity(slice_profile(ShapeSpec::ball(1.0), nu, grid, opts(5)));
    const auto fine = averaged_capacity(slice_profile(ShapeSpec::ball(1.0), nu, grid, opts(9)));
    EXPECT_LT(std::abs(fine.value - coarse.value), fine.upper - fine.lower);
}

TEST(Averaged, ThreadCountDoesNotChangeResult) {
    const auto grid = default_capacity_grid(0.125, 1.0);
    auto o = opts(5);
    const auto one = averaged_capacity(slice_profile(ShapeSpec::ball(1.0), Vec{0.0, 0.0, 1.0}, grid, o));
    o.threads = 3;
    const auto three = averaged_capacity(slice_profile(ShapeSpec::ball(1.0), Vec{0.0, 0.0, 1.0}, grid, o));
    EXPECT_EQ(one.value, three.value);
}

TEST(Scaling, UnitScaleIsIdentity) {
    const auto grid = default_capacity_grid(0.125, 1.0);
    const auto [scaled, base] = scaling_check(ShapeSpec::ball(1.0), Vec{0.0, 0.0, 1.0}, 1.0, grid, opts(5));
    EXPECT_EQ(scaled, base);
}

TEST(Scaling, AnalyticProfileExact) {
    for (double a : {0.5, 0.25, 0.1}) {
        const auto [scaled, base] = scaling_check_analytic(disk_profile, 1.0, a, 3, QuadratureRule::Graded, 21);
        EXPECT_NEAR(scaled, base, 1e-10);
    }
}

TEST(Scaling, NumericHalfScale) {
    const auto grid = default_capacity_grid(0.125, 1.0);
    const auto [scaled, base] = scaling_check(ShapeSpec::ball(1.0), Vec{0.3, -0.5, 0.8}, 0.5, grid, opts(7));
    EXPECT_NEAR(scaled, 4.0 * kPi, 0.08 * 4.0 * kPi);
    EXPECT_NEAR(base, 4.0 * kPi, 0.08 * 4.0 * kPi);
}

TEST(Scaling, TooSmallForGridRejected) {
    const auto grid = default_capacity_grid(0.125, 1.0);
    try {
        scaling_check(ShapeSpec::ball(1.0), Vec{0.0, 0.0, 1.0}, 0.25, grid, opts(5));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::ResolutionLost);
    }
}
