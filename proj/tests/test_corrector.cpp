#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include <thinobs/corrector.hpp>

using namespace thinobs;

namespace {

const Vec kE3{0.0, 0.0, 1.0};

// Physical spacing that gives unit-scale spacing 1/16 in every cell.
double h_for(const PerforationSpec& p, double unit_h = 1.0 / 16) { return unit_h * p.hole_scale(); }

// sigma(plane ∩ box) by Monte Carlo over the projected square.
double sigma_monte_carlo(const HyperplaneSpec& plane, const Box& box, std::size_t samples) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> ux(box.axes[0].lo, box.axes[0].hi), uy(box.axes[1].lo, box.axes[1].hi);
    const auto& nu = plane.normal();
    std::size_t hits = 0;
    for (std::size_t i = 0; i < samples; ++i) {
        const double x = ux(rng), y = uy(rng);
        const double z = (plane.offset() - nu[0] * x - nu[1] * y) / nu[2];
        hits += box.axes[2].contains(z);
    }
    const double proj = box.axes[0].length() * box.axes[1].length();
    return proj * static_cast<double>(hits) / static_cast<double>(samples) / std::abs(nu[2]);
}

} // namespace

TEST(Section, HorizontalPlaneHasUnitArea) {
    EXPECT_NEAR(plane_section_area(HyperplaneSpec(kE3, 0.5), Box::cube(3, 0.0, 1.0)), 1.0, 1e-14);
    EXPECT_EQ(plane_section_area(HyperplaneSpec(kE3, 1.5), Box::cube(3, 0.0, 1.0)), 0.0);
}

TEST(Section, DiagonalPlaneClosedForm) {
    // x + z = 1 through the unit cube: a sqrt(2) x 1 rectangle.
    const auto plane = HyperplaneSpec::from_direction({1.0, 0.0, 1.0}, 1.0 / std::sqrt(2.0));
    EXPECT_NEAR(plane_section_area(plane, Box::cube(3, 0.0, 1.0)), std::sqrt(2.0), 1e-12);
}

TEST(Section, MatchesMonteCarlo) {
    const Box box = Box::cube(3, 0.0, 1.0);
    for (const Vec& dir : {Vec{1.0, std::sqrt(2.0), std::sqrt(3.0)}, Vec{0.3, -0.5, 0.8}, Vec{-0.7, 0.2, 0.6}}) {
        const Vec centre{0.5, 0.5, 0.5};
        const auto through = HyperplaneSpec::through(dir, centre);
        const double exact = plane_section_area(through, box);
        EXPECT_NEAR(exact, sigma_monte_carlo(through, box, 400000), 0.01 * exact);
    }
}

TEST(Section, TwoDimensionalInterval) {
    const auto line = HyperplaneSpec::from_direction({1.0, 1.0}, 1.0 / std::sqrt(2.0));
    EXPECT_NEAR(plane_section_area(line, Box::cube(2, 0.0, 1.0)), std::sqrt(2.0), 1e-12);
}

TEST(Rational, Heuristic) {
    EXPECT_TRUE(looks_rational(0.5));
    EXPECT_TRUE(looks_rational(355.0 / 113.0));
    EXPECT_FALSE(looks_rational(std::sqrt(2.0)));
    EXPECT_FALSE(looks_rational(std::numbers::pi));
    EXPECT_TRUE(rational_direction(normalized({1.0, 2.0, 2.0})));
    EXPECT_FALSE(rational_direction(normalized({1.0, std::sqrt(2.0), std::sqrt(3.0)})));
}

TEST(Cell, CentralDiskIsFourA) {
    // eps / a = 8 at eps = 1/64; the cell ball has unit radius 4.
    PerforationSpec p(1.0 / 64, 3, ShapeSpec::ball(0.5));
    const HyperplaneSpec plane(kE3, 0.5);
    const IntersectionRecord rec{{32, 32, 32}, 0.0};
    const auto cell = build_cell_corrector(rec, plane, p, h_for(p));
    const double a = p.hole_scale();
    const double R = p.epsilon() / (2.0 * a);
    const double m = 1.0 / R;
    // cap(disk, B_R) lies in [cap, cap / (1 - 1/R)^2] up to 5% discretization.
    EXPECT_GE(cell.unit_energy, 0.95 * 4.0);
    EXPECT_LE(cell.unit_energy, 1.05 * 4.0 / ((1.0 - m) * (1.0 - m)));
    EXPECT_DOUBLE_EQ(cell.energy, a * cell.unit_energy);
}

TEST(Cell, RescaledEnergyMatchesDirectSolve) {
    PerforationSpec p(1.0 / 16, 3, ShapeSpec::ball(0.5));
    const auto plane = HyperplaneSpec::from_direction({0.3, -0.5, 0.8}, 0.4);
    const auto recs = enumerate_intersections(plane, p, Box::cube(3, 0.0, 1.0));
    ASSERT_FALSE(recs.empty());
    const double h_local = h_for(p);
    const auto cell = build_cell_corrector(recs.front(), plane, p, h_local);
    CapacitySolveOptions solve;
    solve.far_field = false;
    const auto direct = cap_potential(GammaSpec::slice(p.shape(), plane.normal(), cell.s_unit), cell_grid(p, h_local), solve);
    EXPECT_NEAR(cell.energy / p.hole_scale(), dirichlet_energy(direct), 1e-10 * dirichlet_energy(direct));
}

TEST(Cell, MissedHoleIsEmptyGamma) {
    PerforationSpec p(1.0 / 16, 3, ShapeSpec::ball(0.5));
    const HyperplaneSpec plane(kE3, 0.5);
    const double reach = p.hole_radius();
    try {
        build_cell_corrector({{8, 8, 8}, 1.01 * reach}, plane, p, h_for(p));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::EmptyGamma);
    }
}

TEST(Cell, EqualOffsetsGiveEqualEnergies) {
    PerforationSpec p(1.0 / 16, 3, ShapeSpec::ball(0.5));
    const HyperplaneSpec plane(kE3, 0.5);
    const double tau = 0.3 * p.hole_radius();
    const auto a = build_cell_corrector({{2, 3, 8}, tau}, plane, p, h_for(p));
    const auto b = build_cell_corrector({{11, 5, 7}, tau}, plane, p, h_for(p));
    EXPECT_NEAR(a.energy, b.energy, 1e-12);
}

TEST(Cell, CoarseSpacingRejected) {
    PerforationSpec p(1.0 / 16, 3, ShapeSpec::ball(0.5));
    try {
        build_cell_corrector({{8, 8, 8}, 0.0}, HyperplaneSpec(kE3, 0.5), p, p.hole_radius() / 2.0);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::ResolutionLost);
    }
}

TEST(Cell, OnlyThreeDimensions) {
    PerforationSpec p(1.0 / 16, 2, ShapeSpec::ball(0.5));
    try {
        build_cell_corrector({{8, 8}, 0.0}, HyperplaneSpec({0.0, 1.0}, 0.5), p, 1e-4);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::NotSupported);
    }
}

// Property: at a fixed unit offset the cell energy decreases as the cell
// ball eps / (2 a) grows.
TEST(Cell, EnergyDecreasesAsCellsGrow) {
    const HyperplaneSpec plane(kE3, 0.5);
    double prev = 1e300;
    for (double eps : {1.0 / 8, 1.0 / 16, 1.0 / 32}) {
        PerforationSpec p(eps, 3, ShapeSpec::ball(0.5));
        const double s_unit = 0.2;
        const auto cell = build_cell_corrector({{4, 4, 4}, s_unit * p.hole_scale()}, plane, p, h_for(p));
        EXPECT_NEAR(cell.s_unit, s_unit, 1e-12);
        EXPECT_LT(cell.unit_energy, prev);
        prev = cell.unit_energy;
    }
}

// Property: every cell energy is dominated by the central disk of the same cell.
TEST(Cell, UniformBoundByCentralDisk) {
    PerforationSpec p(1.0 / 16, 3, ShapeSpec::ball(0.5));
    const auto plane = HyperplaneSpec::from_direction({1.0, std::sqrt(2.0), std::sqrt(3.0)}, 0.5);
    const Box box = Box::cube(3, 0.0, 0.5);
    const auto rep = region_energy(plane, p, box, h_for(p), 1.0);
    ASSERT_FALSE(rep.cells.empty());
    const auto disk = build_cell_corrector({{0, 0, 0}, 0.0}, HyperplaneSpec(kE3, 0.0), p, h_for(p));
    for (const auto& c : rep.cells) EXPECT_LE(c.unit_energy, 1.1 * disk.unit_energy);
}

TEST(Region, MissedRegionIsZero) {
    PerforationSpec p(1.0 / 16, 3, ShapeSpec::ball(0.5));
    const auto rep = region_energy(HyperplaneSpec(kE3, 0.5), p, Box::cube(3, 0.6, 0.9), h_for(p));
    EXPECT_TRUE(rep.cells.empty());
    EXPECT_EQ(rep.total_energy, 0.0);
    EXPECT_EQ(rep.predicted, 0.0);
    EXPECT_EQ(rep.rel_error, 0.0);
}

// Property: the region energy is additive over a split of the region.
TEST(Region, AdditiveOverSplit) {
    PerforationSpec p(1.0 / 16, 3, ShapeSpec::ball(0.5));
    const auto plane = HyperplaneSpec::from_direction({0.3, -0.5, 0.8}, 0.1);
    Box whole = Box::cube(3, 0.0, 0.5);
    Box left = whole, right = whole;
    // Split between lattice planes so each cell lands on exactly one side.
    left.axes[0].hi = 0.25 + 1.0 / 32;
    right.axes[0].lo = 0.25 + 1.0 / 32;
    const double h = h_for(p);
    const auto all = region_energy(plane, p, whole, h, 1.0);
    const auto l = region_energy(plane, p, left, h, 1.0);
    const auto r = region_energy(plane, p, right, h, 1.0);
    ASSERT_FALSE(all.cells.empty());
    EXPECT_EQ(all.cells.size(), l.cells.size() + r.cells.size());
    EXPECT_NEAR(all.total_energy, l.total_energy + r.total_energy, 1e-12 * all.total_energy);
    EXPECT_NEAR(all.sigma, l.sigma + r.sigma, 1e-12);
}

TEST(Region, ThreadsGiveSameTotal) {
    PerforationSpec p(1.0 / 16, 3, ShapeSpec::ball(0.5));
    const auto plane = HyperplaneSpec::from_direction({0.3, -0.5, 0.8}, 0.1);
    CorrectorOptions opt;
    const auto one = region_energy(plane, p, Box::cube(3, 0.0, 0.4), h_for(p), 1.0, opt);
    opt.threads = 2;
    const auto two = region_energy(plane, p, Box::cube(3, 0.0, 0.4), h_for(p), 1.0, opt);
    EXPECT_EQ(one.total_energy, two.total_energy);
    EXPECT_TRUE(one.rational_direction_warning);
}
