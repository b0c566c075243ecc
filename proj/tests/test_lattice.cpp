#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include <thinobs/lattice.hpp>

using namespace thinobs;

namespace {

// Brute force over every k in the box: |nu·eps k - c| <= a r.
std::vector<std::vector<long long>> brute_force_hits(const HyperplaneSpec& h, const PerforationSpec& p, const Box& box) {
    std::vector<std::vector<long long>> out;
    const double eps = p.epsilon();
    const auto& nu = h.normal();
    for (long long i = -1; i * eps < box.axes[0].hi + eps; ++i)
        for (long long j = -1; j * eps < box.axes[1].hi + eps; ++j)
            for (long long k = -1; k * eps < box.axes[2].hi + eps; ++k) {
                const double x[3] = {eps * i, eps * j, eps * k};
                if (!box.contains(x)) continue;
                const double d = nu[0] * x[0] + nu[1] * x[1] + nu[2] * x[2] - h.offset();
                if (std::abs(d) <= p.hole_radius()) out.push_back({i, j, k});
            }
    return out;
}

} // namespace

TEST(SlopeVector, ArithmeticExamples) {
    auto a = slope_vector(HyperplaneSpec({0.0, 0.0, 1.0}, 0.3)).alpha;
    EXPECT_DOUBLE_EQ(a[0], 0.0);
    EXPECT_DOUBLE_EQ(a[1], 0.0);

    a = slope_vector(HyperplaneSpec::from_direction({1.0, 0.0, 1.0}, 0.0)).alpha;
    EXPECT_NEAR(a[0], -1.0, 1e-15);
    EXPECT_NEAR(a[1], 0.0, 1e-15);

    a = slope_vector(HyperplaneSpec({1.0 / 3, 2.0 / 3, 2.0 / 3}, 0.0)).alpha;
    EXPECT_NEAR(a[0], -0.5, 1e-15);
    EXPECT_NEAR(a[1], -1.0, 1e-15);
}

TEST(SlopeVector, VerticalPlaneRejected) {
    try {
        slope_vector(HyperplaneSpec({1.0, 0.0, 0.0}, 0.0));
        FAIL() << "expected DegenerateNormal";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::DegenerateNormal);
    }
}

TEST(Perforation, CriticalScale) {
    PerforationSpec p(0.25, 3, ShapeSpec::ball(0.5));
    EXPECT_DOUBLE_EQ(p.hole_scale(), 0.125);
    EXPECT_DOUBLE_EQ(p.hole_radius(), 0.0625);
    EXPECT_THROW(PerforationSpec(0.25, 3, ShapeSpec::ball(3.0)), Error);
}

TEST(Intersections, HorizontalPlaneHitsOneLayer) {
    HyperplaneSpec h({0.0, 0.0, 1.0}, 0.5 + 1e-9);
    PerforationSpec p(0.25, 3, ShapeSpec::ball(0.5));
    const auto recs = enumerate_intersections(h, p, Box::cube(3, 0.0, 1.0));
    ASSERT_EQ(recs.size(), 9u);
    for (const auto& r : recs) {
        EXPECT_EQ(r.k[2], 2);
        EXPECT_GE(r.k[0], 1);
        EXPECT_LE(r.k[0], 3);
        EXPECT_NEAR(r.tau, 1e-9, 1e-15);
    }
}

TEST(Intersections, SeparatedPlaneIsEmpty) {
    // Half way between two layers: distance eps/2 > a r.
    HyperplaneSpec h({0.0, 0.0, 1.0}, 0.375);
    PerforationSpec p(0.25, 3, ShapeSpec::ball(0.5));
    EXPECT_TRUE(enumerate_intersections(h, p, Box::cube(3, 0.0, 1.0)).empty());
}

TEST(Intersections, MatchesBruteForceForRandomNormals) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    PerforationSpec p(0.125, 3, ShapeSpec::ball(0.5));
    const auto box = Box::cube(3, 0.0, 1.0);
    int tried = 0;
    while (tried < 10) {
        Vec nu{u(rng), u(rng), u(rng)};
        nu = normalized(nu);
        if (nu[2] < 0.5) continue;
        ++tried;
        HyperplaneSpec h(nu, 0.5 + 0.3 * u(rng));
        const auto recs = enumerate_intersections(h, p, box);
        const auto oracle = brute_force_hits(h, p, box);
        ASSERT_EQ(recs.size(), oracle.size());
        for (std::size_t i = 0; i < recs.size(); ++i) EXPECT_EQ(recs[i].k, oracle[i]);
    }
}

TEST(Intersections, SortedAndDistinct) {
    HyperplaneSpec h = HyperplaneSpec::from_direction({1.0, std::sqrt(2.0), std::sqrt(3.0)}, 1.1);
    PerforationSpec p(1.0 / 16, 3, ShapeSpec::ball(0.5));
    const auto recs = enumerate_intersections(h, p, Box::cube(3, 0.0, 1.0));
    ASSERT_FALSE(recs.empty());
    for (std::size_t i = 1; i < recs.size(); ++i) EXPECT_LT(recs[i - 1].k, recs[i].k);
}

TEST(Intersections, TauMatchesSliceOffset) {
    HyperplaneSpec h = HyperplaneSpec::from_direction({0.3, -0.5, 0.8}, 0.4);
    PerforationSpec p(0.125, 3, ShapeSpec::ball(0.5));
    for (const auto& r : enumerate_intersections(h, p, Box::cube(3, 0.0, 1.0))) {
        double d = -h.offset();
        for (int i = 0; i < 3; ++i) d += h.normal()[i] * p.epsilon() * static_cast<double>(r.k[i]);
        // The plane sits at distance -d from eps k along nu.
        EXPECT_NEAR(slice_offset(r, h), -d, 1e-12);
    }
}

TEST(LatticeSize, Examples) {
    EXPECT_EQ(lattice_size(Region(Box::cube(2, 0.0, 1.0)), 0.1), 81);
    EXPECT_EQ(lattice_size(Region(Box::cube(1, 0.0, 1.0)), 0.1), 9);
    EXPECT_EQ(lattice_size(Region(Box::cube(2, 0.0, 0.0)), 0.1), 0);
    EXPECT_EQ(lattice_size(Region(), 0.1), 0);
}

TEST(LatticeSize, OverlappingBoxesCountedOnce) {
    Region r(std::vector<Box>{Box::cube(2, 0.0, 0.5), Box::cube(2, 0.25, 1.0)});
    long long brute = 0;
    for (int i = 1; i < 10; ++i)
        for (int j = 1; j < 10; ++j) {
            const double x[2] = {0.1 * i, 0.1 * j};
            brute += r.contains(x);
        }
    EXPECT_EQ(lattice_size(r, 0.1), brute);
}

TEST(CountWindow, Examples) {
    const Region e(Box::cube(1, 0.0, 1.0));
    SlopeVector half{{0.5}};
    EXPECT_EQ(count_window(e, half, 0.1, 0.0, 0.5).a_count, 4);

    SlopeVector odd{{0.318}};
    const auto full = count_window(e, odd, 0.1, 0.37, 1.0);
    EXPECT_EQ(full.a_count, full.n_lattice);
}

TEST(CountWindow, MatchesBruteForceDoubleLoop) {
    const double eps = 1.0 / 64;
    const double s2 = std::sqrt(2.0), s3 = std::sqrt(3.0);
    SlopeVector alpha{{s2, s3}};
    const double t = 0.3, w = std::sqrt(eps);
    const auto rep = count_window(Region(Box::cube(2, 0.0, 1.0)), alpha, eps, t, w);
    long long brute = 0;
    for (int i = 1; i < 64; ++i)
        for (int j = 1; j < 64; ++j) {
            double v = s2 * i + s3 * j;
            v -= std::floor(v);
            brute += (v >= t && v < t + w);
        }
    EXPECT_EQ(rep.a_count, brute);
    EXPECT_EQ(rep.n_lattice, 63 * 63);
}

TEST(CountWindow, WindowWrapsAroundOne) {
    Window w = make_window(0.9, 0.2);
    EXPECT_TRUE(w.contains(0.95));
    EXPECT_TRUE(w.contains(0.05));
    EXPECT_FALSE(w.contains(0.15));
    EXPECT_FALSE(w.contains(0.5));
}

TEST(CountWindow, ZeroWidthRejected) {
    try {
        make_window(0.1, 0.0);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::ZeroWindow);
    }
}

TEST(Equidist, ZeroSlopeMissesWindowAwayFromZero) {
    SlopeVector zero{{0.0, 0.0}};
    const std::vector<double> eps{1.0 / 16}, t{0.3};
    const auto rows = equidist_report(zero, Region(Box::cube(2, 0.0, 1.0)), 0.5, eps, t);
    ASSERT_EQ(rows.size(), 1u);
    EXPECT_EQ(rows[0].report.ratio, 0.0);
}

TEST(Equidist, IrrationalRatiosNearOne) {
    SlopeVector alpha{{std::sqrt(2.0), std::sqrt(3.0)}};
    const std::vector<double> eps{1.0 / 256}, t{0.0, 0.25, 0.5, 0.75};
    for (const auto& row : equidist_report(alpha, Region(Box::cube(2, 0.0, 1.0)), 0.5, eps, t))
        EXPECT_NEAR(row.report.ratio, 1.0, 0.05) << "t=" << row.t;
}

// Property: the counts of complementary windows add up to N.
TEST(Equidist, ComplementaryWindowsPartitionTheLattice) {
    SlopeVector alpha{{std::sqrt(5.0), std::numbers::pi}};
    const Region e(Box::cube(2, 0.0, 1.0));
    for (double t : {0.0, 0.13, 0.71}) {
        const auto a = count_window(e, alpha, 1.0 / 40, t, 0.37);
        const auto b = count_window(e, alpha, 1.0 / 40, t + 0.37, 0.63);
        EXPECT_EQ(a.a_count + b.a_count, a.n_lattice);
    }
}

TEST(Shapes, EllipsoidSliceNonempty) {
    const auto s = ShapeSpec::ellipsoid({0.5, 0.25, 0.125});
    const Vec e3{0.0, 0.0, 1.0};
    EXPECT_TRUE(s.slice_nonempty(e3, 0.12));
    EXPECT_FALSE(s.slice_nonempty(e3, 0.13));
    EXPECT_TRUE(ShapeSpec::parse("ball:0.5").contains(Vec{0.0, 0.3, 0.3}));
}
