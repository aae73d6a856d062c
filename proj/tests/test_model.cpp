#include <hodgelab/complex.hpp>

#include <gtest/gtest.h>

using namespace hodgelab;

namespace {

ManifoldSpec line(double c, double L, int n) { return ManifoldSpec({FactorSpec::line(c, L, n)}); }

} // namespace

TEST(FactorSpec, RejectsDegenerateFactors)
{
    EXPECT_THROW(FactorSpec::line(1.0, 8.0, 3).validate(), InvalidSpecError);
    EXPECT_THROW(FactorSpec::line(1.0, 0.0, 16).validate(), InvalidSpecError);
    EXPECT_THROW(FactorSpec::line(1.0, -2.0, 16).validate(), InvalidSpecError);
    EXPECT_THROW(FactorSpec::circle(0.0, 16).validate(), InvalidSpecError);
    EXPECT_THROW(FactorSpec::line(std::nan(""), 8.0, 16).validate(), InvalidSpecError);
    FactorSpec weighted_circle = FactorSpec::circle(1.0, 8);
    weighted_circle.c = 1.0;
    EXPECT_THROW(weighted_circle.validate(), InvalidSpecError);
    EXPECT_NO_THROW(FactorSpec::line(1.0, 8.0, 4).validate());
    EXPECT_THROW(ManifoldSpec(std::vector<FactorSpec>{}), InvalidSpecError);
}

TEST(FactorSpec, Spacing)
{
    EXPECT_DOUBLE_EQ(FactorSpec::line(1.0, 8.0, 32).spacing(), 0.5);
    EXPECT_DOUBLE_EQ(FactorSpec::circle(2.0 * M_PI, 4).spacing(), M_PI / 2.0);
}

TEST(Grid1D, LineNodesAreSymmetric)
{
    for (int n : {4, 7, 128, 255}) {
        Grid1D g = build_factor_grid(FactorSpec::line(1.0, 8.0, n));
        ASSERT_EQ(static_cast<int>(g.nodes.size()), n + 1);
        EXPECT_DOUBLE_EQ(g.nodes.front(), -8.0);
        EXPECT_DOUBLE_EQ(g.nodes.back(), 8.0);
        for (int i = 0; i <= n; ++i) EXPECT_EQ(g.nodes[i], -g.nodes[n - i]);
    }
    Grid1D c = build_factor_grid(FactorSpec::circle(1.0, 8, 0.25));
    EXPECT_TRUE(c.periodic);
    EXPECT_EQ(c.nodes.size(), 8u);
    EXPECT_DOUBLE_EQ(c.nodes[0], 0.25);
}

TEST(BoundaryMode, FollowsWeightSign)
{
    EXPECT_EQ(default_boundary_mode(line(1.0, 8, 16)), BoundaryMode::relative);
    EXPECT_EQ(default_boundary_mode(line(-1.0, 8, 16)), BoundaryMode::absolute);
    EXPECT_EQ(default_boundary_mode(line(0.0, 8, 16)), BoundaryMode::absolute);
    EXPECT_EQ(default_boundary_mode(ManifoldSpec({FactorSpec::circle(1, 8), FactorSpec::line(1, 8, 16)})),
              BoundaryMode::relative);
    EXPECT_THROW(default_boundary_mode(ManifoldSpec({FactorSpec::line(1, 8, 16), FactorSpec::line(-1, 8, 16)})),
                 InvalidSpecError);
}

TEST(WeightField, QuadraticWeight)
{
    WeightField w({1.0, -2.0, 0.0});
    std::vector<double> x{2.0, 1.0, 5.0};
    EXPECT_DOUBLE_EQ(w.h(x), 2.0 - 1.0);
    EXPECT_DOUBLE_EQ(w.grad_h_squared(x), 4.0 + 4.0);
    EXPECT_EQ(w.grad_h(x), (std::vector<double>{2.0, -2.0, 0.0}));
    EXPECT_DOUBLE_EQ(w.density(x), std::exp(2.0));
    EXPECT_FALSE(w.is_trivial());
    EXPECT_TRUE(WeightField({0.0, 0.0}).is_trivial());
}

TEST(Patterns, LexicographicOrder)
{
    auto p = direction_patterns(3, 2);
    ASSERT_EQ(p.size(), 3u);
    EXPECT_EQ(p[0], 0b011u);
    EXPECT_EQ(p[1], 0b101u);
    EXPECT_EQ(p[2], 0b110u);
    EXPECT_EQ(direction_patterns(3, 0), std::vector<Pattern>{0u});
    EXPECT_THROW(direction_patterns(2, 3), DegreeError);
    EXPECT_THROW(direction_patterns(2, -1), DegreeError);
    for (int n = 1; n <= 5; ++n)
        for (int q = 0; q <= n; ++q) EXPECT_EQ(static_cast<long long>(direction_patterns(n, q).size()), binomial(n, q));
}

TEST(Patterns, ShuffleSign)
{
    // dx1 ^ dx2 = vol, dx2 ^ dx1 = -vol
    EXPECT_EQ(shuffle_sign(0b01u, 2), 1);
    EXPECT_EQ(shuffle_sign(0b10u, 2), -1);
    EXPECT_EQ(shuffle_sign(0b00u, 2), 1);
    EXPECT_EQ(shuffle_sign(0b11u, 2), 1);
    // (2) then (1,3): one inversion
    EXPECT_EQ(shuffle_sign(0b010u, 3), -1);
    EXPECT_EQ(axes_before(0b101u, 2), 1);
}

TEST(Cells, CountsPerMode)
{
    const int n = 16;
    auto rel = line(1.0, 8, n), abs = line(-1.0, 8, n);
    EXPECT_EQ(enumerate_cells(rel, 0, BoundaryMode::relative).size(), std::size_t(n - 1));
    EXPECT_EQ(enumerate_cells(rel, 1, BoundaryMode::relative).size(), std::size_t(n));
    EXPECT_EQ(enumerate_cells(abs, 0, BoundaryMode::absolute).size(), std::size_t(n + 1));
    EXPECT_EQ(enumerate_cells(abs, 1, BoundaryMode::absolute).size(), std::size_t(n));

    ManifoldSpec cyl({FactorSpec::circle(1.0, 6), FactorSpec::line(1.0, 4.0, 8)});
    // relative: circle 6 vertices / 6 edges, line 7 / 8
    EXPECT_EQ(enumerate_cells(cyl, 0, BoundaryMode::relative).size(), 6u * 7u);
    EXPECT_EQ(enumerate_cells(cyl, 1, BoundaryMode::relative).size(), 6u * 7u + 6u * 8u);
    EXPECT_EQ(enumerate_cells(cyl, 2, BoundaryMode::relative).size(), 6u * 8u);
}

TEST(Cells, EulerCharacteristicMatchesTopology)
{
    // alternating cell count: chi_c(R^a x T^b) = (-1)^a * 0^b, chi(...) = 0^b
    struct Case {
        ManifoldSpec m;
        BoundaryMode mode;
        long long chi;
    };
    std::vector<Case> cases{
        {line(1, 8, 12), BoundaryMode::relative, -1},
        {line(-1, 8, 12), BoundaryMode::absolute, 1},
        {ManifoldSpec({FactorSpec::line(1, 4, 6), FactorSpec::line(1, 4, 10)}), BoundaryMode::relative, 1},
        {ManifoldSpec({FactorSpec::circle(1, 5), FactorSpec::line(1, 4, 6)}), BoundaryMode::relative, 0},
        {ManifoldSpec({FactorSpec::circle(1, 5), FactorSpec::circle(2, 7)}), BoundaryMode::absolute, 0},
    };
    for (const auto& c : cases) {
        long long chi = 0;
        for (int p = 0; p <= c.m.dimension(); ++p)
            chi += (p % 2 ? -1 : 1) * static_cast<long long>(enumerate_cells(c.m, p, c.mode).size());
        EXPECT_EQ(chi, c.chi) << c.m.label();
    }
}

TEST(Complex, FlatIndexRoundTrip)
{
    ManifoldSpec m({FactorSpec::circle(1.0, 5), FactorSpec::line(1.0, 4.0, 6), FactorSpec::line(1.0, 4.0, 4)});
    CochainComplex k(m);
    for (int p = 0; p <= 3; ++p) {
        auto cells = enumerate_cells(m, p, k.mode());
        ASSERT_EQ(static_cast<Index>(cells.size()), k.cell_count(p));
        for (Index i = 0; i < k.cell_count(p); ++i) {
            EXPECT_EQ(k.cell(p, i), cells[static_cast<std::size_t>(i)]);
            EXPECT_EQ(k.flat_index(p, cells[static_cast<std::size_t>(i)]), i);
        }
    }
    EXPECT_THROW(k.cell_count(4), DegreeError);
    EXPECT_THROW(k.coboundary(-1), DegreeError);
}

TEST(Complex, BarycentersAndVolumes)
{
    CochainComplex k(line(1.0, 2.0, 8), BoundaryMode::absolute);
    // vertices at -2, -1.5, ..., 2; edges centred between them
    EXPECT_DOUBLE_EQ(k.barycenter(0, 0)[0], -2.0);
    EXPECT_EQ(k.barycenter(0, 4)[0], 0.0);
    EXPECT_DOUBLE_EQ(k.barycenter(1, 0)[0], -1.75);
    EXPECT_DOUBLE_EQ(k.primal_volume(1)[3], 0.5);
    EXPECT_DOUBLE_EQ(k.primal_volume(0)[3], 1.0);
    EXPECT_DOUBLE_EQ(k.h_values(0)[0], 2.0);

    CochainComplex r(line(1.0, 2.0, 8), BoundaryMode::relative);
    EXPECT_DOUBLE_EQ(r.barycenter(0, 0)[0], -1.5);
}

TEST(Complex, ScaleByExpAvoidsOverflow)
{
    EXPECT_DOUBLE_EQ(scale_by_exp(2.0, 1.0), 2.0 * std::exp(1.0));
    EXPECT_EQ(scale_by_exp(0.0, 1e6), 0.0);
    EXPECT_NEAR(std::log(scale_by_exp(std::exp(-500.0), 600.0)), 100.0, 1e-9);
    EXPECT_LT(scale_by_exp(-std::exp(-500.0), 600.0), 0.0);
}
