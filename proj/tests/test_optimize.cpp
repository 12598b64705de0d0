//---------------------------------------------------------------------------//
// Copyright maglarmor contributors: see top-level LICENSE for details
// SPDX-License-Identifier: Apache-2.0
//---------------------------------------------------------------------------//
//! \file tests/test_optimize.cpp
//---------------------------------------------------------------------------//
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest/doctest.h>

#include <cmath>
#include <random>

#include "maglarmor/optimize.hpp"

using namespace maglarmor;

namespace
{

//! Tiny design grid (24 cells) for gradient and optimizer smoke tests.
DesignGrid tiny_grid()
{
    return DesignGrid::block_with_corridor(8e-3, 16e-3, 32e-3, 32e-3, 4e-3);
}

OptimizeConfig tiny_config()
{
    OptimizeConfig cfg;
    cfg.box_nx = 5;
    cfg.box_ny = 3;
    cfg.box_nz = 3;
    cfg.report_nx = 5;
    cfg.report_ny = 3;
    cfg.report_nz = 3;
    cfg.max_iters = 40;
    cfg.polish_iters = 25;
    return cfg;
}

//! Two slabs above and below the beam; action decreases with the gap.
MagnetAssembly slab_pair()
{
    MagnetAssembly a;
    VoxelMagnet top;
    top.center = Vec3(0, 0, 6e-3);
    top.half_extent = Vec3(15e-3, 6e-3, 1.5e-3);
    top.magnetization = Vec3(0, 0, 0.06);
    top.half_id = HalfId::top;
    VoxelMagnet bottom = top;
    bottom.center.z() = -6e-3;
    bottom.half_id = HalfId::bottom;
    a.voxels = {top, bottom};
    return a;
}

}  // namespace

TEST_CASE("default design grid fills the block minus the beam corridor")
{
    DesignGrid g = DesignGrid::block_with_corridor();
    CHECK(g.centers.size() == 1280u);
    CHECK(g.half.size() == g.centers.size());
    double const h = g.voxel / 2.0;
    for (std::size_t i = 0; i < g.centers.size(); ++i)
    {
        Vec3 const& c = g.centers[i];
        // No cell may straddle or enter the corridor cross-section.
        bool in_corridor = std::fabs(c.y()) - h < 4e-3
                           && std::fabs(c.z()) - h < 4e-3;
        CHECK_FALSE(in_corridor);
        CHECK(std::fabs(c.x()) <= 10e-3);
        CHECK(std::fabs(c.y()) <= 12e-3);
        CHECK(std::fabs(c.z()) <= 12e-3);
        CHECK(g.half[i] == (c.z() > 0 ? HalfId::top : HalfId::bottom));
    }
    CHECK_THROWS_AS(DesignGrid::block_with_corridor(0.0), ConfigError);
}

TEST_CASE("ring layout columns tile the annulus")
{
    RingLayout ring = RingLayout::build();
    CHECK(ring.n_segments() == 20);
    CHECK(ring.columns.size() == 2712u);
    CHECK(ring.segment.size() == ring.columns.size());

    double volume = 0.0;
    for (auto const& v : ring.columns)
        volume += 8.0 * v.half_extent.prod();
    double annulus = constants::pi * (ring.r_outer * ring.r_outer
                                      - ring.r_inner * ring.r_inner)
                     * ring.length;
    CHECK(volume == doctest::Approx(annulus).epsilon(0.05));

    for (std::size_t i = 0; i < ring.columns.size(); ++i)
    {
        Vec3 const& c = ring.columns[i].center;
        double r = std::hypot(c.y(), c.z());
        CHECK(r > ring.r_inner - ring.voxel);
        CHECK(r < ring.r_outer + ring.voxel);
        CHECK(ring.segment[i] >= 0);
        CHECK(ring.segment[i] < ring.n_segments());
        // Column centers sit at x = axial row centers only.
        CHECK(std::fabs(std::fabs(c.x()) - ring.length / 4.0) < 1e-12);
    }
    CHECK_THROWS_AS(RingLayout::build(12e-3, 6e-3), ConfigError);
}

TEST_CASE("two-pole initialization rotates twice per turn")
{
    RingLayout ring = RingLayout::build();
    auto dirs = ring.two_pole_init();
    REQUIRE(static_cast<int>(dirs.size()) == ring.n_segments());
    for (int s = 0; s < ring.n_segments(); ++s)
    {
        double psi = ring.sector_angle(s);
        Vec3 want(0, std::sin(2 * psi), std::cos(2 * psi));
        CHECK((dirs[s] - want).norm() < 1e-14);
        CHECK(dirs[s].norm() == doctest::Approx(1.0).epsilon(1e-14));
    }

    auto assembly = ring.assembly(dirs, 68e-3);
    REQUIRE(assembly.voxels.size() == ring.columns.size());
    Vec3 moment = Vec3::Zero();
    double total = 0.0;
    for (std::size_t i = 0; i < assembly.voxels.size(); ++i)
    {
        CHECK(assembly.voxels[i].magnetization.norm()
              == doctest::Approx(68e-3).epsilon(1e-14));
        CHECK((assembly.voxels[i].magnetization
               - 68e-3 * dirs[ring.segment[i]])
                  .norm()
              < 1e-15);
        moment += assembly.voxels[i].magnetization;
        total += assembly.voxels[i].magnetization.norm();
    }
    // The rotating pattern nearly cancels its net moment yet produces a
    // strong +z bore field.
    CHECK(moment.norm() < 1e-2 * total);
    Vec3 B = assembly_field(assembly, Vec3::Zero());
    CHECK(B.z() > 1e-3);
    CHECK(std::fabs(B.x()) < 1e-12);
    CHECK(std::fabs(B.y()) < 1e-3 * B.z());
}

TEST_CASE("merged ring columns are exact for uniform magnetization")
{
    // One column split in half along x must produce the identical field.
    VoxelMagnet merged;
    merged.center = Vec3(2e-3, 3e-3, 8e-3);
    merged.half_extent = Vec3(5e-3, 0.25e-3, 0.25e-3);
    merged.magnetization = Vec3(0.01, -0.04, 0.05);
    VoxelMagnet a = merged, b = merged;
    a.half_extent.x() = b.half_extent.x() = 2.5e-3;
    a.center.x() -= 2.5e-3;
    b.center.x() += 2.5e-3;
    Vec3 p(-1e-3, 0.5e-3, 0.2e-3);
    Vec3 whole = cuboid_field(p, merged.lo(), merged.hi(), merged.magnetization);
    Vec3 split = cuboid_field(p, a.lo(), a.hi(), a.magnetization)
                 + cuboid_field(p, b.lo(), b.hi(), b.magnetization);
    CHECK((whole - split).norm() <= 1e-12 * whole.norm());
}

TEST_CASE("objective gradient matches finite differences")
{
    DesignGrid grid = tiny_grid();
    OptimizeConfig cfg = tiny_config();
    std::vector<VoxelMagnet> voxels;
    std::vector<int> group;
    for (std::size_t i = 0; i < grid.centers.size(); ++i)
    {
        VoxelMagnet v;
        v.center = grid.centers[i];
        v.half_extent = Vec3::Constant(grid.voxel / 2.0);
        v.half_id = grid.half[i];
        voxels.push_back(v);
        group.push_back(static_cast<int>(i));
    }
    int const n = static_cast<int>(voxels.size());
    double const lambda = 3e-9;

    std::mt19937 rng(7);
    std::uniform_real_distribution<double> u(-0.02, 0.02);
    Eigen::VectorXd m(3 * n);
    for (int i = 0; i < m.size(); ++i)
        m[i] = u(rng);

    Eigen::VectorXd g
        = detail::objective_gradient(voxels, group, n, cfg, lambda, m);
    REQUIRE(g.size() == m.size());

    double const h = 1e-8;
    for (int i = 0; i < m.size(); i += 11)
    {
        Eigen::VectorXd mp = m, mm = m;
        mp[i] += h;
        mm[i] -= h;
        double fp = detail::objective_value(voxels, group, n, cfg, lambda, mp);
        double fm = detail::objective_value(voxels, group, n, cfg, lambda, mm);
        double fd = (fp - fm) / (2 * h);
        CHECK(g[i] == doctest::Approx(fd).epsilon(2e-5));
    }
}

TEST_CASE("topology optimization produces a binarized improving design")
{
    DesignGrid grid = tiny_grid();
    OptimizeConfig cfg = tiny_config();
    DesignResult r = optimize_topology(cfg, grid);

    CHECK(r.assembly.voxels.size() > 0u);
    CHECK(r.assembly.voxels.size() <= grid.centers.size());
    for (auto const& v : r.assembly.voxels)
    {
        CHECK(v.magnetization.norm()
              == doctest::Approx(cfg.remanence).epsilon(1e-12));
        CHECK(v.half_extent.x() == doctest::Approx(grid.voxel / 2).epsilon(1e-15));
    }
    CHECK(r.lambda > 0.0);
    CHECK(r.lambda_polish > 0.0);
    REQUIRE(r.history.size() > 1u);
    for (std::size_t i = 1; i < r.history.size(); ++i)
        CHECK(r.history[i].F <= r.history[i - 1].F * (1 + 1e-12));
    CHECK(r.report.theta_mT_mm > 0.0);

    // Rerunning is deterministic.
    DesignResult r2 = optimize_topology(cfg, grid);
    CHECK(r2.report.theta_mT_mm == r.report.theta_mT_mm);
    CHECK(r2.assembly.voxels.size() == r.assembly.voxels.size());

    OptimizeConfig bad = cfg;
    bad.remanence = 0.0;
    CHECK_THROWS_AS(optimize_topology(bad, grid), ConfigError);
}

TEST_CASE("direction optimization stays on the sphere and improves")
{
    RingLayout ring = RingLayout::build(6e-3, 12e-3, 2, 10, 20e-3, 2e-3);
    OptimizeConfig cfg = tiny_config();
    cfg.mode = DesignMode::directions;
    cfg.remanence = 68e-3;
    cfg.adjust_delta = 0.0;
    cfg.max_iters = 15;

    DesignResult r = optimize_directions(cfg, ring);
    REQUIRE(static_cast<int>(r.segment_dirs.size()) == ring.n_segments());
    for (auto const& d : r.segment_dirs)
        CHECK(d.norm() == doctest::Approx(1.0).epsilon(1e-12));
    REQUIRE(r.history.size() > 1u);
    CHECK(r.history.back().F <= r.history.front().F);
    CHECK(r.assembly.voxels.size() == ring.columns.size());

    // Zero iterations returns the scored two-pole start.
    cfg.max_iters = 0;
    DesignResult start = optimize_directions(cfg, ring);
    auto init = ring.two_pole_init();
    for (int s = 0; s < ring.n_segments(); ++s)
        CHECK((start.segment_dirs[s] - init[s]).norm() < 1e-14);
    CHECK(start.report.theta_mT_mm > 0.0);
}

TEST_CASE("remanence calibration is the linear rescale")
{
    CHECK(calibrate_remanence(61e-3, 34.5, 35.0)
          == doctest::Approx(61e-3 * 35.0 / 34.5).epsilon(1e-15));
    CHECK_THROWS_AS(calibrate_remanence(0.0, 34.5, 35.0), ConfigError);
    CHECK_THROWS_AS(calibrate_remanence(61e-3, 0.0, 35.0), NumericalError);
}

TEST_CASE("gap calibration recovers a target action by bisection")
{
    MagnetAssembly slabs = slab_pair();
    FieldBox box = build_field_box(7e-3, 40e-3, 21, 7, 7);

    FieldSystem probe;
    probe.magnets = apply_gap(slabs, 2.0e-3);
    double theta_target = evaluate_metrics(probe, box).theta_mT_mm;

    double gap = calibrate_gap(slabs, theta_target, 0.5e-3, 4e-3, box);
    FieldSystem check;
    check.magnets = apply_gap(slabs, gap);
    CHECK(evaluate_metrics(check, box).theta_mT_mm
          == doctest::Approx(theta_target).epsilon(5e-4));

    // Endpoints are accepted when already on target.
    FieldSystem at_lo;
    at_lo.magnets = apply_gap(slabs, 0.5e-3);
    double th_lo = evaluate_metrics(at_lo, box).theta_mT_mm;
    CHECK(calibrate_gap(slabs, th_lo, 0.5e-3, 4e-3, box)
          == doctest::Approx(0.5e-3).epsilon(1e-12));

    CHECK_THROWS_AS(calibrate_gap(slabs, 1e9, 0.5e-3, 4e-3, box),
                    NumericalError);
    CHECK_THROWS_AS(calibrate_gap(slabs, theta_target, 4e-3, 0.5e-3, box),
                    ConfigError);
    CHECK_THROWS_AS(calibrate_gap(slabs, theta_target, 0.5e-3, 4e-3, box, 0.0),
                    ConfigError);
}

TEST_CASE("line and parabola fits recover exact coefficients")
{
    std::vector<double> x = {-2, -1, 0, 1, 2, 3};
    std::vector<double> yl, yq;
    for (double v : x)
    {
        yl.push_back(3.0 * v - 2.0);
        yq.push_back(1.0 - 2.0 * v + 0.5 * v * v);
    }
    LinearFit lf = fit_linear(x, yl);
    CHECK(lf.slope == doctest::Approx(3.0).epsilon(1e-14));
    CHECK(lf.intercept == doctest::Approx(-2.0).epsilon(1e-13));
    CHECK(lf.r_squared == doctest::Approx(1.0).epsilon(1e-14));

    QuadraticFit qf = fit_quadratic(x, yq);
    CHECK(qf.c0 == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(qf.c1 == doctest::Approx(-2.0).epsilon(1e-12));
    CHECK(qf.c2 == doctest::Approx(0.5).epsilon(1e-12));

    // Perfectly flat data counts as perfectly fitted.
    std::vector<double> flat(x.size(), 4.0);
    CHECK(fit_linear(x, flat).r_squared == 1.0);

    CHECK_THROWS_AS(fit_linear({1.0}, {2.0}), ConfigError);
    CHECK_THROWS_AS(fit_linear({1.0, 1.0}, {2.0, 3.0}), ConfigError);
    CHECK_THROWS_AS(fit_quadratic({1.0, 2.0}, {2.0, 3.0}), ConfigError);
}

TEST_CASE("remanence scan is exactly linear in the action")
{
    MagnetAssembly slabs = slab_pair();
    FieldBox box = build_field_box(7e-3, 40e-3, 11, 5, 5);
    std::vector<double> values = {40e-3, 55e-3, 61e-3, 70e-3, 85e-3};
    ScanResult sc = scan_remanence(slabs, 2.25e-3, 60e-3, values, box);
    CHECK(sc.variable == "remanence");
    REQUIRE(sc.rows.size() == values.size());
    for (std::size_t i = 0; i < values.size(); ++i)
    {
        CHECK(sc.rows[i].value == values[i]);
        CHECK(sc.rows[i].report.theta_mT_mm
              == doctest::Approx(sc.rows[0].report.theta_mT_mm * values[i]
                                 / values[0])
                     .epsilon(1e-12));
    }
    CHECK(sc.theta_fit.r_squared == doctest::Approx(1.0).epsilon(1e-12));
    CHECK_THROWS_AS(scan_remanence(slabs, 2.25e-3, 0.0, values, box),
                    ConfigError);
}

TEST_CASE("gap scan reports one row per gap with a fitted trend")
{
    MagnetAssembly slabs = slab_pair();
    FieldBox box = build_field_box(7e-3, 40e-3, 11, 5, 5);
    std::vector<double> gaps = {1e-3, 2e-3, 3e-3};
    ScanResult sc = scan_gap(slabs, gaps, box);
    CHECK(sc.variable == "gap");
    REQUIRE(sc.rows.size() == 3u);
    CHECK(sc.rows[0].report.theta_mT_mm > sc.rows[2].report.theta_mT_mm);
    CHECK(sc.theta_fit.slope < 0.0);
    // The reference assembly is not mutated by the scan.
    CHECK(slabs.gap == 0.0);
    CHECK_THROWS_AS(scan_gap(slabs, {}, box), ConfigError);
}

TEST_CASE("current scan is linear for a coil system")
{
    FieldSystem sys;
    sys.coils = build_rect_coil_pair(40e-3, 40e-3, 30e-3, 10, 2.0);
    FieldBox box = build_field_box(7e-3, 40e-3, 11, 5, 5);
    std::vector<double> values = {1.0, 2.0, 4.0};
    ScanResult sc = scan_current(sys, 2.0, values, box);
    CHECK(sc.variable == "current");
    REQUIRE(sc.rows.size() == 3u);
    CHECK(sc.rows[1].report.theta_mT_mm
          == doctest::Approx(2.0 * sc.rows[0].report.theta_mT_mm)
                 .epsilon(1e-12));
    CHECK(sc.theta_fit.r_squared == doctest::Approx(1.0).epsilon(1e-12));
    CHECK_THROWS_AS(scan_current(sys, 0.0, values, box), ConfigError);
}
