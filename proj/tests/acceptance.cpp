//---------------------------------------------------------------------------//
// Copyright maglarmor contributors: see top-level LICENSE for details
// SPDX-License-Identifier: Apache-2.0
//---------------------------------------------------------------------------//
//! \file acceptance.cpp
//! End-to-end acceptance gate. Each numbered check prints exactly one
//! PASS/FAIL line with the measured value and its pinned tolerance; the
//! process exit status is the number of failed checks. The two design
//! optimizations run once each (plus one stability rerun) and feed every
//! downstream check.
//---------------------------------------------------------------------------//

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "maglarmor/geometry.hpp"
#include "maglarmor/magnetostatics.hpp"
#include "maglarmor/metrics.hpp"
#include "maglarmor/neutron.hpp"
#include "maglarmor/optimize.hpp"

using namespace maglarmor;

namespace
{

constexpr double pi = constants::pi;

class Stopwatch
{
  public:
    double elapsed() const
    {
        return std::chrono::duration<double>(
                   std::chrono::steady_clock::now() - start_)
            .count();
    }

  private:
    std::chrono::steady_clock::time_point start_
        = std::chrono::steady_clock::now();
};

void info(char const* fmt, ...)
{
    std::va_list args;
    va_start(args, fmt);
    std::printf("  [info] ");
    std::vprintf(fmt, args);
    std::printf("\n");
    std::fflush(stdout);
    va_end(args);
}

//---------------------------------------------------------------------------//
// Gauss-Legendre nodes and weights on [-1, 1] (Newton on the recurrence).

struct Quadrature
{
    std::vector<double> x;
    std::vector<double> w;
};

Quadrature gauss_legendre(int n)
{
    Quadrature q;
    q.x.resize(n);
    q.w.resize(n);
    for (int i = 0; i < n; ++i)
    {
        double t = std::cos(pi * (i + 0.75) / (n + 0.5));
        for (int it = 0; it < 100; ++it)
        {
            double p0 = 1.0;
            double p1 = t;
            for (int k = 2; k <= n; ++k)
            {
                double p2 = ((2 * k - 1) * t * p1 - (k - 1) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            double dp = n * (t * p1 - p0) / (t * t - 1.0);
            double step = p1 / dp;
            t -= step;
            if (std::abs(step) < 1e-15)
                break;
        }
        double p0 = 1.0;
        double p1 = t;
        for (int k = 2; k <= n; ++k)
        {
            double p2 = ((2 * k - 1) * t * p1 - (k - 1) * p0) / k;
            p0 = p1;
            p1 = p2;
        }
        double dp = n * (t * p1 - p0) / (t * t - 1.0);
        q.x[i] = t;
        q.w[i] = 2.0 / ((1.0 - t * t) * dp * dp);
    }
    return q;
}

//---------------------------------------------------------------------------//
// Independent surface-charge oracle for the cuboid field. Each face
// carries sigma = M . n; a face patch is subdivided until its edge is
// below half its distance to the evaluation point, then integrated with a
// tensor Gauss rule. Evaluation points must be strictly off the surface.

struct FaceOracle
{
    int ua, va, fa;     // in-plane axes and face normal axis
    double plane;       // face coordinate along fa
    double sigma;       // charge density [T]
    Vec3 const* p;      // evaluation point
    Quadrature const* q;
    Vec3 acc = Vec3::Zero();

    void integrate(double u0, double u1, double v0, double v1, int depth)
    {
        double cu = std::clamp((*p)[ua], u0, u1);
        double cv = std::clamp((*p)[va], v0, v1);
        double dn = (*p)[fa] - plane;
        double du = (*p)[ua] - cu;
        double dv = (*p)[va] - cv;
        double dist = std::sqrt(du * du + dv * dv + dn * dn);
        if (depth < 24 && std::max(u1 - u0, v1 - v0) > 0.5 * dist)
        {
            double um = 0.5 * (u0 + u1);
            double vm = 0.5 * (v0 + v1);
            integrate(u0, um, v0, vm, depth + 1);
            integrate(um, u1, v0, vm, depth + 1);
            integrate(u0, um, vm, v1, depth + 1);
            integrate(um, u1, vm, v1, depth + 1);
            return;
        }
        double su = 0.5 * (u1 - u0);
        double sv = 0.5 * (v1 - v0);
        for (std::size_t i = 0; i < q->x.size(); ++i)
        {
            for (std::size_t j = 0; j < q->x.size(); ++j)
            {
                Vec3 s;
                s[ua] = 0.5 * (u0 + u1) + su * q->x[i];
                s[va] = 0.5 * (v0 + v1) + sv * q->x[j];
                s[fa] = plane;
                Vec3 r = *p - s;
                double r3 = std::pow(r.squaredNorm(), 1.5);
                acc += (sigma * q->w[i] * q->w[j] * su * sv / r3) * r;
            }
        }
    }
};

Vec3 cuboid_field_oracle(VoxelMagnet const& v, Vec3 const& p,
                         Quadrature const& q)
{
    Vec3 b = Vec3::Zero();
    for (int fa = 0; fa < 3; ++fa)
    {
        int ua = (fa + 1) % 3;
        int va = (fa + 2) % 3;
        for (int s = -1; s <= 1; s += 2)
        {
            FaceOracle face;
            face.ua = ua;
            face.va = va;
            face.fa = fa;
            face.plane = v.center[fa] + s * v.half_extent[fa];
            face.sigma = s * v.magnetization[fa];
            face.p = &p;
            face.q = &q;
            face.integrate(v.center[ua] - v.half_extent[ua],
                           v.center[ua] + v.half_extent[ua],
                           v.center[va] - v.half_extent[va],
                           v.center[va] + v.half_extent[va], 0);
            b += face.acc;
        }
    }
    b /= 4.0 * pi;
    // The charge integral is mu0*H; inside the body B = mu0*H + mu0*M.
    if ((p - v.lo()).minCoeff() > 0.0 && (v.hi() - p).minCoeff() > 0.0)
        b += v.magnetization;
    return b;
}

//---------------------------------------------------------------------------//
// Shared helpers.

MagnetAssembly scaled(MagnetAssembly const& a, double factor)
{
    MagnetAssembly out = a;
    for (auto& v : out.voxels)
        v.magnetization *= factor;
    return out;
}

FieldSystem system_at(MagnetAssembly const& a, double gap)
{
    FieldSystem sys;
    sys.magnets = apply_gap(a, gap);
    return sys;
}

double mean(std::vector<double> const& v)
{
    double s = 0.0;
    for (double x : v)
        s += x;
    return s / static_cast<double>(v.size());
}

}  // namespace

int main()
{
    std::printf("acceptance gate: magnet design and spin dynamics toolkit\n");
    std::fflush(stdout);

    std::vector<std::string> lines;
    int failures = 0;
    auto report = [&](char const* id, bool ok, std::string const& detail)
    {
        lines.push_back(std::string(ok ? "[PASS] " : "[FAIL] ") + id + ": "
                        + detail);
        if (!ok)
            ++failures;
    };
    char buf[512];

    double const gap_op = 2.25e-3;
    double const speed = constants::default_speed;

    //-----------------------------------------------------------------------//
    // 01: analytic cuboid field against the adaptive quadrature oracle,
    // plus the point-dipole far-field limit.
    {
        Stopwatch sw;
        Quadrature q = gauss_legendre(8);
        std::mt19937 rng(7);
        std::uniform_real_distribution<double> uni(0.0, 1.0);
        auto rand_magnet = [&]
        {
            VoxelMagnet v;
            for (int c = 0; c < 3; ++c)
            {
                v.center[c] = 0.0;
                v.half_extent[c] = 1e-3 + 7e-3 * uni(rng);
            }
            do
            {
                for (int c = 0; c < 3; ++c)
                    v.magnetization[c] = 0.16 * (uni(rng) - 0.5);
            } while (v.magnetization.norm() < 0.01);
            return v;
        };

        double max_rel = 0.0;
        for (int n = 0; n < 100; ++n)
        {
            VoxelMagnet v = rand_magnet();
            Vec3 p;
            if (n % 2 == 0)
            {
                for (int c = 0; c < 3; ++c)
                    p[c] = 1.5 * (2.0 * uni(rng) - 1.0) * v.half_extent[c];
                double clearance = 0.2 * v.half_extent.minCoeff();
                Vec3 d = p.cwiseAbs() - v.half_extent;
                if (d.maxCoeff() < clearance)
                {
                    --n;
                    continue;
                }
            }
            else
            {
                for (int c = 0; c < 3; ++c)
                    p[c] = 0.75 * (2.0 * uni(rng) - 1.0) * v.half_extent[c];
            }
            Vec3 want = cuboid_field_oracle(v, p, q);
            Vec3 got = cuboid_field(p, v.lo(), v.hi(), v.magnetization);
            max_rel = std::max(max_rel,
                               (got - want).norm() / want.norm());
        }

        double max_dip = 0.0;
        for (int n = 0; n < 20; ++n)
        {
            VoxelMagnet v = rand_magnet();
            Vec3 dir;
            do
            {
                for (int c = 0; c < 3; ++c)
                    dir[c] = 2.0 * uni(rng) - 1.0;
            } while (dir.norm() < 0.1);
            dir.normalize();
            // Distance at least ten times the largest voxel edge.
            double r = (10.0 + 10.0 * uni(rng)) * 2.0
                       * v.half_extent.maxCoeff();
            Vec3 p = r * dir;
            double vol = 8.0 * v.half_extent.prod();
            Vec3 want = vol / (4.0 * pi * r * r * r)
                        * (3.0 * v.magnetization.dot(dir) * dir
                           - v.magnetization);
            Vec3 got = cuboid_field(p, v.lo(), v.hi(), v.magnetization);
            max_dip = std::max(max_dip, (got - want).norm() / want.norm());
        }

        double dt = sw.elapsed();
        bool ok = max_rel <= 1e-6 && max_dip <= 1e-2 && dt < 10.0;
        std::snprintf(buf, sizeof buf,
                      "max rel %.2e (tol 1e-06, 100 points); dipole limit "
                      "%.2e at >= 10x edge (tol 1e-02); %.1f s (limit "
                      "10 s)",
                      max_rel, max_dip, dt);
        report("01 cuboid field vs surface-charge quadrature", ok, buf);
        info("check 01 done in %.1f s", dt);
    }

    //-----------------------------------------------------------------------//
    // 03: action metrics on a uniform field, plus scale invariance.
    {
        FieldSystem uni;
        uni.uniform_bz = 0.875e-3;
        FieldBox box = build_field_box(7e-3, 40e-3, 21, 7, 7);
        ActionReport rep = evaluate_metrics(uni, box);
        double theta_rel = std::abs(rep.theta_mT_mm / 35.0 - 1.0);

        MagnetAssembly slabs;
        for (int s = -1; s <= 1; s += 2)
        {
            VoxelMagnet v;
            v.center = Vec3(0.0, 0.0, s * 6e-3);
            v.half_extent = Vec3(15e-3, 6e-3, 1.5e-3);
            v.magnetization = Vec3(0.0, 0.0, 60e-3);
            v.half_id = s > 0 ? HalfId::top : HalfId::bottom;
            slabs.voxels.push_back(v);
        }
        double de1 = evaluate_metrics(system_at(slabs, 0.0), box).delta_e;
        double de2
            = evaluate_metrics(system_at(scaled(slabs, 3.7), 0.0), box)
                  .delta_e;
        double drift = std::abs(de2 / de1 - 1.0);

        bool ok = theta_rel <= 1e-12 && rep.J == 0.0 && rep.delta_e == 0.0
                  && drift <= 1e-12;
        std::snprintf(buf, sizeof buf,
                      "uniform 0.875 mT: theta rel err %.1e (tol 1e-12), "
                      "J %.1e, delta_e %.1e (exactly 0); delta_e scale "
                      "drift %.1e (tol 1e-12)",
                      theta_rel, rep.J, rep.delta_e, drift);
        report("03 action metrics on a uniform field", ok, buf);
    }

    //-----------------------------------------------------------------------//
    // 08: interferometer model vs the density-matrix oracle, contrast
    // zeros, the sign flip at 2 turns, and the revival at 4 turns.
    {
        Stopwatch sw;
        double max_diff = 0.0;
        for (int i = 0; i < 10; ++i)
        {
            for (int j = 0; j < 10; ++j)
            {
                double alpha = 4.0 * pi * i / 9.0;
                double chi = 2.0 * pi * j / 10.0;
                double a = interferometer_intensity_oracle(alpha, chi);
                double b = interferometer_intensity(alpha, chi);
                max_diff = std::max(max_diff, std::abs(a - b));
            }
        }
        double zero_pi = std::abs(spin_contrast(pi));
        double zero_3pi = std::abs(spin_contrast(3.0 * pi));
        double revival = std::abs(spin_contrast(4.0 * pi) - 1.0);
        InterferometerResult s0 = interferometer_scan(0.0, 96);
        InterferometerResult s2 = interferometer_scan(2.0 * pi, 96);
        double flip = std::abs(
            std::abs(std::remainder(s0.fit.phase - s2.fit.phase, 2.0 * pi))
            - pi);
        double dt = sw.elapsed();

        bool ok = max_diff <= 1e-12 && zero_pi <= 1e-12 && zero_3pi <= 1e-12
                  && revival <= 1e-12 && flip <= 1e-10 && dt < 1.0;
        std::snprintf(buf, sizeof buf,
                      "oracle max diff %.1e (tol 1e-12, 100 points); "
                      "contrast %.1e / %.1e at 1 and 3 half-turns; phase "
                      "flip err %.1e; revival err %.1e; %.2f s (limit 1 s)",
                      max_diff, zero_pi, zero_3pi, flip, revival, dt);
        report("08 interferometer vs density-matrix oracle", ok, buf);
    }

    //-----------------------------------------------------------------------//
    // Long runs: free topology optimization, then the segmented ring.
    OptimizeConfig topo_cfg;
    DesignGrid grid = DesignGrid::block_with_corridor();
    Stopwatch topo_sw;
    DesignResult topo = optimize_topology(topo_cfg, grid);
    double topo_time = topo_sw.elapsed();
    info("topology run: %.0f s, %zu cells kept, theta %.4f mT*mm, "
         "converged %d",
         topo_time, topo.assembly.voxels.size(), topo.report.theta_mT_mm,
         static_cast<int>(topo.converged));

    double topo_br = calibrate_remanence(topo_cfg.remanence,
                                         topo.report.theta_mT_mm,
                                         topo_cfg.theta_target);
    MagnetAssembly topo_cal
        = scaled(topo.assembly, topo_br / topo_cfg.remanence);
    FieldBox rbox = build_field_box(topo_cfg.box_a, topo_cfg.box_L,
                                    topo_cfg.report_nx, topo_cfg.report_ny,
                                    topo_cfg.report_nz);
    FieldSystem sys_cal = system_at(topo_cal, gap_op);
    ActionReport rep_cal = evaluate_metrics(sys_cal, rbox);
    info("calibrated topology: Br %.3f mT, theta %.4f mT*mm, center Bz "
         "%.4f mT",
         1e3 * topo_br, rep_cal.theta_mT_mm, rep_cal.center_Bz_mT);

    //-----------------------------------------------------------------------//
    // 02: divergence and curl of the sampled field over the report box.
    {
        Stopwatch sw;
        double h = 1e-5;
        FieldSampleSet s = sample_field(sys_cal, rbox, h);
        double max_b = 0.0;
        for (auto const& b : s.B)
            max_b = std::max(max_b, b.norm());
        double bound = 1e-6 * max_b / h;
        double max_div = 0.0;
        double max_curl = 0.0;
        for (auto const& g : s.grad)
        {
            max_div = std::max(max_div,
                               std::abs(g(0, 0) + g(1, 1) + g(2, 2)));
            Vec3 curl(g(2, 1) - g(1, 2), g(0, 2) - g(2, 0),
                      g(1, 0) - g(0, 1));
            max_curl = std::max(max_curl, curl.norm());
        }
        double dt = sw.elapsed();
        bool ok = max_div <= bound && max_curl <= bound && dt < 10.0;
        std::snprintf(buf, sizeof buf,
                      "max |div B| %.2e, max |curl B| %.2e vs bound %.2e "
                      "T/m (1e-6 max|B|/h, h = 0.01 mm); %.1f s (limit "
                      "10 s)",
                      max_div, max_curl, bound, dt);
        report("02 divergence and curl of the sampled field", ok, buf);
        info("check 02 done in %.1f s", dt);
    }

    //-----------------------------------------------------------------------//
    // 04: Larmor angle calibration and the ray-average identity on the
    // calibrated design.
    {
        double alpha35 = rotation_angle(35.0, speed);
        double cal_rel = std::abs(alpha35 / pi - 1.0);

        RayWindow win = window_for_box(rbox, 0.0);
        DephasingResult d = beam_dephasing(sys_cal, 15, rbox.a, speed, win);
        double alpha_rays = mean(d.alphas);
        double alpha_theta = rotation_angle(rep_cal.theta_mT_mm, speed);
        double ray_rel = std::abs(alpha_rays / alpha_theta - 1.0);

        bool ok = cal_rel <= 1e-4 && ray_rel <= 5e-3;
        std::snprintf(buf, sizeof buf,
                      "rotation(35 mT*mm) off half-turn by %.2e (tol "
                      "1e-04); ray average vs box action rel %.2e (tol "
                      "5e-03)",
                      cal_rel, ray_rel);
        report("04 rotation angle and ray-average identity", ok, buf);
    }

    //-----------------------------------------------------------------------//
    // 07 and 10: linear scans, gap adjustability, and the gap-tuned
    // rotation angle of the calibrated topology design.
    FieldBox sbox = build_field_box(7e-3, 40e-3, 41, 11, 11);
    std::vector<double> gaps(7);
    for (int i = 0; i < 7; ++i)
        gaps[i] = 1.0e-3 + 2.5e-3 * i / 6.0;
    ScanResult topo_scan = scan_gap(topo_cal, gaps, sbox);
    {
        std::vector<double> values(4);
        for (int i = 0; i < 4; ++i)
            values[i] = (0.7 + 0.2 * i) * topo_br;
        ScanResult rs = scan_remanence(topo_cal, gap_op, topo_br, values,
                                       sbox);
        double r2_err = std::abs(rs.theta_fit.r_squared - 1.0);

        double span = topo_scan.rows.front().report.theta_mT_mm
                      - topo_scan.rows.back().report.theta_mT_mm;
        double max_resid = 0.0;
        for (auto const& row : topo_scan.rows)
        {
            double fit = topo_scan.theta_fit.slope * row.value
                         + topo_scan.theta_fit.intercept;
            max_resid = std::max(max_resid,
                                 std::abs(row.report.theta_mT_mm - fit));
        }
        double resid_frac = max_resid / std::abs(span);
        double theta_lo = topo_scan.rows.front().report.theta_mT_mm;
        double theta_hi = topo_scan.rows.back().report.theta_mT_mm;

        bool ok = r2_err <= 1e-12 && resid_frac <= 0.05 && theta_lo >= 40.0
                  && theta_hi <= 30.0;
        std::snprintf(buf, sizeof buf,
                      "remanence scan 1-R^2 %.1e (tol 1e-12); gap scan "
                      "residual %.2f%% of span (tol 5%%); theta %.2f at "
                      "1.0 mm (>= 40) and %.2f at 3.5 mm (<= 30)",
                      r2_err, 100.0 * resid_frac, theta_lo, theta_hi);
        report("07 linear scans and gap adjustability", ok, buf);
    }
    {
        std::vector<double> alphas;
        for (auto const& row : topo_scan.rows)
            alphas.push_back(rotation_angle(row.report.theta_mT_mm, speed));
        bool monotone = true;
        for (std::size_t i = 1; i < alphas.size(); ++i)
            monotone = monotone && alphas[i] < alphas[i - 1];
        LinearFit fit = fit_linear(gaps, alphas);
        double span = alphas.front() - alphas.back();
        double max_resid = 0.0;
        for (std::size_t i = 0; i < alphas.size(); ++i)
            max_resid = std::max(
                max_resid,
                std::abs(alphas[i] - (fit.slope * gaps[i] + fit.intercept)));
        double resid_frac = max_resid / std::abs(span);

        bool ok = monotone && resid_frac <= 0.10;
        std::snprintf(buf, sizeof buf,
                      "alpha spans %.3f..%.3f rad over 1.0..3.5 mm, "
                      "strictly decreasing %s; linear residual %.2f%% of "
                      "span (tol 10%%)",
                      alphas.front(), alphas.back(),
                      monotone ? "yes" : "NO", 100.0 * resid_frac);
        report("10 gap-tuned rotation angle", ok, buf);
    }

    //-----------------------------------------------------------------------//
    // 09: spin contrast of the calibrated design over the full aperture.
    double contrast = 0.0;
    {
        RayWindow win = window_for_box(rbox);
        DephasingResult d = beam_dephasing(sys_cal, 7, rbox.a, speed, win);
        contrast = d.contrast;
        bool ok = contrast >= 0.95;
        std::snprintf(buf, sizeof buf,
                      "contrast %.5f (>= 0.95; 7x7 rays, 7 mm aperture, "
                      "mean angle %.4f rad)",
                      contrast, d.alpha_mean);
        report("09 spin contrast over the aperture", ok, buf);
    }

    //-----------------------------------------------------------------------//
    // Extra: polarimeter phase closure on the calibrated design.
    {
        PolarimeterConfig pc;
        pc.guide_min = 0.0;
        pc.guide_max = 4e-3;
        pc.n_points = 64;
        pc.window = window_for_box(rbox);
        PolarimeterResult pr = polarimeter_scan(sys_cal, pc);
        double closure = std::abs(
            std::remainder(pr.fit.phase - pr.device_alpha, 2.0 * pi));
        bool ok = closure <= 1e-2;
        std::snprintf(buf, sizeof buf,
                      "fitted phase %.5f rad vs device angle %.5f rad, "
                      "closure %.1e rad (tol 1e-02)",
                      pr.fit.phase, pr.device_alpha, closure);
        report("11 extra: polarimeter phase closure", ok, buf);
    }

    //-----------------------------------------------------------------------//
    // Extra: morphology of the binarized design.
    {
        std::size_t kept = topo.assembly.voxels.size();
        double max_mag_err = 0.0;
        for (auto const& v : topo.assembly.voxels)
            max_mag_err = std::max(
                max_mag_err,
                std::abs(v.magnetization.norm() - topo_cfg.remanence));
        bool ok = kept >= 150 && kept <= 400 && max_mag_err <= 1e-12;
        std::snprintf(buf, sizeof buf,
                      "%zu cells kept (range 150..400); max | |M| - Br | "
                      "%.1e T (tol 1e-12)",
                      kept, max_mag_err);
        report("12 extra: binarized design morphology", ok, buf);
    }

    //-----------------------------------------------------------------------//
    // Extra: stability of the reported action under a deeper polish.
    {
        OptimizeConfig cfg2 = topo_cfg;
        cfg2.polish_iters = 500;
        Stopwatch sw;
        DesignResult topo2 = optimize_topology(cfg2, grid);
        info("polish-depth rerun: %.0f s, theta %.4f mT*mm", sw.elapsed(),
             topo2.report.theta_mT_mm);
        double drift = std::abs(
            topo2.report.theta_mT_mm / topo.report.theta_mT_mm - 1.0);
        bool ok = drift <= 0.02;
        std::snprintf(buf, sizeof buf,
                      "theta drift %.2f%% (tol 2%%) between 400 and 500 "
                      "polish iterations",
                      100.0 * drift);
        report("13 extra: polish-depth stability", ok, buf);
    }

    //-----------------------------------------------------------------------//
    // Ring (two-pole segmented) run, then the cross-design comparisons.
    OptimizeConfig ring_cfg;
    ring_cfg.mode = DesignMode::directions;
    ring_cfg.remanence = 68e-3;
    ring_cfg.max_iters = 6000;
    RingLayout ring = RingLayout::build();
    Stopwatch ring_sw;
    DesignResult hal = optimize_directions(ring_cfg, ring);
    double ring_time = ring_sw.elapsed();
    info("ring run: %.0f s, theta %.4f mT*mm, converged %d", ring_time,
         hal.report.theta_mT_mm, static_cast<int>(hal.converged));

    double hal_br = calibrate_remanence(ring_cfg.remanence,
                                        hal.report.theta_mT_mm,
                                        ring_cfg.theta_target);
    MagnetAssembly hal_cal
        = scaled(hal.assembly, hal_br / ring_cfg.remanence);
    info("calibrated ring: Br %.3f mT", 1e3 * hal_br);

    //-----------------------------------------------------------------------//
    // 05: calibrated remanences and the field level, and the runtimes.
    {
        bool topo_in = topo_br >= 0.75 * 61e-3 && topo_br <= 1.25 * 61e-3;
        bool hal_in = hal_br >= 0.75 * 68e-3 && hal_br <= 1.25 * 68e-3;
        bool bz_in = rep_cal.center_Bz_mT >= 0.75 * 1.18
                     && rep_cal.center_Bz_mT <= 1.25 * 1.18;
        bool time_ok = topo_time <= 600.0 && ring_time <= 600.0;
        bool ok = topo_in && hal_in && bz_in && time_ok;
        std::snprintf(buf, sizeof buf,
                      "topology Br %.1f mT in [45.8, 76.2]; ring Br %.1f "
                      "mT in [51.0, 85.0]; center Bz %.3f mT in [0.885, "
                      "1.475]; runtimes %.0f s + %.0f s (limit 600 s "
                      "each)",
                      1e3 * topo_br, 1e3 * hal_br, rep_cal.center_Bz_mT,
                      topo_time, ring_time);
        report("05 calibrated designs near reference values", ok, buf);
    }

    //-----------------------------------------------------------------------//
    // 06: homogeneity advantage of the free topology at matched action,
    // and its weaker gap sensitivity.
    {
        auto de_at = [&](MagnetAssembly const& cal, double target)
        {
            double th
                = evaluate_metrics(system_at(cal, gap_op), sbox).theta_mT_mm;
            MagnetAssembly s = scaled(cal, target / th);
            return evaluate_metrics(system_at(s, gap_op), sbox).delta_e;
        };
        bool ordered = true;
        double de_t35 = 0.0;
        double de_h35 = 0.0;
        for (double target : {30.0, 35.0, 40.0})
        {
            double dt_ = de_at(topo_cal, target);
            double dh_ = de_at(hal_cal, target);
            ordered = ordered && dt_ < dh_;
            if (target == 35.0)
            {
                de_t35 = dt_;
                de_h35 = dh_;
            }
        }

        ScanResult hal_scan = scan_gap(hal_cal, gaps, sbox);
        double slope_t = std::abs(topo_scan.theta_fit.slope);
        double slope_h = std::abs(hal_scan.theta_fit.slope);
        bool gentler = slope_t < slope_h;

        bool ok = ordered && gentler;
        std::snprintf(buf, sizeof buf,
                      "delta_e %.2e < %.2e at matched action (ordered at "
                      "30/35/40: %s); |dtheta/dgap| %.2f < %.2f mT*mm/mm "
                      "(%s)",
                      de_t35, de_h35, ordered ? "yes" : "NO",
                      1e-3 * slope_t, 1e-3 * slope_h,
                      gentler ? "yes" : "NO");
        report("06 topology beats the ring on homogeneity", ok, buf);
    }

    //-----------------------------------------------------------------------//
    std::printf(
        "---------------------------------------------------------------\n");
    std::sort(lines.begin(), lines.end(),
              [](std::string const& a, std::string const& b)
              { return a.substr(7) < b.substr(7); });
    for (auto const& line : lines)
        std::printf("%s\n", line.c_str());
    std::printf(
        "---------------------------------------------------------------\n");
    std::printf("%d of %zu checks failed\n", failures, lines.size());
    return failures;
}
