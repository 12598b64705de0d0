//---------------------------------------------------------------------------//
// Copyright maglarmor contributors: see top-level LICENSE for details
// SPDX-License-Identifier: Apache-2.0
//---------------------------------------------------------------------------//
//! \file maglarmor/optimize.hpp
//! Design-domain construction, penalized gradient-descent optimizers,
//! calibration, and parameter scans.
//!
//! Objective: F = J + lambda * sum of squared action deviations. The sum
//! runs over the operating gap and, when adjust_delta > 0 in topology mode,
//! the two gap extremes with targets theta_target +- adjust_delta. This
//! multi-gap penalty is what makes the optimized magnet's action tunable by
//! the gap instead of gap-insensitive.
//---------------------------------------------------------------------------//
#pragma once

#include <string>
#include <vector>

#include "core.hpp"
#include "geometry.hpp"
#include "metrics.hpp"

namespace maglarmor
{

//! Free-topology design domain: cubic cells filling a block centered on
//! the beam, with every cell intersecting the rectangular beam corridor
//! (|y| < corridor and |z| < corridor) removed.
struct DesignGrid
{
    double voxel = 0.0;
    //! Reference (gap = 0) cell centers.
    std::vector<Vec3> centers;
    std::vector<HalfId> half;

    static DesignGrid block_with_corridor(double voxel = 2e-3,
                                          double Lx = 20e-3,
                                          double Ly = 24e-3,
                                          double Lz = 24e-3,
                                          double corridor = 4e-3);
};

//! Segmented ring layout around the beam: `rows` axial rows times
//! `sectors` angular sectors of the annulus r_inner..r_outer. The fine
//! transverse voxelization is kept, but voxels of one segment sharing a
//! transverse position are merged into a single column along x (exact for
//! uniform segment magnetization).
struct RingLayout
{
    double r_inner = 6e-3;
    double r_outer = 12e-3;
    double length = 20e-3;
    double voxel = 0.5e-3;
    int rows = 2;
    int sectors = 10;
    //! Merged columns at the reference (gap 0) position, zero magnetization.
    std::vector<VoxelMagnet> columns;
    //! Segment index per column in [0, rows*sectors).
    std::vector<int> segment;

    int n_segments() const { return rows * sectors; }
    static RingLayout build(double r_inner = 6e-3, double r_outer = 12e-3,
                            int rows = 2, int sectors = 10,
                            double length = 20e-3, double voxel = 0.5e-3);
    //! Sector-center angle from +z toward +y [rad].
    double sector_angle(int seg) const;
    //! Two-pole magnetization pattern (rotation angle twice the sector
    //! angle); produces a +z bore field.
    std::vector<Vec3> two_pole_init() const;
    //! Assembly with per-segment unit directions scaled to `remanence`.
    MagnetAssembly assembly(std::vector<Vec3> const& segment_dirs,
                            double remanence) const;
};

enum class DesignMode
{
    topology,
    directions,
};

struct OptimizeConfig
{
    DesignMode mode = DesignMode::topology;
    //! Magnetization magnitude of placed material [T].
    double remanence = 61e-3;
    //! Action target at the operating gap [mT*mm].
    double theta_target = 35.0;
    //! Penalty weight lambda; 0 selects the automatic rule (equal J and
    //! penalty contributions at the initial iterate; directions mode uses
    //! 100x that so the action stays pinned).
    double theta_weight = 0.0;
    int max_iters = 1000;
    //! Direction-polish iterations after binarization (topology mode).
    int polish_iters = 400;
    //! Operating gap [m].
    double gap = 2.25e-3;
    //! Action-target offset at the gap extremes [mT*mm]; 0 disables the
    //! extra penalty terms. Ignored in directions mode, whose gap response
    //! is intrinsic to the ring.
    double adjust_delta = 5.0;
    double gap_lo = 1.0e-3;
    double gap_hi = 3.5e-3;
    //! Optimization scoring box.
    double box_a = 7e-3;
    double box_L = 40e-3;
    int box_nx = 21;
    int box_ny = 9;
    int box_nz = 9;
    //! Resolution of the final report box.
    int report_nx = 81;
    int report_ny = 15;
    int report_nz = 15;
};

struct HistoryRow
{
    int iter = 0;
    double F = 0.0;
    double theta_mT_mm = 0.0;
    double delta_e = 0.0;
};

struct DesignResult
{
    //! Final binarized assembly at its reference (gap 0) position.
    MagnetAssembly assembly;
    //! Metrics of the final assembly at the operating gap, report box.
    ActionReport report;
    //! Per-iteration record of the final descent phase (monotone in F).
    std::vector<HistoryRow> history;
    //! True when every backtracking line search found a decreasing step.
    bool converged = false;
    double lambda = 0.0;
    double lambda_polish = 0.0;
    //! Directions mode: converged unit direction per segment.
    std::vector<Vec3> segment_dirs;
};

//! Three-phase topology optimization: ball-projected continuous descent,
//! binarization (keep cells with |m| >= half the maximum magnitude, lift
//! to full remanence), then direction-only polish on the kept cells.
//! Throws NumericalError when binarization empties the design.
DesignResult optimize_topology(OptimizeConfig const& cfg,
                               DesignGrid const& grid);

//! Per-segment direction descent for the ring layout, starting from the
//! two-pole pattern.
DesignResult optimize_directions(OptimizeConfig const& cfg,
                                 RingLayout const& layout);

//! Remanence rescale that moves theta onto the target (theta is linear in
//! the magnetization scale).
double calibrate_remanence(double current_remanence, double theta_measured,
                           double theta_target);

//! Bisect for the gap where the assembly's action equals the target
//! [mT*mm] within tol_theta. Probes five gaps for monotonicity first;
//! throws NumericalError if the response is non-monotone or the target is
//! outside the attainable range.
double calibrate_gap(MagnetAssembly const& reference, double theta_target,
                     double gap_lo, double gap_hi, FieldBox const& box,
                     double tol_theta = 0.01);

struct LinearFit
{
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
};

struct QuadraticFit
{
    //! c0 + c1*x + c2*x^2
    double c0 = 0.0;
    double c1 = 0.0;
    double c2 = 0.0;
};

LinearFit fit_linear(std::vector<double> const& x,
                     std::vector<double> const& y);
QuadraticFit fit_quadratic(std::vector<double> const& x,
                           std::vector<double> const& y);

struct ScanRow
{
    double value = 0.0;
    ActionReport report;
};

struct ScanResult
{
    //! "gap" | "remanence" | "current"; value units follow the variable
    //! (m, T, A).
    std::string variable;
    std::vector<ScanRow> rows;
    //! theta vs scan value.
    LinearFit theta_fit;
    //! center_Bz vs scan value (populated for 3+ rows).
    QuadraticFit center_fit;
};

ScanResult scan_gap(MagnetAssembly const& reference,
                    std::vector<double> const& gaps, FieldBox const& box);

//! Scales all voxel magnetizations by value / current_remanence.
ScanResult scan_remanence(MagnetAssembly const& reference, double gap,
                          double current_remanence,
                          std::vector<double> const& values,
                          FieldBox const& box);

//! Scales all loop currents by value / current_reference.
ScanResult scan_current(FieldSystem const& system, double current_reference,
                        std::vector<double> const& values,
                        FieldBox const& box);

namespace detail
{
//! Penalized objective of a grouped design, exposed so tests can compare
//! the analytic gradient against finite differences. `m` stacks one
//! magnetization triple per group [T]; operators are assembled on each
//! call. Penalty terms follow cfg (operating gap plus extremes when
//! adjust_delta > 0).
double objective_value(std::vector<VoxelMagnet> const& voxels,
                       std::vector<int> const& group, int n_groups,
                       OptimizeConfig const& cfg, double lambda,
                       Eigen::VectorXd const& m);
Eigen::VectorXd objective_gradient(std::vector<VoxelMagnet> const& voxels,
                                   std::vector<int> const& group,
                                   int n_groups, OptimizeConfig const& cfg,
                                   double lambda, Eigen::VectorXd const& m);
}  // namespace detail

}  // namespace maglarmor
