//---------------------------------------------------------------------------//
// Copyright maglarmor contributors: see top-level LICENSE for details
// SPDX-License-Identifier: Apache-2.0
//---------------------------------------------------------------------------//
//! \file maglarmor/neutron.hpp
//! Spinor propagation, beam dephasing, and polarimeter / interferometer
//! simulations for neutrons flying along +x.
//!
//! Rotation conventions: a step through field B over path h contributes the
//! SU(2) factor U = cos(t/2) I + i sin(t/2) (Bhat . sigma) with
//! t = 2 mu_n |B| h / (hbar v). For a field purely along +z the composed
//! propagator equals exp(i alpha/2 sigma_z) with alpha the signed Larmor
//! angle (2 mu_n / (hbar v)) * integral of Bz along the ray.
//---------------------------------------------------------------------------//
#pragma once

#include <complex>
#include <vector>

#include "core.hpp"
#include "magnetostatics.hpp"

namespace maglarmor
{

using Spinor = Eigen::Vector2cd;
using SU2 = Eigen::Matrix2cd;

//! Default integration step along a ray [m].
inline constexpr double ray_step_default = 0.25e-3;

//! Margin added on both sides of the scoring box for ray windows [m].
inline constexpr double ray_margin_default = 20e-3;

//! Integration window along the beam axis.
struct RayWindow
{
    double x_start = 0.0;
    double x_end = 0.0;
};

//! Window covering the box length plus a margin on both sides.
RayWindow window_for_box(FieldBox const& box, double margin = ray_margin_default);

//! Signed Larmor rotation angle accumulated along the ray at (y, z) [rad].
//! Midpoint rule with steps of at most `step`.
double ray_rotation_angle(FieldSystem const& system, double y, double z,
                          double speed, RayWindow const& window,
                          double step = ray_step_default);

//! Ordered SU(2) propagator along the ray (earliest step applied first).
SU2 su2_propagate(FieldSystem const& system, double y, double z, double speed,
                  RayWindow const& window, double step = ray_step_default);

struct DephasingResult
{
    //! |mean of exp(i alpha)| over the ray grid.
    double contrast = 0.0;
    //! Circular mean of alpha (argument of the phasor sum) [rad].
    double alpha_mean = 0.0;
    //! Per-ray angles, y-major over the n x n grid [rad].
    std::vector<double> alphas;
};

//! Average dephasing over an n x n grid of rays filling the square
//! aperture (cell midpoints).
DephasingResult beam_dephasing(FieldSystem const& system, int n,
                               double aperture, double speed,
                               RayWindow const& window,
                               double step = ray_step_default);

//! Least-squares fit of y ~ offset + amplitude * cos(x + phase).
//! Amplitude is non-negative; phase is in (-pi, pi].
struct SinusoidFit
{
    double offset = 0.0;
    double amplitude = 0.0;
    double phase = 0.0;
};

SinusoidFit fit_sinusoid(std::vector<double> const& x,
                         std::vector<double> const& y);

//! Spin flip about x by `angle`: exp(i*angle/2*sigma_x). The entry and exit
//! flip coils of the polarimeter use opposite signs (opposite currents).
SU2 x_flip(double angle);

struct PolarimeterConfig
{
    //! Guide field scan range [T] and sample count.
    double guide_min = 0.0;
    double guide_max = 0.0;
    int n_points = 64;
    //! Precession path length inside the guide field [m].
    double guide_length = 0.5;
    double speed = constants::default_speed;
    //! Transverse ray position [m].
    double y = 0.0;
    double z = 0.0;
    RayWindow window;
    double step = ray_step_default;
};

//! Full spinor simulation of the polarimeter: flip into the transverse
//! plane, precess through the guide field and the device, flip back,
//! analyze along +z. For a device field purely along z the intensity is
//! exactly (1 + cos(phi + alpha))/2.
struct PolarimeterResult
{
    std::vector<double> guide_bz;   //!< scanned guide field values [T]
    std::vector<double> phi;        //!< guide precession phases [rad]
    std::vector<double> intensity;  //!< analyzer output in [0, 1]
    SinusoidFit fit;                //!< intensity vs phi
    double device_alpha = 0.0;      //!< ray rotation angle of the device
};

PolarimeterResult polarimeter_scan(FieldSystem const& device,
                                   PolarimeterConfig const& cfg);

//! Closed-form output intensity of the symmetric interferometer with a
//! spin rotation alpha in one path and phase shift chi in the other,
//! unpolarized beam: I = (1 + cos(alpha/2) * cos(chi)) / 2.
double interferometer_intensity(double alpha, double chi);

//! Independent density-matrix simulation (path x spin, 4x4) of the same
//! interferometer; agrees with the closed form to floating-point accuracy.
double interferometer_intensity_oracle(double alpha, double chi);

//! (I(chi=0) - I(chi=pi)) / (I(chi=0) + I(chi=pi)) = cos(alpha/2).
double spin_contrast(double alpha);

struct InterferometerResult
{
    std::vector<double> chi;
    std::vector<double> intensity;
    SinusoidFit fit;
    double contrast = 0.0;
};

//! Scan chi over [0, 2*pi) with n points at fixed alpha.
InterferometerResult interferometer_scan(double alpha, int n_points);

}  // namespace maglarmor
