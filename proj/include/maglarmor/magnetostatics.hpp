//---------------------------------------------------------------------------//
// Copyright maglarmor contributors: see top-level LICENSE for details
// SPDX-License-Identifier: Apache-2.0
//---------------------------------------------------------------------------//
//! \file maglarmor/magnetostatics.hpp
//! Analytic fields of cuboid magnets and filamentary coils.
//!
//! Conventions: magnetization is the remanence mu0*M in tesla, and all
//! returned fields are B in tesla. The cuboid field is closed-form and valid
//! both inside and outside the voxel; coordinates that land exactly on a
//! face plane are nudged by +-1e-9 m (sign-preserving, zero goes positive)
//! so every evaluation is finite and deterministic.
//---------------------------------------------------------------------------//
#pragma once

#include <cstddef>
#include <vector>

#include "core.hpp"
#include "geometry.hpp"

namespace maglarmor
{

//! Central-difference step for field gradients [m].
inline constexpr double fd_step_default = 0.05e-3;

namespace kernel
{
//! Face-plane nudge applied to relative corner coordinates [m].
inline constexpr double face_epsilon = 1e-9;

//! Accumulate B += K(p; lo, hi) * M over n points given as coordinate
//! arrays. K is the cuboid response; M in tesla.
void accumulate(double const* px, double const* py, double const* pz,
                std::size_t n, Vec3 const& lo, Vec3 const& hi, Vec3 const& M,
                double* bx, double* by, double* bz);

//! Write the six unique entries of the symmetric response K per point:
//! k00, k11, k22 diagonal; k01, k02, k12 off-diagonal.
void blocks(double const* px, double const* py, double const* pz,
            std::size_t n, Vec3 const& lo, Vec3 const& hi, double* k00,
            double* k11, double* k22, double* k01, double* k02, double* k12);

//! Bz response row only: Bz = r0*Mx + r1*My + r2*Mz.
void z_row(double const* px, double const* py, double const* pz,
           std::size_t n, Vec3 const& lo, Vec3 const& hi, double* r0,
           double* r1, double* r2);
}  // namespace kernel

//! Full 3x3 response of one cuboid at one point; B = K * M. Symmetric.
Mat3 cuboid_kernel(Vec3 const& p, Vec3 const& lo, Vec3 const& hi);

//! Field of one uniformly magnetized cuboid.
Vec3 cuboid_field(Vec3 const& p, Vec3 const& lo, Vec3 const& hi, Vec3 const& M);

//! Sum of all voxel contributions.
Vec3 assembly_field(MagnetAssembly const& assembly, Vec3 const& p);

//! Ideal filamentary wire loop (closed polygon) carrying `current` amperes
//! in point order.
struct WireLoop
{
    std::vector<Vec3> points;
    double current = 0.0;
};

//! Field of a straight segment a->b. Throws NumericalError within 1e-6 m
//! of the segment.
Vec3 segment_field(Vec3 const& p, Vec3 const& a, Vec3 const& b, double current);

Vec3 loop_field(WireLoop const& loop, Vec3 const& p);

//! Two coaxial rectangular loops normal to z at z = +-separation/2 with
//! sides width (x) by height (y). Each loop is one filament carrying
//! turns*current; positive current gives Bz > 0 at the midpoint.
std::vector<WireLoop> build_rect_coil_pair(
    double width, double height, double separation, int turns, double current);

//! A complete field source: voxel magnets plus coils plus an optional
//! uniform Bz background (test stub).
struct FieldSystem
{
    MagnetAssembly magnets;
    std::vector<WireLoop> coils;
    double uniform_bz = 0.0;

    Vec3 field(Vec3 const& p) const;
    //! Batched evaluation; magnet contributions are chunked and threaded.
    std::vector<Vec3> fields(std::vector<Vec3> const& points) const;
};

//! Field and central-difference gradient at weighted sample points.
struct FieldSampleSet
{
    std::vector<Vec3> points;
    std::vector<double> weights;
    std::vector<Vec3> B;
    //! grad[i](c, ax) = dB_c / dx_ax [T/m]
    std::vector<Mat3> grad;
    double fd_step = fd_step_default;
    //! Aperture edge of the generating box [m]; used by action metrics.
    double aperture = 0.0;
};

FieldSampleSet sample_field(FieldSystem const& system, FieldBox const& box,
                            double fd_step = fd_step_default);

}  // namespace maglarmor
