//---------------------------------------------------------------------------//
// Copyright maglarmor contributors: see top-level LICENSE for details
// SPDX-License-Identifier: Apache-2.0
//---------------------------------------------------------------------------//
//! \file maglarmor/geometry.hpp
//! Voxel magnets, assemblies, the scoring box, and primitive voxelization.
//!
//! Coordinates: x is the beam axis, z is the gap (stacking) axis, y is
//! transverse. All lengths are SI meters; magnetization is in tesla.
//---------------------------------------------------------------------------//
#pragma once

#include <vector>

#include "core.hpp"

namespace maglarmor
{

//! Which movable half of the assembly a voxel belongs to. Top shifts +z,
//! Bottom shifts -z when a gap is applied; Fixed never moves.
enum class HalfId
{
    fixed = 0,
    top = 1,
    bottom = 2,
};

struct VoxelMagnet
{
    Vec3 center{0, 0, 0};
    Vec3 half_extent{0, 0, 0};
    //! Remanent magnetization mu0*M [T]
    Vec3 magnetization{0, 0, 0};
    HalfId half_id = HalfId::fixed;

    Vec3 lo() const { return center - half_extent; }
    Vec3 hi() const { return center + half_extent; }
};

//! A rigid collection of cuboid voxels, stored at its reference (gap = 0)
//! position together with the currently applied gap.
struct MagnetAssembly
{
    std::vector<VoxelMagnet> voxels;
    //! Gap currently applied to the stored centers [m]
    double gap = 0.0;

    //! Throws ConfigError on non-finite entries, non-positive extents,
    //! |magnetization| > 2 T, or pairwise voxel overlap.
    void validate() const;
};

//! Return a copy with the Top half at +dz/2 and the Bottom half at -dz/2
//! relative to the reference position. Absolute: the result depends only on
//! dz, not on the gap already applied. dz = 0 restores the reference
//! bit-identically. Negative dz throws ConfigError.
MagnetAssembly apply_gap(MagnetAssembly const& assembly, double dz);

//! Axis-aligned scoring region: cross-section a x a (y, z), length L (x).
//! Nodes are midpoints of an nx*ny*nz cell grid; every node carries the
//! uniform weight a*a*L/(nx*ny*nz), so the weights sum to the box volume.
struct FieldBox
{
    double a = 0.0;
    double L = 0.0;
    int nx = 0;
    int ny = 0;
    int nz = 0;
    //! Node order: x-major, then y, then z.
    std::vector<Vec3> nodes;
    std::vector<double> weights;

    Vec3 center() const { return Vec3::Zero(); }
};

//! nx counts along the beam (length L); ny, nz across the aperture.
FieldBox build_field_box(double a, double L, int nx, int ny, int nz);

struct Cuboid
{
    Vec3 center{0, 0, 0};
    Vec3 half_extent{0, 0, 0};
};

//! Annular sector around the beam (x) axis. Angles are measured in the
//! z-y plane from +z toward +y [rad]; the sector spans
//! [angle_start, angle_end) and x in [axial_offset, axial_offset + length].
struct RingSector
{
    double r_inner = 0.0;
    double r_outer = 0.0;
    double angle_start = 0.0;
    double angle_end = 0.0;
    double length = 0.0;
    double axial_offset = 0.0;
};

//! Fill a primitive with cubic voxels of edge `voxel` on a lattice centered
//! on the primitive axis; a cell is kept when its center lies inside.
//! Magnetization is left zero; half_id is top for z > 0, bottom for z < 0.
std::vector<VoxelMagnet> voxelize(Cuboid const& shape, double voxel);
std::vector<VoxelMagnet> voxelize(RingSector const& shape, double voxel);

//! Angle of (y, z) from +z toward +y, wrapped to [0, 2*pi).
double ring_angle(double y, double z);

}  // namespace maglarmor
