//---------------------------------------------------------------------------//
// Copyright maglarmor contributors: see top-level LICENSE for details
// SPDX-License-Identifier: Apache-2.0
//---------------------------------------------------------------------------//
//! \file src/geometry.cpp
//---------------------------------------------------------------------------//
#include "maglarmor/geometry.hpp"

#include <cmath>
#include <string>

namespace maglarmor
{
namespace
{
//! Slack below which touching faces are not treated as overlap [m].
constexpr double overlap_slack = 1e-12;

bool overlaps(VoxelMagnet const& a, VoxelMagnet const& b)
{
    for (int ax = 0; ax < 3; ++ax)
    {
        double lo = std::max(a.lo()[ax], b.lo()[ax]);
        double hi = std::min(a.hi()[ax], b.hi()[ax]);
        if (hi - lo <= overlap_slack)
            return false;
    }
    return true;
}
}  // namespace

void MagnetAssembly::validate() const
{
    for (std::size_t i = 0; i < voxels.size(); ++i)
    {
        auto const& v = voxels[i];
        if (!is_finite(v.center) || !is_finite(v.half_extent)
            || !is_finite(v.magnetization))
        {
            throw ConfigError("voxel " + std::to_string(i)
                              + ": non-finite entry");
        }
        if (v.half_extent.minCoeff() <= 0.0)
        {
            throw ConfigError("voxel " + std::to_string(i)
                              + ": half_extent must be positive");
        }
        if (v.magnetization.norm() > 2.0)
        {
            throw ConfigError("voxel " + std::to_string(i)
                              + ": |magnetization| exceeds 2 T");
        }
    }
    if (gap < 0.0)
    {
        throw ConfigError("assembly gap must be non-negative");
    }
    for (std::size_t i = 0; i < voxels.size(); ++i)
    {
        for (std::size_t j = i + 1; j < voxels.size(); ++j)
        {
            if (overlaps(voxels[i], voxels[j]))
            {
                throw ConfigError("voxels " + std::to_string(i) + " and "
                                  + std::to_string(j) + " overlap");
            }
        }
    }
}

MagnetAssembly apply_gap(MagnetAssembly const& assembly, double dz)
{
    if (!(dz >= 0.0))
    {
        throw ConfigError("gap must be non-negative, got "
                          + std::to_string(dz));
    }
    MagnetAssembly out = assembly;
    if (dz == assembly.gap)
        return out;
    double delta = (dz - assembly.gap) / 2.0;
    for (auto& v : out.voxels)
    {
        if (v.half_id == HalfId::top)
            v.center[2] += delta;
        else if (v.half_id == HalfId::bottom)
            v.center[2] -= delta;
    }
    out.gap = dz;
    return out;
}

FieldBox build_field_box(double a, double L, int nx, int ny, int nz)
{
    if (!(a > 0.0) || !(L > 0.0))
        throw ConfigError("field box dimensions must be positive");
    if (nx < 1 || ny < 1 || nz < 1)
        throw ConfigError("field box sample counts must be at least 1");

    FieldBox box;
    box.a = a;
    box.L = L;
    box.nx = nx;
    box.ny = ny;
    box.nz = nz;
    std::size_t n = static_cast<std::size_t>(nx) * ny * nz;
    box.nodes.reserve(n);
    double w = a * a * L / static_cast<double>(n);
    box.weights.assign(n, w);
    for (int ix = 0; ix < nx; ++ix)
    {
        double x = (ix + 0.5) / nx * L - L / 2;
        for (int iy = 0; iy < ny; ++iy)
        {
            double y = (iy + 0.5) / ny * a - a / 2;
            for (int iz = 0; iz < nz; ++iz)
            {
                double z = (iz + 0.5) / nz * a - a / 2;
                box.nodes.emplace_back(x, y, z);
            }
        }
    }
    return box;
}

namespace
{
HalfId half_of(double z)
{
    if (z > 0.0)
        return HalfId::top;
    if (z < 0.0)
        return HalfId::bottom;
    return HalfId::fixed;
}
}  // namespace

std::vector<VoxelMagnet> voxelize(Cuboid const& shape, double voxel)
{
    if (!(voxel > 0.0))
        throw ConfigError("voxel size must be positive");
    if (shape.half_extent.minCoeff() <= 0.0)
        throw ConfigError("cuboid half_extent must be positive");

    std::vector<VoxelMagnet> out;
    Vec3 lo = shape.center - shape.half_extent;
    Vec3 hi = shape.center + shape.half_extent;
    for (double x = lo[0] + voxel / 2; x < hi[0]; x += voxel)
    {
        for (double y = lo[1] + voxel / 2; y < hi[1]; y += voxel)
        {
            for (double z = lo[2] + voxel / 2; z < hi[2]; z += voxel)
            {
                VoxelMagnet v;
                v.center = Vec3(x, y, z);
                v.half_extent = Vec3::Constant(voxel / 2);
                v.half_id = half_of(z);
                out.push_back(v);
            }
        }
    }
    return out;
}

double ring_angle(double y, double z)
{
    double psi = std::atan2(y, z);
    if (psi < 0.0)
        psi += 2 * constants::pi;
    return psi;
}

std::vector<VoxelMagnet> voxelize(RingSector const& shape, double voxel)
{
    if (!(voxel > 0.0))
        throw ConfigError("voxel size must be positive");
    if (!(shape.r_outer > shape.r_inner) || !(shape.r_inner >= 0.0))
        throw ConfigError("ring sector radii must satisfy 0 <= r_inner < r_outer");
    if (!(shape.length > 0.0))
        throw ConfigError("ring sector length must be positive");
    double span = shape.angle_end - shape.angle_start;
    if (!(span > 0.0) || span > 2 * constants::pi + 1e-12)
        throw ConfigError("ring sector angular span must be in (0, 2*pi]");

    std::vector<VoxelMagnet> out;
    int nt = static_cast<int>(std::ceil(shape.r_outer / voxel));
    double x_end = shape.axial_offset + shape.length;
    for (double x = shape.axial_offset + voxel / 2; x < x_end; x += voxel)
    {
        for (int iy = -nt; iy < nt; ++iy)
        {
            double y = (iy + 0.5) * voxel;
            for (int iz = -nt; iz < nt; ++iz)
            {
                double z = (iz + 0.5) * voxel;
                double r = std::hypot(y, z);
                if (r < shape.r_inner || r > shape.r_outer)
                    continue;
                double rel = ring_angle(y, z) - shape.angle_start;
                rel = std::fmod(rel, 2 * constants::pi);
                if (rel < 0.0)
                    rel += 2 * constants::pi;
                if (rel >= span)
                    continue;
                VoxelMagnet v;
                v.center = Vec3(x, y, z);
                v.half_extent = Vec3::Constant(voxel / 2);
                v.half_id = half_of(z);
                out.push_back(v);
            }
        }
    }
    return out;
}

}  // namespace maglarmor
