//---------------------------------------------------------------------------//
// Copyright maglarmor contributors: see top-level LICENSE for details
// SPDX-License-Identifier: Apache-2.0
//---------------------------------------------------------------------------//
//! \file src/magnetostatics.cpp
//---------------------------------------------------------------------------//
#include "maglarmor/magnetostatics.hpp"

#include <Eigen/Geometry>
#include <algorithm>
#include <cmath>

#include "maglarmor/threading.hpp"

namespace maglarmor
{

Mat3 cuboid_kernel(Vec3 const& p, Vec3 const& lo, Vec3 const& hi)
{
    double k00, k11, k22, k01, k02, k12;
    kernel::blocks(&p[0], &p[1], &p[2], 1, lo, hi, &k00, &k11, &k22, &k01,
                   &k02, &k12);
    Mat3 K;
    K << k00, k01, k02, k01, k11, k12, k02, k12, k22;
    return K;
}

Vec3 cuboid_field(Vec3 const& p, Vec3 const& lo, Vec3 const& hi, Vec3 const& M)
{
    return cuboid_kernel(p, lo, hi) * M;
}

Vec3 assembly_field(MagnetAssembly const& assembly, Vec3 const& p)
{
    Vec3 B = Vec3::Zero();
    for (auto const& v : assembly.voxels)
    {
        B += cuboid_kernel(p, v.lo(), v.hi()) * v.magnetization;
    }
    return B;
}

namespace
{
constexpr double wire_clearance = 1e-6;

double point_segment_distance(Vec3 const& p, Vec3 const& a, Vec3 const& b)
{
    Vec3 d = b - a;
    double l2 = d.squaredNorm();
    if (l2 == 0.0)
        return (p - a).norm();
    double t = std::clamp((p - a).dot(d) / l2, 0.0, 1.0);
    return (p - (a + t * d)).norm();
}
}  // namespace

Vec3 segment_field(Vec3 const& p, Vec3 const& a, Vec3 const& b, double current)
{
    Vec3 d = b - a;
    double L = d.norm();
    if (L == 0.0)
        return Vec3::Zero();
    if (point_segment_distance(p, a, b) < wire_clearance)
    {
        throw NumericalError("field requested within 1e-6 m of a wire");
    }
    Vec3 r1 = p - a;
    Vec3 r2 = p - b;
    double R1 = r1.norm();
    double R2 = r2.norm();
    double denom = R1 * R2 * ((R1 + R2) * (R1 + R2) - L * L);
    double scale = constants::mu0 * current / (4 * constants::pi) * 2
                   * (R1 + R2) / denom;
    return scale * d.cross(r1);
}

Vec3 loop_field(WireLoop const& loop, Vec3 const& p)
{
    Vec3 B = Vec3::Zero();
    std::size_t n = loop.points.size();
    if (n < 2)
        return B;
    for (std::size_t i = 0; i < n; ++i)
    {
        B += segment_field(p, loop.points[i], loop.points[(i + 1) % n],
                           loop.current);
    }
    return B;
}

std::vector<WireLoop> build_rect_coil_pair(
    double width, double height, double separation, int turns, double current)
{
    if (!(width > 0.0) || !(height > 0.0) || !(separation > 0.0))
        throw ConfigError("coil dimensions must be positive");
    if (turns < 1)
        throw ConfigError("coil turns must be at least 1");

    std::vector<WireLoop> out;
    for (double zs : {separation / 2, -separation / 2})
    {
        WireLoop loop;
        loop.current = current * turns;
        double w = width / 2;
        double h = height / 2;
        loop.points = {Vec3(w, -h, zs), Vec3(w, h, zs), Vec3(-w, h, zs),
                       Vec3(-w, -h, zs)};
        out.push_back(loop);
    }
    return out;
}

Vec3 FieldSystem::field(Vec3 const& p) const
{
    Vec3 B = assembly_field(magnets, p);
    for (auto const& loop : coils)
        B += loop_field(loop, p);
    B[2] += uniform_bz;
    return B;
}

std::vector<Vec3> FieldSystem::fields(std::vector<Vec3> const& points) const
{
    std::size_t n = points.size();
    std::vector<double> px(n), py(n), pz(n), bx(n, 0.0), by(n, 0.0),
        bz(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
    {
        px[i] = points[i][0];
        py[i] = points[i][1];
        pz[i] = points[i][2];
    }
    constexpr std::size_t chunk = 2048;
    std::size_t n_chunks = (n + chunk - 1) / chunk;
    parallel_for(n_chunks, [&](std::size_t c) {
        std::size_t s = c * chunk;
        std::size_t len = std::min(chunk, n - s);
        for (auto const& v : magnets.voxels)
        {
            kernel::accumulate(px.data() + s, py.data() + s, pz.data() + s,
                               len, v.lo(), v.hi(), v.magnetization,
                               bx.data() + s, by.data() + s, bz.data() + s);
        }
        for (std::size_t i = s; i < s + len; ++i)
        {
            Vec3 extra = Vec3::Zero();
            for (auto const& loop : coils)
                extra += loop_field(loop, points[i]);
            bx[i] += extra[0];
            by[i] += extra[1];
            bz[i] += extra[2] + uniform_bz;
        }
    });
    std::vector<Vec3> out(n);
    for (std::size_t i = 0; i < n; ++i)
        out[i] = Vec3(bx[i], by[i], bz[i]);
    return out;
}

FieldSampleSet sample_field(FieldSystem const& system, FieldBox const& box,
                            double fd_step)
{
    if (!(fd_step > 0.0))
        throw ConfigError("fd_step must be positive");

    std::size_t n = box.nodes.size();
    // Stencil order per node: center, +x, -x, +y, -y, +z, -z.
    std::vector<Vec3> ext;
    ext.reserve(7 * n);
    for (auto const& c : box.nodes)
    {
        ext.push_back(c);
        for (int ax = 0; ax < 3; ++ax)
        {
            Vec3 d = Vec3::Zero();
            d[ax] = fd_step;
            ext.push_back(c + d);
            ext.push_back(c - d);
        }
    }
    std::vector<Vec3> Bext = system.fields(ext);

    FieldSampleSet out;
    out.points = box.nodes;
    out.weights = box.weights;
    out.fd_step = fd_step;
    out.aperture = box.a;
    out.B.resize(n);
    out.grad.resize(n);
    for (std::size_t i = 0; i < n; ++i)
    {
        out.B[i] = Bext[7 * i];
        for (int ax = 0; ax < 3; ++ax)
        {
            Vec3 d = (Bext[7 * i + 1 + 2 * ax] - Bext[7 * i + 2 + 2 * ax])
                     / (2 * fd_step);
            out.grad[i].col(ax) = d;
        }
    }
    return out;
}

}  // namespace maglarmor
