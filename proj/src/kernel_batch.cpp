//---------------------------------------------------------------------------//
// Copyright maglarmor contributors: see top-level LICENSE for details
// SPDX-License-Identifier: Apache-2.0
//---------------------------------------------------------------------------//
//! \file src/kernel_batch.cpp
//! Batched cuboid-response evaluation. This translation unit is compiled
//! with value-safe fast-math plus OpenMP SIMD so the log/atan2 inner loops
//! map onto glibc's vector math library; accuracy stays far inside the
//! 1e-6 relative tolerance the quadrature oracle enforces.
//---------------------------------------------------------------------------//
#include <cmath>
#include <cstddef>

#include "maglarmor/magnetostatics.hpp"

namespace maglarmor
{
namespace kernel
{
namespace
{
constexpr std::size_t chunk_size = 512;
constexpr double inv4pi = 1.0 / (4.0 * constants::pi);

inline double nudge(double a)
{
    // Sign-preserving clamp away from face planes; exact zero goes positive.
    if (std::fabs(a) < face_epsilon)
        return a >= 0.0 ? face_epsilon : -face_epsilon;
    return a;
}

//! Accumulate the six unique K entries for up to chunk_size points.
void blocks_chunk(double const* px, double const* py, double const* pz,
                  std::size_t n, Vec3 const& lo, Vec3 const& hi, double* k00,
                  double* k11, double* k22, double* k01, double* k02,
                  double* k12)
{
    for (std::size_t t = 0; t < n; ++t)
    {
        k00[t] = k11[t] = k22[t] = k01[t] = k02[t] = k12[t] = 0.0;
    }
    double const cx[2] = {lo[0], hi[0]};
    double const cy[2] = {lo[1], hi[1]};
    double const cz[2] = {lo[2], hi[2]};
    for (int i = 0; i < 2; ++i)
    {
        for (int j = 0; j < 2; ++j)
        {
            for (int k = 0; k < 2; ++k)
            {
                double s = ((i + j + k) & 1) ? -1.0 : 1.0;
                double ox = cx[i];
                double oy = cy[j];
                double oz = cz[k];
#pragma omp simd
                for (std::size_t t = 0; t < n; ++t)
                {
                    double X = nudge(px[t] - ox);
                    double Y = nudge(py[t] - oy);
                    double Z = nudge(pz[t] - oz);
                    double R = std::sqrt(X * X + Y * Y + Z * Z);
                    k00[t] -= s * std::atan2(Y * Z, X * R);
                    k11[t] -= s * std::atan2(Z * X, Y * R);
                    k22[t] -= s * std::atan2(X * Y, Z * R);
                    k01[t] += s * std::log(Z + R);
                    k02[t] += s * std::log(Y + R);
                    k12[t] += s * std::log(X + R);
                }
            }
        }
    }
    for (std::size_t t = 0; t < n; ++t)
    {
        k00[t] *= inv4pi;
        k11[t] *= inv4pi;
        k22[t] *= inv4pi;
        k01[t] *= inv4pi;
        k02[t] *= inv4pi;
        k12[t] *= inv4pi;
    }
}

void z_row_chunk(double const* px, double const* py, double const* pz,
                 std::size_t n, Vec3 const& lo, Vec3 const& hi, double* r0,
                 double* r1, double* r2)
{
    for (std::size_t t = 0; t < n; ++t)
    {
        r0[t] = r1[t] = r2[t] = 0.0;
    }
    double const cx[2] = {lo[0], hi[0]};
    double const cy[2] = {lo[1], hi[1]};
    double const cz[2] = {lo[2], hi[2]};
    for (int i = 0; i < 2; ++i)
    {
        for (int j = 0; j < 2; ++j)
        {
            for (int k = 0; k < 2; ++k)
            {
                double s = ((i + j + k) & 1) ? -1.0 : 1.0;
                double ox = cx[i];
                double oy = cy[j];
                double oz = cz[k];
#pragma omp simd
                for (std::size_t t = 0; t < n; ++t)
                {
                    double X = nudge(px[t] - ox);
                    double Y = nudge(py[t] - oy);
                    double Z = nudge(pz[t] - oz);
                    double R = std::sqrt(X * X + Y * Y + Z * Z);
                    r0[t] += s * std::log(Y + R);
                    r1[t] += s * std::log(X + R);
                    r2[t] -= s * std::atan2(X * Y, Z * R);
                }
            }
        }
    }
    for (std::size_t t = 0; t < n; ++t)
    {
        r0[t] *= inv4pi;
        r1[t] *= inv4pi;
        r2[t] *= inv4pi;
    }
}
}  // namespace

void blocks(double const* px, double const* py, double const* pz,
            std::size_t n, Vec3 const& lo, Vec3 const& hi, double* k00,
            double* k11, double* k22, double* k01, double* k02, double* k12)
{
    for (std::size_t s = 0; s < n; s += chunk_size)
    {
        std::size_t c = std::min(chunk_size, n - s);
        blocks_chunk(px + s, py + s, pz + s, c, lo, hi, k00 + s, k11 + s,
                     k22 + s, k01 + s, k02 + s, k12 + s);
    }
}

void z_row(double const* px, double const* py, double const* pz,
           std::size_t n, Vec3 const& lo, Vec3 const& hi, double* r0,
           double* r1, double* r2)
{
    for (std::size_t s = 0; s < n; s += chunk_size)
    {
        std::size_t c = std::min(chunk_size, n - s);
        z_row_chunk(px + s, py + s, pz + s, c, lo, hi, r0 + s, r1 + s, r2 + s);
    }
}

void accumulate(double const* px, double const* py, double const* pz,
                std::size_t n, Vec3 const& lo, Vec3 const& hi, Vec3 const& M,
                double* bx, double* by, double* bz)
{
    double k00[chunk_size], k11[chunk_size], k22[chunk_size];
    double k01[chunk_size], k02[chunk_size], k12[chunk_size];
    double const mx = M[0], my = M[1], mz = M[2];
    for (std::size_t s = 0; s < n; s += chunk_size)
    {
        std::size_t c = std::min(chunk_size, n - s);
        blocks_chunk(px + s, py + s, pz + s, c, lo, hi, k00, k11, k22, k01,
                     k02, k12);
        for (std::size_t t = 0; t < c; ++t)
        {
            bx[s + t] += k00[t] * mx + k01[t] * my + k02[t] * mz;
            by[s + t] += k01[t] * mx + k11[t] * my + k12[t] * mz;
            bz[s + t] += k02[t] * mx + k12[t] * my + k22[t] * mz;
        }
    }
}

}  // namespace kernel
}  // namespace maglarmor
