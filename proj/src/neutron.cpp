//---------------------------------------------------------------------------//
// Copyright maglarmor contributors: see top-level LICENSE for details
// SPDX-License-Identifier: Apache-2.0
//---------------------------------------------------------------------------//
//! \file src/neutron.cpp
//---------------------------------------------------------------------------//
#include "maglarmor/neutron.hpp"

#include <cmath>
#include <complex>

#include <Eigen/Dense>

namespace maglarmor
{
namespace
{
using namespace std::complex_literals;

//! 2 mu_n / (hbar * v): angle per (tesla * meter).
double larmor_coefficient(double speed)
{
    if (!(speed > 0.0))
        throw ConfigError("neutron speed must be positive");
    return 2.0 * constants::mu_n / (constants::hbar * speed);
}

struct RaySteps
{
    std::vector<Vec3> points;
    double h = 0.0;
};

RaySteps ray_midpoints(double y, double z, RayWindow const& window,
                       double step)
{
    double len = window.x_end - window.x_start;
    if (!(len > 0.0))
        throw ConfigError("ray window must have positive length");
    if (!(step > 0.0))
        throw ConfigError("ray step must be positive");
    int n = static_cast<int>(std::ceil(len / step));
    RaySteps out;
    out.h = len / n;
    out.points.reserve(n);
    for (int i = 0; i < n; ++i)
    {
        out.points.emplace_back(window.x_start + (i + 0.5) * out.h, y, z);
    }
    return out;
}
}  // namespace

RayWindow window_for_box(FieldBox const& box, double margin)
{
    return {-box.L / 2 - margin, box.L / 2 + margin};
}

double ray_rotation_angle(FieldSystem const& system, double y, double z,
                          double speed, RayWindow const& window, double step)
{
    RaySteps rs = ray_midpoints(y, z, window, step);
    std::vector<Vec3> B = system.fields(rs.points);
    double integral = 0.0;
    for (auto const& b : B)
        integral += b[2] * rs.h;
    return larmor_coefficient(speed) * integral;
}

SU2 su2_propagate(FieldSystem const& system, double y, double z, double speed,
                  RayWindow const& window, double step)
{
    RaySteps rs = ray_midpoints(y, z, window, step);
    std::vector<Vec3> B = system.fields(rs.points);
    double coef = larmor_coefficient(speed);
    SU2 U = SU2::Identity();
    for (auto const& b : B)
    {
        double mag = b.norm();
        if (mag == 0.0)
            continue;
        double t = coef * mag * rs.h;
        double c = std::cos(t / 2);
        double s = std::sin(t / 2);
        Vec3 n = b / mag;
        SU2 step_u;
        step_u << c + 1i * s * n[2], s * (n[1] + 1i * n[0]),
            s * (-n[1] + 1i * n[0]), c - 1i * s * n[2];
        U = step_u * U;
    }
    return U;
}

DephasingResult beam_dephasing(FieldSystem const& system, int n,
                               double aperture, double speed,
                               RayWindow const& window, double step)
{
    if (n < 1)
        throw ConfigError("ray grid must be at least 1x1");
    if (!(aperture > 0.0))
        throw ConfigError("aperture must be positive");

    // Batch every ray's integration points into one field evaluation.
    double len = window.x_end - window.x_start;
    if (!(len > 0.0))
        throw ConfigError("ray window must have positive length");
    int steps = static_cast<int>(std::ceil(len / step));
    double h = len / steps;
    std::vector<Vec3> pts;
    pts.reserve(static_cast<std::size_t>(n) * n * steps);
    for (int iy = 0; iy < n; ++iy)
    {
        double y = (iy + 0.5) / n * aperture - aperture / 2;
        for (int iz = 0; iz < n; ++iz)
        {
            double z = (iz + 0.5) / n * aperture - aperture / 2;
            for (int i = 0; i < steps; ++i)
                pts.emplace_back(window.x_start + (i + 0.5) * h, y, z);
        }
    }
    std::vector<Vec3> B = system.fields(pts);

    double coef = larmor_coefficient(speed);
    DephasingResult out;
    out.alphas.reserve(static_cast<std::size_t>(n) * n);
    std::complex<double> phasor = 0.0;
    for (int r = 0; r < n * n; ++r)
    {
        double integral = 0.0;
        for (int i = 0; i < steps; ++i)
            integral += B[static_cast<std::size_t>(r) * steps + i][2] * h;
        double alpha = coef * integral;
        out.alphas.push_back(alpha);
        phasor += std::exp(1i * alpha);
    }
    phasor /= static_cast<double>(n) * n;
    out.contrast = std::abs(phasor);
    out.alpha_mean = std::arg(phasor);
    return out;
}

SinusoidFit fit_sinusoid(std::vector<double> const& x,
                         std::vector<double> const& y)
{
    if (x.size() != y.size())
        throw ConfigError("fit_sinusoid: size mismatch");
    if (x.size() < 3)
        throw ConfigError("fit_sinusoid: need at least 3 samples");

    Eigen::MatrixXd A(x.size(), 3);
    Eigen::VectorXd rhs(x.size());
    for (std::size_t i = 0; i < x.size(); ++i)
    {
        A(i, 0) = 1.0;
        A(i, 1) = std::cos(x[i]);
        A(i, 2) = std::sin(x[i]);
        rhs(i) = y[i];
    }
    Eigen::Vector3d sol = A.colPivHouseholderQr().solve(rhs);
    SinusoidFit fit;
    fit.offset = sol[0];
    fit.amplitude = std::hypot(sol[1], sol[2]);
    fit.phase = fit.amplitude > 0.0 ? std::atan2(-sol[2], sol[1]) : 0.0;
    return fit;
}

SU2 x_flip(double angle)
{
    double c = std::cos(angle / 2);
    double s = std::sin(angle / 2);
    SU2 U;
    U << c, 1i * s, 1i * s, c;
    return U;
}

PolarimeterResult polarimeter_scan(FieldSystem const& device,
                                   PolarimeterConfig const& cfg)
{
    if (cfg.n_points < 3)
        throw ConfigError("polarimeter scan needs at least 3 points");
    if (!(cfg.guide_length > 0.0))
        throw ConfigError("guide length must be positive");

    double coef = larmor_coefficient(cfg.speed);
    PolarimeterResult out;
    out.device_alpha = ray_rotation_angle(device, cfg.y, cfg.z, cfg.speed,
                                          cfg.window, cfg.step);
    SU2 U_dev = su2_propagate(device, cfg.y, cfg.z, cfg.speed, cfg.window,
                              cfg.step);
    // The two flip coils run with opposite currents.
    SU2 dc1 = x_flip(-constants::pi / 2);
    SU2 dc2 = x_flip(constants::pi / 2);

    out.guide_bz.reserve(cfg.n_points);
    out.phi.reserve(cfg.n_points);
    out.intensity.reserve(cfg.n_points);
    for (int i = 0; i < cfg.n_points; ++i)
    {
        double b0 = cfg.n_points == 1
                        ? cfg.guide_min
                        : cfg.guide_min
                              + (cfg.guide_max - cfg.guide_min) * i
                                    / (cfg.n_points - 1);
        double phi = coef * b0 * cfg.guide_length;
        SU2 guide;
        guide << std::exp(1i * phi / 2.0), 0.0, 0.0, std::exp(-1i * phi / 2.0);
        Spinor psi = dc2 * U_dev * guide * dc1 * Spinor(1.0, 0.0);
        out.guide_bz.push_back(b0);
        out.phi.push_back(phi);
        out.intensity.push_back(std::norm(psi[0]));
    }
    out.fit = fit_sinusoid(out.phi, out.intensity);
    return out;
}

double interferometer_intensity(double alpha, double chi)
{
    return 0.5 * (1.0 + std::cos(alpha / 2) * std::cos(chi));
}

double interferometer_intensity_oracle(double alpha, double chi)
{
    using M4 = Eigen::Matrix4cd;
    using M2 = Eigen::Matrix2cd;
    auto kron = [](M2 const& a, M2 const& b) {
        M4 out;
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j)
                out.block<2, 2>(2 * i, 2 * j) = a(i, j) * b;
        return out;
    };
    M2 I2 = M2::Identity();
    M2 splitter_p;
    splitter_p << 1.0, 1i, 1i, 1.0;
    splitter_p /= std::sqrt(2.0);
    M2 mirror_p;
    mirror_p << 0.0, 1i, 1i, 0.0;
    M2 proj_one = (M2() << 1, 0, 0, 0).finished();
    M2 proj_two = (M2() << 0, 0, 0, 1).finished();
    M2 rot_z;
    rot_z << std::exp(1i * alpha / 2.0), 0.0, 0.0, std::exp(-1i * alpha / 2.0);

    M4 S = kron(splitter_p, I2);
    M4 Mr = kron(mirror_p, I2);
    // Spin rotation in path one; phase flag chi in path two.
    M4 G = kron(proj_one, rot_z)
           + kron(proj_two, std::exp(1i * chi) * I2);
    M4 U = S * G * Mr * S;
    // Path one entering; unpolarized spin.
    M4 rho0 = kron(proj_one, 0.5 * I2);
    M4 rho = U * rho0 * U.adjoint();
    std::complex<double> tr = (kron(proj_one, I2) * rho).trace();
    return tr.real();
}

double spin_contrast(double alpha)
{
    double i0 = interferometer_intensity(alpha, 0.0);
    double ipi = interferometer_intensity(alpha, constants::pi);
    return (i0 - ipi) / (i0 + ipi);
}

InterferometerResult interferometer_scan(double alpha, int n_points)
{
    if (n_points < 3)
        throw ConfigError("interferometer scan needs at least 3 points");
    InterferometerResult out;
    out.chi.reserve(n_points);
    out.intensity.reserve(n_points);
    for (int i = 0; i < n_points; ++i)
    {
        double chi = 2 * constants::pi * i / n_points;
        out.chi.push_back(chi);
        out.intensity.push_back(interferometer_intensity(alpha, chi));
    }
    out.fit = fit_sinusoid(out.chi, out.intensity);
    out.contrast = out.fit.offset != 0.0 ? out.fit.amplitude / out.fit.offset
                                         : 0.0;
    return out;
}

}  // namespace maglarmor
