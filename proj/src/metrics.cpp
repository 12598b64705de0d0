//---------------------------------------------------------------------------//
// Copyright maglarmor contributors: see top-level LICENSE for details
// SPDX-License-Identifier: Apache-2.0
//---------------------------------------------------------------------------//
//! \file src/metrics.cpp
//---------------------------------------------------------------------------//
#include "maglarmor/metrics.hpp"

#include <cmath>
#include <limits>

namespace maglarmor
{

double action(FieldSampleSet const& samples)
{
    if (!(samples.aperture > 0.0))
        throw ConfigError("sample set has no aperture; build it from a box");
    double acc = 0.0;
    for (std::size_t i = 0; i < samples.B.size(); ++i)
        acc += samples.weights[i] * std::fabs(samples.B[i][2]);
    return acc / (samples.aperture * samples.aperture) * 1e6;
}

double gradient_functional(FieldSampleSet const& samples)
{
    double acc = 0.0;
    for (std::size_t i = 0; i < samples.grad.size(); ++i)
    {
        Mat3 const& g = samples.grad[i];
        double s = g.row(0).squaredNorm() + g.row(1).squaredNorm()
                   + g(2, 1) * g(2, 1) + g(2, 2) * g(2, 2);
        acc += samples.weights[i] * s;
    }
    return acc;
}

double relative_error(FieldSampleSet const& samples)
{
    double J = gradient_functional(samples);
    if (J == 0.0)
        return 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < samples.B.size(); ++i)
        den += samples.weights[i] * samples.B[i].squaredNorm();
    if (den == 0.0)
        return std::numeric_limits<double>::infinity();
    return J / den;
}

double rotation_angle(double theta_mT_mm, double speed)
{
    if (!(speed > 0.0))
        throw ConfigError("neutron speed must be positive");
    return 2.0 * constants::mu_n * (theta_mT_mm * 1e-6)
           / (constants::hbar * speed);
}

ActionReport evaluate_metrics(FieldSystem const& system, FieldBox const& box)
{
    FieldSampleSet s = sample_field(system, box);
    ActionReport r;
    r.theta_mT_mm = action(s);
    r.J = gradient_functional(s);
    r.delta_e = relative_error(s);
    r.center_Bz_mT = system.field(box.center())[2] * 1e3;
    return r;
}

}  // namespace maglarmor
