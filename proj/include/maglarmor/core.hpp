//---------------------------------------------------------------------------//
// Copyright maglarmor contributors: see top-level LICENSE for details
// SPDX-License-Identifier: Apache-2.0
//---------------------------------------------------------------------------//
//! \file maglarmor/core.hpp
//! Shared types, physical constants, and error categories.
//---------------------------------------------------------------------------//
#pragma once

#include <Eigen/Core>
#include <stdexcept>
#include <string>

namespace maglarmor
{

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

inline constexpr char const* version_string = "1.0.0";

namespace constants
{
inline constexpr double pi = 3.14159265358979323846;
//! Vacuum permeability [T*m/A]
inline constexpr double mu0 = 4e-7 * pi;
//! Neutron magnetic moment magnitude [J/T]; the moment itself is negative.
inline constexpr double mu_n = 9.6623647e-27;
//! Reduced Planck constant [J*s]
inline constexpr double hbar = 1.054571817e-34;
//! Default neutron speed [m/s]
inline constexpr double default_speed = 2041.5;
}  // namespace constants

//! Invalid input: geometry, configuration, or units. CLI exit code 1.
class ConfigError : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

//! Computation could not produce a valid result. CLI exit code 2.
class NumericalError : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

inline bool is_finite(Vec3 const& v)
{
    return std::isfinite(v[0]) && std::isfinite(v[1]) && std::isfinite(v[2]);
}

}  // namespace maglarmor
