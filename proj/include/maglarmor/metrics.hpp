//---------------------------------------------------------------------------//
// Copyright maglarmor contributors: see top-level LICENSE for details
// SPDX-License-Identifier: Apache-2.0
//---------------------------------------------------------------------------//
//! \file maglarmor/metrics.hpp
//! Action, field-quality, and rotation-angle metrics over the scoring box.
//!
//! theta  = (1/a^2) * sum w*|Bz|, reported in mT*mm.
//! J      = sum w * (|grad Bx|^2 + |grad By|^2 + (dBz/dy)^2 + (dBz/dz)^2);
//!          the dBz/dx term is deliberately absent: variation of Bz along
//!          the beam integrates into the action and does not dephase.
//! delta_e = J / sum w*|B|^2, scale-invariant in the magnetization.
//---------------------------------------------------------------------------//
#pragma once

#include "core.hpp"
#include "magnetostatics.hpp"

namespace maglarmor
{

struct ActionReport
{
    double theta_mT_mm = 0.0;
    double J = 0.0;
    double delta_e = 0.0;
    double center_Bz_mT = 0.0;
};

//! Weighted |Bz| integral over the aperture, in mT*mm.
double action(FieldSampleSet const& samples);

//! Transverse-gradient functional J [T^2*m].
double gradient_functional(FieldSampleSet const& samples);

//! delta_e = J / sum w*|B|^2 [1/m^2]; zero when J is zero.
double relative_error(FieldSampleSet const& samples);

//! Larmor rotation angle [rad] of a neutron of the given speed [m/s]
//! accumulated over an action theta [mT*mm].
double rotation_angle(double theta_mT_mm, double speed);

//! Full report for a field system on a scoring box; center_Bz is evaluated
//! directly at the box center.
ActionReport evaluate_metrics(FieldSystem const& system, FieldBox const& box);

}  // namespace maglarmor
