//---------------------------------------------------------------------------//
// Copyright maglarmor contributors: see top-level LICENSE for details
// SPDX-License-Identifier: Apache-2.0
//---------------------------------------------------------------------------//
//! \file maglarmor/config.hpp
//! JSON job configuration: strict parsing into domain objects.
//!
//! Schema: a single object with "schema_version": 1 and optional sections
//! "system", "box", "design", "calibrate", "scan", "polarimeter",
//! "interferometer", "field_map", "fd_step_mm". Unknown keys anywhere are
//! rejected with the offending path named. Units in files are mm, mT, A,
//! m/s, rad; everything is converted to SI (m, T) on load.
//---------------------------------------------------------------------------//
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "core.hpp"
#include "magnetostatics.hpp"
#include "neutron.hpp"
#include "optimize.hpp"

namespace maglarmor
{

inline constexpr int schema_version_current = 1;

struct BoxConfig
{
    double aperture = 7e-3;
    double length = 40e-3;
    int nx = 81;
    int ny = 15;
    int nz = 15;

    FieldBox build() const { return build_field_box(aperture, length, nx, ny, nz); }
};

//! Design job: optimizer settings plus the domain description for the
//! selected mode.
struct DesignConfig
{
    OptimizeConfig opt;
    //! Topology mode domain.
    double grid_voxel = 2e-3;
    Vec3 grid_size{20e-3, 24e-3, 24e-3};
    double grid_corridor = 4e-3;
    //! Directions mode domain.
    double ring_r_inner = 6e-3;
    double ring_r_outer = 12e-3;
    int ring_rows = 2;
    int ring_sectors = 10;
    double ring_length = 20e-3;
    double ring_voxel = 0.5e-3;
};

struct CalibrateConfig
{
    //! "remanence" | "gap"
    std::string variable;
    double theta_target = 35.0;
    //! Current remanence [T] (variable == "remanence").
    double remanence = 0.0;
    //! Search range [m] (variable == "gap").
    double gap_lo = 1.0e-3;
    double gap_hi = 3.5e-3;
    double tolerance = 0.01;
};

struct ScanConfig
{
    //! "gap" | "remanence" | "current"
    std::string variable;
    //! SI values (m, T, or A).
    std::vector<double> values;
    //! Reference remanence [T] or current [A]; unused for gap scans.
    double reference = 0.0;
};

struct InterferometerConfig
{
    int n_points = 256;
    //! Spin rotation in the spin path [rad]; when absent it is computed
    //! from the configured system along the ray at (y, z).
    std::optional<double> alpha;
    double speed = constants::default_speed;
    double y = 0.0;
    double z = 0.0;
    double step = ray_step_default;
};

struct FieldMapConfig
{
    //! Margin added around the box in all directions [m].
    double margin = 2e-3;
    int nx = 41;
    int ny = 15;
    int nz = 15;
};

struct JobConfig
{
    std::optional<FieldSystem> system;
    std::optional<BoxConfig> box;
    std::optional<DesignConfig> design;
    std::optional<CalibrateConfig> calibrate;
    std::optional<ScanConfig> scan;
    std::optional<PolarimeterConfig> polarimeter;
    //! True when the polarimeter window was given explicitly.
    bool polarimeter_window_set = false;
    std::optional<InterferometerConfig> interferometer;
    std::optional<FieldMapConfig> field_map;
    double fd_step = fd_step_default;
};

//! Parse and validate a job file. Paths inside the config (assembly files)
//! are resolved relative to the config file's directory. Throws ConfigError
//! naming the offending field.
JobConfig load_config(std::string const& path);

//! Parse a config from a JSON string (paths resolve against base_dir).
JobConfig parse_config(std::string const& text, std::string const& base_dir);

//! Voxel assembly CSV: header cx_mm,cy_mm,cz_mm,hx_mm,hy_mm,hz_mm,
//! Mx_mT,My_mT,Mz_mT,half_id with half_id in {fixed,top,bottom}.
MagnetAssembly load_assembly_csv(std::string const& path);

}  // namespace maglarmor
