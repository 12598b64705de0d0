//---------------------------------------------------------------------------//
// Copyright maglarmor contributors: see top-level LICENSE for details
// SPDX-License-Identifier: Apache-2.0
//---------------------------------------------------------------------------//
//! \file maglarmor/runner.hpp
//! Executes one CLI command against a job config and writes its artifacts
//! (CSV tables, JSON summaries, and a manifest with SHA-256 digests) into
//! an output directory.
//---------------------------------------------------------------------------//
#pragma once

#include <string>
#include <vector>

namespace maglarmor
{

struct RunOptions
{
    std::string config_path;
    std::string out_dir = ".";
    //! Promote warnings to NumericalError after all artifacts are written.
    bool strict = false;
    //! 0 keeps the environment/default worker count.
    int threads = 0;
};

//! Known commands: field, metrics, optimize, calibrate, scan, polarimeter,
//! interferometer, validate, export_field_map.
std::vector<std::string> known_commands();

//! Run one command. Returns warnings (empty on a clean run); throws
//! ConfigError for config/usage problems and NumericalError for numerical
//! failures. Artifact files use LF line endings and "%.12g" number
//! formatting, so repeat runs are byte-identical; only the manifest
//! timestamp varies.
std::vector<std::string> run_command(std::string const& command,
                                     RunOptions const& opts);

//! Lowercase hex SHA-256.
std::string sha256_hex(std::string const& bytes);

}  // namespace maglarmor
