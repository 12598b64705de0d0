//---------------------------------------------------------------------------//
// Copyright maglarmor contributors: see top-level LICENSE for details
// SPDX-License-Identifier: Apache-2.0
//---------------------------------------------------------------------------//
//! \file src/config.cpp
//---------------------------------------------------------------------------//
#include "maglarmor/config.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace maglarmor
{
namespace
{

using nlohmann::json;

[[noreturn]] void fail(std::string const& ctx, std::string const& msg)
{
    throw ConfigError("config: " + ctx + ": " + msg);
}

void require_object(json const& j, std::string const& ctx)
{
    if (!j.is_object())
        fail(ctx, "expected an object");
}

void check_keys(json const& j, std::string const& ctx,
                std::vector<std::string> const& allowed)
{
    require_object(j, ctx);
    for (auto it = j.begin(); it != j.end(); ++it)
    {
        bool ok = false;
        for (auto const& k : allowed)
            if (it.key() == k)
            {
                ok = true;
                break;
            }
        if (!ok)
            fail(ctx, "unknown key \"" + it.key() + "\"");
    }
}

json const& require(json const& j, std::string const& ctx,
                    std::string const& key)
{
    auto it = j.find(key);
    if (it == j.end())
        fail(ctx, "missing required key \"" + key + "\"");
    return *it;
}

double as_number(json const& j, std::string const& ctx)
{
    if (!j.is_number())
        fail(ctx, "expected a number");
    return j.get<double>();
}

double get_number(json const& j, std::string const& ctx,
                  std::string const& key)
{
    return as_number(require(j, ctx, key), ctx + "." + key);
}

double get_number_or(json const& j, std::string const& ctx,
                     std::string const& key, double fallback)
{
    auto it = j.find(key);
    return it == j.end() ? fallback : as_number(*it, ctx + "." + key);
}

int get_int(json const& j, std::string const& ctx, std::string const& key)
{
    json const& v = require(j, ctx, key);
    if (!v.is_number_integer())
        fail(ctx + "." + key, "expected an integer");
    return v.get<int>();
}

int get_int_or(json const& j, std::string const& ctx, std::string const& key,
               int fallback)
{
    auto it = j.find(key);
    if (it == j.end())
        return fallback;
    if (!it->is_number_integer())
        fail(ctx + "." + key, "expected an integer");
    return it->get<int>();
}

std::string get_string(json const& j, std::string const& ctx,
                       std::string const& key)
{
    json const& v = require(j, ctx, key);
    if (!v.is_string())
        fail(ctx + "." + key, "expected a string");
    return v.get<std::string>();
}

Vec3 get_vec3(json const& j, std::string const& ctx, std::string const& key)
{
    json const& v = require(j, ctx, key);
    if (!v.is_array() || v.size() != 3)
        fail(ctx + "." + key, "expected an array of three numbers");
    return Vec3(as_number(v[0], ctx + "." + key),
                as_number(v[1], ctx + "." + key),
                as_number(v[2], ctx + "." + key));
}

std::pair<double, double> get_range(json const& j, std::string const& ctx,
                                    std::string const& key, double lo_def,
                                    double hi_def)
{
    auto it = j.find(key);
    if (it == j.end())
        return {lo_def, hi_def};
    if (!it->is_array() || it->size() != 2)
        fail(ctx + "." + key, "expected an array [lo, hi]");
    return {as_number((*it)[0], ctx + "." + key),
            as_number((*it)[1], ctx + "." + key)};
}

constexpr double mm = 1e-3;
constexpr double mT = 1e-3;

FieldSystem parse_system(json const& j, std::string const& base_dir)
{
    std::string const ctx = "system";
    check_keys(j, ctx, {"gap_mm", "sources"});
    double gap = get_number_or(j, ctx, "gap_mm", 0.0) * mm;
    json const& sources = require(j, ctx, "sources");
    if (!sources.is_array())
        fail(ctx + ".sources", "expected an array");

    FieldSystem sys;
    MagnetAssembly assembly;
    for (std::size_t i = 0; i < sources.size(); ++i)
    {
        std::ostringstream octx;
        octx << ctx << ".sources[" << i << "]";
        std::string sctx = octx.str();
        json const& s = sources[i];
        require_object(s, sctx);
        std::string type = get_string(s, sctx, "type");
        if (type == "uniform")
        {
            check_keys(s, sctx, {"type", "bz_mT"});
            sys.uniform_bz += get_number(s, sctx, "bz_mT") * mT;
        }
        else if (type == "coil")
        {
            check_keys(s, sctx,
                       {"type", "width_mm", "height_mm", "separation_mm",
                        "turns", "current_A"});
            auto loops = build_rect_coil_pair(
                get_number(s, sctx, "width_mm") * mm,
                get_number(s, sctx, "height_mm") * mm,
                get_number(s, sctx, "separation_mm") * mm,
                get_int(s, sctx, "turns"), get_number(s, sctx, "current_A"));
            for (auto& l : loops)
                sys.coils.push_back(std::move(l));
        }
        else if (type == "halbach")
        {
            check_keys(s, sctx,
                       {"type", "r_inner_mm", "r_outer_mm", "rows", "sectors",
                        "length_mm", "voxel_mm", "remanence_mT",
                        "directions"});
            RingLayout layout = RingLayout::build(
                get_number_or(s, sctx, "r_inner_mm", 6.0) * mm,
                get_number_or(s, sctx, "r_outer_mm", 12.0) * mm,
                get_int_or(s, sctx, "rows", 2),
                get_int_or(s, sctx, "sectors", 10),
                get_number_or(s, sctx, "length_mm", 20.0) * mm,
                get_number_or(s, sctx, "voxel_mm", 0.5) * mm);
            double rem = get_number(s, sctx, "remanence_mT") * mT;
            std::vector<Vec3> dirs;
            auto it = s.find("directions");
            if (it == s.end())
            {
                dirs = layout.two_pole_init();
            }
            else
            {
                if (!it->is_array()
                    || static_cast<int>(it->size()) != layout.n_segments())
                    fail(sctx + ".directions",
                         "expected one [dx, dy, dz] per segment");
                for (std::size_t k = 0; k < it->size(); ++k)
                {
                    json const& d = (*it)[k];
                    if (!d.is_array() || d.size() != 3)
                        fail(sctx + ".directions",
                             "expected one [dx, dy, dz] per segment");
                    dirs.push_back(Vec3(as_number(d[0], sctx),
                                        as_number(d[1], sctx),
                                        as_number(d[2], sctx)));
                }
            }
            MagnetAssembly part = layout.assembly(dirs, rem);
            for (auto& v : part.voxels)
                assembly.voxels.push_back(std::move(v));
        }
        else if (type == "topology_grid")
        {
            check_keys(s, sctx,
                       {"type", "voxel_mm", "size_mm", "corridor_mm",
                        "magnetization_mT"});
            Vec3 size = get_vec3(s, sctx, "size_mm") * mm;
            DesignGrid grid = DesignGrid::block_with_corridor(
                get_number_or(s, sctx, "voxel_mm", 2.0) * mm, size.x(),
                size.y(), size.z(),
                get_number_or(s, sctx, "corridor_mm", 4.0) * mm);
            Vec3 M = get_vec3(s, sctx, "magnetization_mT") * mT;
            for (std::size_t k = 0; k < grid.centers.size(); ++k)
            {
                VoxelMagnet v;
                v.center = grid.centers[k];
                v.half_extent = Vec3::Constant(0.5 * grid.voxel);
                v.magnetization = M;
                v.half_id = grid.half[k];
                assembly.voxels.push_back(v);
            }
        }
        else if (type == "assembly_file")
        {
            check_keys(s, sctx, {"type", "path"});
            std::filesystem::path p = get_string(s, sctx, "path");
            if (p.is_relative())
                p = std::filesystem::path(base_dir) / p;
            MagnetAssembly part = load_assembly_csv(p.string());
            for (auto& v : part.voxels)
                assembly.voxels.push_back(std::move(v));
        }
        else
        {
            fail(sctx + ".type", "unknown source type \"" + type + "\"");
        }
    }
    assembly.validate();
    sys.magnets = apply_gap(assembly, gap);
    return sys;
}

BoxConfig parse_box(json const& j, std::string const& ctx)
{
    check_keys(j, ctx, {"aperture_mm", "length_mm", "nx", "ny", "nz"});
    BoxConfig box;
    box.aperture = get_number_or(j, ctx, "aperture_mm", 7.0) * mm;
    box.length = get_number_or(j, ctx, "length_mm", 40.0) * mm;
    box.nx = get_int_or(j, ctx, "nx", box.nx);
    box.ny = get_int_or(j, ctx, "ny", box.ny);
    box.nz = get_int_or(j, ctx, "nz", box.nz);
    if (box.nx < 1 || box.ny < 1 || box.nz < 1)
        fail(ctx, "node counts must be at least 1");
    return box;
}

DesignConfig parse_design(json const& j)
{
    std::string const ctx = "design";
    check_keys(j, ctx,
               {"mode", "remanence_mT", "theta_target_mT_mm", "theta_weight",
                "max_iters", "polish_iters", "gap_mm", "adjust_delta_mT_mm",
                "gap_range_mm", "box", "report_box", "grid", "ring"});
    DesignConfig d;
    std::string mode = get_string(j, ctx, "mode");
    if (mode == "topology")
        d.opt.mode = DesignMode::topology;
    else if (mode == "directions")
        d.opt.mode = DesignMode::directions;
    else
        fail(ctx + ".mode", "expected \"topology\" or \"directions\"");
    d.opt.remanence = get_number_or(j, ctx, "remanence_mT", 61.0) * mT;
    d.opt.theta_target = get_number_or(j, ctx, "theta_target_mT_mm", 35.0);
    d.opt.theta_weight = get_number_or(j, ctx, "theta_weight", 0.0);
    d.opt.max_iters = get_int_or(j, ctx, "max_iters", d.opt.max_iters);
    d.opt.polish_iters
        = get_int_or(j, ctx, "polish_iters", d.opt.polish_iters);
    d.opt.gap = get_number_or(j, ctx, "gap_mm", 2.25) * mm;
    d.opt.adjust_delta = get_number_or(j, ctx, "adjust_delta_mT_mm", 5.0);
    auto [glo, ghi] = get_range(j, ctx, "gap_range_mm", 1.0, 3.5);
    d.opt.gap_lo = glo * mm;
    d.opt.gap_hi = ghi * mm;
    if (auto it = j.find("box"); it != j.end())
    {
        BoxConfig b = parse_box(*it, ctx + ".box");
        d.opt.box_a = b.aperture;
        d.opt.box_L = b.length;
        d.opt.box_nx = b.nx;
        d.opt.box_ny = b.ny;
        d.opt.box_nz = b.nz;
    }
    else
    {
        d.opt.box_nx = 21;
        d.opt.box_ny = 9;
        d.opt.box_nz = 9;
    }
    if (auto it = j.find("report_box"); it != j.end())
    {
        BoxConfig b = parse_box(*it, ctx + ".report_box");
        if (b.aperture != d.opt.box_a || b.length != d.opt.box_L)
            fail(ctx + ".report_box",
                 "report box must share the scoring box extent");
        d.opt.report_nx = b.nx;
        d.opt.report_ny = b.ny;
        d.opt.report_nz = b.nz;
    }
    if (auto it = j.find("grid"); it != j.end())
    {
        std::string gctx = ctx + ".grid";
        check_keys(*it, gctx, {"voxel_mm", "size_mm", "corridor_mm"});
        d.grid_voxel = get_number_or(*it, gctx, "voxel_mm", 2.0) * mm;
        if (it->contains("size_mm"))
            d.grid_size = get_vec3(*it, gctx, "size_mm") * mm;
        d.grid_corridor = get_number_or(*it, gctx, "corridor_mm", 4.0) * mm;
    }
    if (auto it = j.find("ring"); it != j.end())
    {
        std::string rctx = ctx + ".ring";
        check_keys(*it, rctx,
                   {"r_inner_mm", "r_outer_mm", "rows", "sectors",
                    "length_mm", "voxel_mm"});
        d.ring_r_inner = get_number_or(*it, rctx, "r_inner_mm", 6.0) * mm;
        d.ring_r_outer = get_number_or(*it, rctx, "r_outer_mm", 12.0) * mm;
        d.ring_rows = get_int_or(*it, rctx, "rows", 2);
        d.ring_sectors = get_int_or(*it, rctx, "sectors", 10);
        d.ring_length = get_number_or(*it, rctx, "length_mm", 20.0) * mm;
        d.ring_voxel = get_number_or(*it, rctx, "voxel_mm", 0.5) * mm;
    }
    return d;
}

CalibrateConfig parse_calibrate(json const& j)
{
    std::string const ctx = "calibrate";
    check_keys(j, ctx,
               {"variable", "theta_target_mT_mm", "remanence_mT",
                "gap_range_mm", "tolerance_mT_mm"});
    CalibrateConfig c;
    c.variable = get_string(j, ctx, "variable");
    c.theta_target = get_number_or(j, ctx, "theta_target_mT_mm", 35.0);
    c.tolerance = get_number_or(j, ctx, "tolerance_mT_mm", 0.01);
    if (c.variable == "remanence")
    {
        c.remanence = get_number(j, ctx, "remanence_mT") * mT;
    }
    else if (c.variable == "gap")
    {
        auto [lo, hi] = get_range(j, ctx, "gap_range_mm", 1.0, 3.5);
        c.gap_lo = lo * mm;
        c.gap_hi = hi * mm;
    }
    else
    {
        fail(ctx + ".variable", "expected \"remanence\" or \"gap\"");
    }
    return c;
}

ScanConfig parse_scan(json const& j)
{
    std::string const ctx = "scan";
    ScanConfig c;
    require_object(j, ctx);
    c.variable = get_string(j, ctx, "variable");
    std::string values_key;
    double unit = 1.0;
    if (c.variable == "gap")
    {
        check_keys(j, ctx, {"variable", "values_mm"});
        values_key = "values_mm";
        unit = mm;
    }
    else if (c.variable == "remanence")
    {
        check_keys(j, ctx, {"variable", "values_mT", "reference_mT"});
        values_key = "values_mT";
        unit = mT;
        c.reference = get_number(j, ctx, "reference_mT") * mT;
    }
    else if (c.variable == "current")
    {
        check_keys(j, ctx, {"variable", "values_A", "reference_A"});
        values_key = "values_A";
        c.reference = get_number(j, ctx, "reference_A");
    }
    else
    {
        fail(ctx + ".variable",
             "expected \"gap\", \"remanence\", or \"current\"");
    }
    json const& vals = require(j, ctx, values_key);
    if (!vals.is_array() || vals.empty())
        fail(ctx + "." + values_key, "expected a non-empty array of numbers");
    for (auto const& v : vals)
        c.values.push_back(as_number(v, ctx + "." + values_key) * unit);
    return c;
}

PolarimeterConfig parse_polarimeter(json const& j, bool& window_set)
{
    std::string const ctx = "polarimeter";
    check_keys(j, ctx,
               {"guide_min_mT", "guide_max_mT", "n_points", "guide_length_mm",
                "speed_m_per_s", "y_mm", "z_mm", "step_mm", "window_mm"});
    PolarimeterConfig c;
    c.guide_min = get_number(j, ctx, "guide_min_mT") * mT;
    c.guide_max = get_number(j, ctx, "guide_max_mT") * mT;
    c.n_points = get_int_or(j, ctx, "n_points", c.n_points);
    c.guide_length = get_number_or(j, ctx, "guide_length_mm", 500.0) * mm;
    c.speed = get_number_or(j, ctx, "speed_m_per_s", c.speed);
    c.y = get_number_or(j, ctx, "y_mm", 0.0) * mm;
    c.z = get_number_or(j, ctx, "z_mm", 0.0) * mm;
    c.step = get_number_or(j, ctx, "step_mm", c.step / mm) * mm;
    window_set = j.contains("window_mm");
    if (window_set)
    {
        auto [a, b] = get_range(j, ctx, "window_mm", 0.0, 0.0);
        c.window.x_start = a * mm;
        c.window.x_end = b * mm;
    }
    return c;
}

InterferometerConfig parse_interferometer(json const& j)
{
    std::string const ctx = "interferometer";
    check_keys(j, ctx,
               {"n_points", "alpha_rad", "speed_m_per_s", "y_mm", "z_mm",
                "step_mm"});
    InterferometerConfig c;
    c.n_points = get_int_or(j, ctx, "n_points", c.n_points);
    if (j.contains("alpha_rad"))
        c.alpha = get_number(j, ctx, "alpha_rad");
    c.speed = get_number_or(j, ctx, "speed_m_per_s", c.speed);
    c.y = get_number_or(j, ctx, "y_mm", 0.0) * mm;
    c.z = get_number_or(j, ctx, "z_mm", 0.0) * mm;
    c.step = get_number_or(j, ctx, "step_mm", c.step / mm) * mm;
    return c;
}

FieldMapConfig parse_field_map(json const& j)
{
    std::string const ctx = "field_map";
    check_keys(j, ctx, {"margin_mm", "samples"});
    FieldMapConfig c;
    c.margin = get_number_or(j, ctx, "margin_mm", 2.0) * mm;
    if (auto it = j.find("samples"); it != j.end())
    {
        if (!it->is_array() || it->size() != 3)
            fail(ctx + ".samples", "expected [nx, ny, nz]");
        for (int k = 0; k < 3; ++k)
            if (!(*it)[static_cast<std::size_t>(k)].is_number_integer())
                fail(ctx + ".samples", "expected [nx, ny, nz]");
        c.nx = (*it)[0].get<int>();
        c.ny = (*it)[1].get<int>();
        c.nz = (*it)[2].get<int>();
        if (c.nx < 1 || c.ny < 1 || c.nz < 1)
            fail(ctx + ".samples", "sample counts must be at least 1");
    }
    return c;
}

}  // namespace

JobConfig parse_config(std::string const& text, std::string const& base_dir)
{
    json j;
    try
    {
        j = json::parse(text);
    }
    catch (json::parse_error const& e)
    {
        throw ConfigError(std::string("config: invalid JSON: ") + e.what());
    }
    require_object(j, "top level");
    check_keys(j, "top level",
               {"schema_version", "system", "box", "design", "calibrate",
                "scan", "polarimeter", "interferometer", "field_map",
                "fd_step_mm"});
    json const& ver = require(j, "top level", "schema_version");
    if (!ver.is_number_integer()
        || ver.get<int>() != schema_version_current)
        fail("top level.schema_version",
             "unsupported value (expected "
                 + std::to_string(schema_version_current) + ")");

    JobConfig cfg;
    cfg.fd_step = get_number_or(j, "top level", "fd_step_mm",
                                fd_step_default / mm)
                  * mm;
    if (cfg.fd_step <= 0.0)
        fail("top level.fd_step_mm", "must be positive");
    if (auto it = j.find("system"); it != j.end())
        cfg.system = parse_system(*it, base_dir);
    if (auto it = j.find("box"); it != j.end())
        cfg.box = parse_box(*it, "box");
    if (auto it = j.find("design"); it != j.end())
        cfg.design = parse_design(*it);
    if (auto it = j.find("calibrate"); it != j.end())
        cfg.calibrate = parse_calibrate(*it);
    if (auto it = j.find("scan"); it != j.end())
        cfg.scan = parse_scan(*it);
    if (auto it = j.find("polarimeter"); it != j.end())
        cfg.polarimeter = parse_polarimeter(*it, cfg.polarimeter_window_set);
    if (auto it = j.find("interferometer"); it != j.end())
        cfg.interferometer = parse_interferometer(*it);
    if (auto it = j.find("field_map"); it != j.end())
        cfg.field_map = parse_field_map(*it);
    return cfg;
}

JobConfig load_config(std::string const& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("config: cannot open \"" + path + "\"");
    std::ostringstream ss;
    ss << in.rdbuf();
    std::filesystem::path dir = std::filesystem::path(path).parent_path();
    if (dir.empty())
        dir = ".";
    return parse_config(ss.str(), dir.string());
}

MagnetAssembly load_assembly_csv(std::string const& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("assembly file: cannot open \"" + path + "\"");
    std::string line;
    if (!std::getline(in, line))
        throw ConfigError("assembly file: \"" + path + "\" is empty");
    if (!line.empty() && line.back() == '\r')
        line.pop_back();
    std::string const header
        = "cx_mm,cy_mm,cz_mm,hx_mm,hy_mm,hz_mm,Mx_mT,My_mT,Mz_mT,half_id";
    if (line != header)
        throw ConfigError("assembly file: \"" + path
                          + "\" has an unexpected header (want \"" + header
                          + "\")");
    MagnetAssembly assembly;
    int lineno = 1;
    while (std::getline(in, line))
    {
        ++lineno;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty())
            continue;
        std::istringstream ls(line);
        std::string tok;
        std::vector<std::string> toks;
        while (std::getline(ls, tok, ','))
            toks.push_back(tok);
        if (toks.size() != 10)
            throw ConfigError("assembly file: line "
                              + std::to_string(lineno)
                              + ": expected 10 comma-separated fields");
        double v[9];
        for (int i = 0; i < 9; ++i)
        {
            try
            {
                v[i] = std::stod(toks[static_cast<std::size_t>(i)]);
            }
            catch (std::exception const&)
            {
                throw ConfigError("assembly file: line "
                                  + std::to_string(lineno)
                                  + ": field " + std::to_string(i + 1)
                                  + " is not a number");
            }
        }
        VoxelMagnet vox;
        vox.center = Vec3(v[0], v[1], v[2]) * mm;
        vox.half_extent = Vec3(v[3], v[4], v[5]) * mm;
        vox.magnetization = Vec3(v[6], v[7], v[8]) * mT;
        std::string const& h = toks[9];
        if (h == "fixed")
            vox.half_id = HalfId::fixed;
        else if (h == "top")
            vox.half_id = HalfId::top;
        else if (h == "bottom")
            vox.half_id = HalfId::bottom;
        else
            throw ConfigError("assembly file: line " + std::to_string(lineno)
                              + ": half_id must be fixed, top, or bottom");
        assembly.voxels.push_back(vox);
    }
    if (assembly.voxels.empty())
        throw ConfigError("assembly file: \"" + path + "\" has no voxels");
    return assembly;
}

}  // namespace maglarmor
