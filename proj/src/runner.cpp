//---------------------------------------------------------------------------//
// Copyright maglarmor contributors: see top-level LICENSE for details
// SPDX-License-Identifier: Apache-2.0
//---------------------------------------------------------------------------//
//! \file src/runner.cpp
//---------------------------------------------------------------------------//
#include "maglarmor/runner.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include "maglarmor/config.hpp"
#include "maglarmor/metrics.hpp"
#include "maglarmor/neutron.hpp"
#include "maglarmor/optimize.hpp"
#include "maglarmor/threading.hpp"

namespace maglarmor
{
namespace
{

using ordered_json = nlohmann::ordered_json;

std::string fm(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

constexpr double to_mm = 1e3;
constexpr double to_mT = 1e3;

std::string half_name(HalfId h)
{
    switch (h)
    {
        case HalfId::top:
            return "top";
        case HalfId::bottom:
            return "bottom";
        default:
            return "fixed";
    }
}

//! Collects artifacts in memory; everything is written at the end so a
//! failed run leaves no partial output set.
class ArtifactSet
{
  public:
    explicit ArtifactSet(std::string out_dir) : dir_(std::move(out_dir)) {}

    void add(std::string name, std::string content)
    {
        files_.emplace_back(std::move(name), std::move(content));
    }

    void add_json(std::string name, ordered_json const& j)
    {
        add(std::move(name), j.dump(2) + "\n");
    }

    //! Write all artifacts plus the manifest; returns the file count
    //! including the manifest.
    std::size_t commit(std::string const& command,
                       std::string const& config_path,
                       std::string const& config_bytes)
    {
        std::filesystem::create_directories(dir_);
        ordered_json manifest;
        manifest["tool"] = "maglarmor";
        manifest["version"] = version_string;
        manifest["command"] = command;
        manifest["config"]
            = std::filesystem::path(config_path).filename().string();
        manifest["config_sha256"] = sha256_hex(config_bytes);
        manifest["reproduce"] = "maglarmor " + command + " --config "
                                + config_path + " --out " + dir_;
        ordered_json outs = ordered_json::array();
        for (auto const& [name, content] : files_)
        {
            write_file(name, content);
            ordered_json o;
            o["file"] = name;
            o["sha256"] = sha256_hex(content);
            o["bytes"] = content.size();
            outs.push_back(o);
        }
        manifest["outputs"] = outs;
        // Timestamp is informational only and enters no digest.
        manifest["generated_at"] = now_utc();
        write_file("manifest.json", manifest.dump(2) + "\n");
        return files_.size() + 1;
    }

  private:
    void write_file(std::string const& name, std::string const& content)
    {
        std::filesystem::path p = std::filesystem::path(dir_) / name;
        std::ofstream out(p, std::ios::binary);
        if (!out)
            throw ConfigError("cannot write \"" + p.string() + "\"");
        out << content;
    }

    static std::string now_utc()
    {
        auto now = std::chrono::system_clock::now();
        std::time_t t = std::chrono::system_clock::to_time_t(now);
        std::tm tm{};
        gmtime_r(&t, &tm);
        char buf[32];
        std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
        return buf;
    }

    std::string dir_;
    std::vector<std::pair<std::string, std::string>> files_;
};

FieldSystem const& need_system(JobConfig const& cfg, std::string const& cmd)
{
    if (!cfg.system)
        throw ConfigError("command \"" + cmd
                          + "\" requires a \"system\" section");
    return *cfg.system;
}

BoxConfig const& need_box(JobConfig const& cfg, std::string const& cmd)
{
    if (!cfg.box)
        throw ConfigError("command \"" + cmd
                          + "\" requires a \"box\" section");
    return *cfg.box;
}

std::string design_csv(MagnetAssembly const& assembly)
{
    std::ostringstream os;
    os << "cx_mm,cy_mm,cz_mm,hx_mm,hy_mm,hz_mm,Mx_mT,My_mT,Mz_mT,half_id\n";
    for (auto const& v : assembly.voxels)
    {
        os << fm(v.center.x() * to_mm) << ',' << fm(v.center.y() * to_mm)
           << ',' << fm(v.center.z() * to_mm) << ','
           << fm(v.half_extent.x() * to_mm) << ','
           << fm(v.half_extent.y() * to_mm) << ','
           << fm(v.half_extent.z() * to_mm) << ','
           << fm(v.magnetization.x() * to_mT) << ','
           << fm(v.magnetization.y() * to_mT) << ','
           << fm(v.magnetization.z() * to_mT) << ',' << half_name(v.half_id)
           << '\n';
    }
    return os.str();
}

std::string history_csv(std::vector<HistoryRow> const& history)
{
    std::ostringstream os;
    os << "iter,F,theta_mT_mm,delta_e_per_m2\n";
    for (auto const& row : history)
        os << row.iter << ',' << fm(row.F) << ',' << fm(row.theta_mT_mm)
           << ',' << fm(row.delta_e) << '\n';
    return os.str();
}

ordered_json report_json(ActionReport const& rep)
{
    ordered_json j;
    j["theta_mT_mm"] = rep.theta_mT_mm;
    j["J_T2_m"] = rep.J;
    j["delta_e_per_m2"] = rep.delta_e;
    j["center_Bz_mT"] = rep.center_Bz_mT;
    return j;
}

ActionReport metrics_of(FieldSystem const& sys, FieldBox const& box,
                        double fd_step)
{
    FieldSampleSet samples = sample_field(sys, box, fd_step);
    ActionReport rep;
    rep.theta_mT_mm = action(samples);
    rep.J = gradient_functional(samples);
    rep.delta_e = relative_error(samples);
    rep.center_Bz_mT = sys.field(box.center()).z() * to_mT;
    return rep;
}

void run_field(JobConfig const& cfg, ArtifactSet& art)
{
    FieldSystem const& sys = need_system(cfg, "field");
    FieldBox box = need_box(cfg, "field").build();
    FieldSampleSet s = sample_field(sys, box, cfg.fd_step);
    std::ostringstream os;
    os << "x_mm,y_mm,z_mm,Bx_mT,By_mT,Bz_mT,dBx_dx_T_m,dBx_dy_T_m,"
          "dBx_dz_T_m,dBy_dx_T_m,dBy_dy_T_m,dBy_dz_T_m,dBz_dx_T_m,"
          "dBz_dy_T_m,dBz_dz_T_m\n";
    for (std::size_t i = 0; i < s.points.size(); ++i)
    {
        os << fm(s.points[i].x() * to_mm) << ',' << fm(s.points[i].y() * to_mm)
           << ',' << fm(s.points[i].z() * to_mm);
        for (int c = 0; c < 3; ++c)
            os << ',' << fm(s.B[i][c] * to_mT);
        for (int c = 0; c < 3; ++c)
            for (int ax = 0; ax < 3; ++ax)
                os << ',' << fm(s.grad[i](c, ax));
        os << '\n';
    }
    art.add("field_samples.csv", os.str());
}

void run_metrics(JobConfig const& cfg, ArtifactSet& art,
                 std::vector<std::string>& warnings)
{
    FieldSystem const& sys = need_system(cfg, "metrics");
    BoxConfig const& bc = need_box(cfg, "metrics");
    ActionReport rep = metrics_of(sys, bc.build(), cfg.fd_step);
    if (rep.theta_mT_mm == 0.0)
        warnings.push_back("action is zero over the scoring box");
    std::ostringstream os;
    os << "theta_mT_mm,J_T2_m,delta_e_per_m2,center_Bz_mT\n"
       << fm(rep.theta_mT_mm) << ',' << fm(rep.J) << ',' << fm(rep.delta_e)
       << ',' << fm(rep.center_Bz_mT) << '\n';
    art.add("metrics.csv", os.str());
    ordered_json j = report_json(rep);
    j["box"] = {{"aperture_mm", bc.aperture * to_mm},
                {"length_mm", bc.length * to_mm},
                {"nx", bc.nx},
                {"ny", bc.ny},
                {"nz", bc.nz}};
    art.add_json("metrics.json", j);
}

void run_optimize(JobConfig const& cfg, ArtifactSet& art,
                  std::vector<std::string>& warnings)
{
    if (!cfg.design)
        throw ConfigError(
            "command \"optimize\" requires a \"design\" section");
    DesignConfig const& d = *cfg.design;
    DesignResult result;
    if (d.opt.mode == DesignMode::topology)
    {
        DesignGrid grid = DesignGrid::block_with_corridor(
            d.grid_voxel, d.grid_size.x(), d.grid_size.y(), d.grid_size.z(),
            d.grid_corridor);
        result = optimize_topology(d.opt, grid);
    }
    else
    {
        RingLayout layout
            = RingLayout::build(d.ring_r_inner, d.ring_r_outer, d.ring_rows,
                                d.ring_sectors, d.ring_length, d.ring_voxel);
        result = optimize_directions(d.opt, layout);
    }
    if (!result.converged)
        warnings.push_back("a line search stalled during optimization");

    art.add("design.csv", design_csv(result.assembly));
    art.add("history.csv", history_csv(result.history));
    ordered_json j;
    j["mode"] = d.opt.mode == DesignMode::topology ? "topology" : "directions";
    j["n_voxels"] = result.assembly.voxels.size();
    j["gap_mm"] = d.opt.gap * to_mm;
    j["remanence_mT"] = d.opt.remanence * to_mT;
    j["theta_target_mT_mm"] = d.opt.theta_target;
    j["lambda"] = result.lambda;
    if (d.opt.mode == DesignMode::topology)
        j["lambda_polish"] = result.lambda_polish;
    j["converged"] = result.converged;
    j["report"] = report_json(result.report);
    j["calibrated_remanence_mT"]
        = calibrate_remanence(d.opt.remanence, result.report.theta_mT_mm,
                              d.opt.theta_target)
          * to_mT;
    if (!result.segment_dirs.empty())
    {
        ordered_json dirs = ordered_json::array();
        for (auto const& v : result.segment_dirs)
            dirs.push_back({v.x(), v.y(), v.z()});
        j["segment_directions"] = dirs;
    }
    art.add_json("design_report.json", j);
}

void run_calibrate(JobConfig const& cfg, ArtifactSet& art)
{
    if (!cfg.calibrate)
        throw ConfigError(
            "command \"calibrate\" requires a \"calibrate\" section");
    CalibrateConfig const& c = *cfg.calibrate;
    FieldSystem const& sys = need_system(cfg, "calibrate");
    FieldBox box = need_box(cfg, "calibrate").build();

    ordered_json j;
    j["variable"] = c.variable;
    j["theta_target_mT_mm"] = c.theta_target;
    ActionReport before = metrics_of(sys, box, cfg.fd_step);
    j["theta_before_mT_mm"] = before.theta_mT_mm;
    if (c.variable == "remanence")
    {
        double br = calibrate_remanence(c.remanence, before.theta_mT_mm,
                                        c.theta_target);
        j["remanence_before_mT"] = c.remanence * to_mT;
        j["remanence_mT"] = br * to_mT;
        FieldSystem scaled = sys;
        for (auto& v : scaled.magnets.voxels)
            v.magnetization *= br / c.remanence;
        j["theta_after_mT_mm"]
            = metrics_of(scaled, box, cfg.fd_step).theta_mT_mm;
    }
    else
    {
        double gap = calibrate_gap(sys.magnets, c.theta_target, c.gap_lo,
                                   c.gap_hi, box, c.tolerance);
        j["gap_range_mm"] = {c.gap_lo * to_mm, c.gap_hi * to_mm};
        j["gap_mm"] = gap * to_mm;
        FieldSystem moved = sys;
        moved.magnets = apply_gap(sys.magnets, gap);
        j["theta_after_mT_mm"]
            = metrics_of(moved, box, cfg.fd_step).theta_mT_mm;
    }
    art.add_json("calibration.json", j);
}

void run_scan(JobConfig const& cfg, ArtifactSet& art)
{
    if (!cfg.scan)
        throw ConfigError("command \"scan\" requires a \"scan\" section");
    ScanConfig const& sc = *cfg.scan;
    FieldSystem const& sys = need_system(cfg, "scan");
    FieldBox box = need_box(cfg, "scan").build();

    ScanResult scan;
    double unit = 1.0;
    std::string value_col;
    if (sc.variable == "gap")
    {
        scan = scan_gap(sys.magnets, sc.values, box);
        unit = to_mm;
        value_col = "gap_mm";
    }
    else if (sc.variable == "remanence")
    {
        scan = scan_remanence(sys.magnets, sys.magnets.gap, sc.reference,
                              sc.values, box);
        unit = to_mT;
        value_col = "remanence_mT";
    }
    else
    {
        scan = scan_current(sys, sc.reference, sc.values, box);
        unit = 1.0;
        value_col = "current_A";
    }

    std::ostringstream os;
    os << value_col << ",theta_mT_mm,J_T2_m,delta_e_per_m2,center_Bz_mT\n";
    std::vector<double> xs, ths, czs;
    for (auto const& row : scan.rows)
    {
        os << fm(row.value * unit) << ',' << fm(row.report.theta_mT_mm) << ','
           << fm(row.report.J) << ',' << fm(row.report.delta_e) << ','
           << fm(row.report.center_Bz_mT) << '\n';
        xs.push_back(row.value * unit);
        ths.push_back(row.report.theta_mT_mm);
        czs.push_back(row.report.center_Bz_mT);
    }
    art.add("scan.csv", os.str());

    ordered_json j;
    j["variable"] = sc.variable;
    j["n_points"] = scan.rows.size();
    if (xs.size() >= 2)
    {
        // Fits are repeated in file units so they match the CSV columns.
        LinearFit lf = fit_linear(xs, ths);
        j["theta_fit"] = {{"slope", lf.slope},
                          {"intercept", lf.intercept},
                          {"r_squared", lf.r_squared}};
    }
    if (xs.size() >= 3)
    {
        QuadraticFit qf = fit_quadratic(xs, czs);
        j["center_bz_fit"] = {{"c0", qf.c0}, {"c1", qf.c1}, {"c2", qf.c2}};
    }
    art.add_json("scan_fit.json", j);
}

void run_polarimeter(JobConfig const& cfg, ArtifactSet& art)
{
    if (!cfg.polarimeter)
        throw ConfigError(
            "command \"polarimeter\" requires a \"polarimeter\" section");
    PolarimeterConfig pc = *cfg.polarimeter;
    FieldSystem const& sys = need_system(cfg, "polarimeter");
    if (!cfg.polarimeter_window_set)
        pc.window = window_for_box(need_box(cfg, "polarimeter").build());

    PolarimeterResult res = polarimeter_scan(sys, pc);
    std::ostringstream os;
    os << "guide_bz_mT,phi_rad,intensity\n";
    for (std::size_t i = 0; i < res.phi.size(); ++i)
        os << fm(res.guide_bz[i] * to_mT) << ',' << fm(res.phi[i]) << ','
           << fm(res.intensity[i]) << '\n';
    art.add("polarimeter.csv", os.str());

    ordered_json j;
    j["device_alpha_rad"] = res.device_alpha;
    j["fit"] = {{"offset", res.fit.offset},
                {"amplitude", res.fit.amplitude},
                {"phase_rad", res.fit.phase}};
    j["alpha_from_fit_rad"] = res.fit.phase;
    art.add_json("polarimeter_fit.json", j);
}

void run_interferometer(JobConfig const& cfg, ArtifactSet& art)
{
    if (!cfg.interferometer)
        throw ConfigError("command \"interferometer\" requires an "
                          "\"interferometer\" section");
    InterferometerConfig const& ic = *cfg.interferometer;
    double alpha;
    if (ic.alpha)
    {
        alpha = *ic.alpha;
    }
    else
    {
        FieldSystem const& sys = need_system(cfg, "interferometer");
        RayWindow window
            = window_for_box(need_box(cfg, "interferometer").build());
        alpha = ray_rotation_angle(sys, ic.y, ic.z, ic.speed, window,
                                   ic.step);
    }
    InterferometerResult res = interferometer_scan(alpha, ic.n_points);
    std::ostringstream os;
    os << "chi_rad,intensity\n";
    for (std::size_t i = 0; i < res.chi.size(); ++i)
        os << fm(res.chi[i]) << ',' << fm(res.intensity[i]) << '\n';
    art.add("interferogram.csv", os.str());

    ordered_json j;
    j["alpha_rad"] = alpha;
    j["contrast"] = res.contrast;
    j["spin_contrast_closed_form"] = spin_contrast(alpha);
    j["fit"] = {{"offset", res.fit.offset},
                {"amplitude", res.fit.amplitude},
                {"phase_rad", res.fit.phase}};
    art.add_json("interferometer.json", j);
}

void run_validate(JobConfig const& cfg, ArtifactSet& art)
{
    ordered_json j;
    j["config"] = "ok";
    ordered_json sections = ordered_json::array();
    if (cfg.system)
        sections.push_back("system");
    if (cfg.box)
        sections.push_back("box");
    if (cfg.design)
        sections.push_back("design");
    if (cfg.calibrate)
        sections.push_back("calibrate");
    if (cfg.scan)
        sections.push_back("scan");
    if (cfg.polarimeter)
        sections.push_back("polarimeter");
    if (cfg.interferometer)
        sections.push_back("interferometer");
    if (cfg.field_map)
        sections.push_back("field_map");
    j["sections"] = sections;
    if (cfg.system)
    {
        j["system"] = {{"n_voxels", cfg.system->magnets.voxels.size()},
                       {"n_coil_loops", cfg.system->coils.size()},
                       {"gap_mm", cfg.system->magnets.gap * to_mm}};
    }
    art.add_json("validation.json", j);
}

void run_export_field_map(JobConfig const& cfg, ArtifactSet& art)
{
    FieldSystem const& sys = need_system(cfg, "export_field_map");
    BoxConfig const& bc = need_box(cfg, "export_field_map");
    FieldMapConfig fmc = cfg.field_map ? *cfg.field_map : FieldMapConfig{};
    if (fmc.nx < 2 || fmc.ny < 2 || fmc.nz < 2)
        throw ConfigError("field map resolution too coarse: need at least "
                          "two samples per axis");

    double const hx = 0.5 * bc.length + fmc.margin;
    double const hy = 0.5 * bc.aperture + fmc.margin;
    double const hz = 0.5 * bc.aperture + fmc.margin;
    std::vector<Vec3> pts;
    pts.reserve(static_cast<std::size_t>(fmc.nx) * fmc.ny * fmc.nz);
    for (int ix = 0; ix < fmc.nx; ++ix)
        for (int iy = 0; iy < fmc.ny; ++iy)
            for (int iz = 0; iz < fmc.nz; ++iz)
                pts.push_back(Vec3(-hx + 2.0 * hx * ix / (fmc.nx - 1),
                                   -hy + 2.0 * hy * iy / (fmc.ny - 1),
                                   -hz + 2.0 * hz * iz / (fmc.nz - 1)));
    std::vector<Vec3> B = sys.fields(pts);
    std::ostringstream os;
    os << "x_mm,y_mm,z_mm,Bx_mT,By_mT,Bz_mT\n";
    for (std::size_t i = 0; i < pts.size(); ++i)
        os << fm(pts[i].x() * to_mm) << ',' << fm(pts[i].y() * to_mm) << ','
           << fm(pts[i].z() * to_mm) << ',' << fm(B[i].x() * to_mT) << ','
           << fm(B[i].y() * to_mT) << ',' << fm(B[i].z() * to_mT) << '\n';
    art.add("field_map.csv", os.str());

    int const n_line = 201;
    std::vector<Vec3> line;
    line.reserve(n_line);
    for (int i = 0; i < n_line; ++i)
        line.push_back(Vec3(-hx + 2.0 * hx * i / (n_line - 1), 0.0, 0.0));
    std::vector<Vec3> Bl = sys.fields(line);
    std::ostringstream ls;
    ls << "x_mm,Bx_mT,By_mT,Bz_mT\n";
    for (int i = 0; i < n_line; ++i)
        ls << fm(line[static_cast<std::size_t>(i)].x() * to_mm) << ','
           << fm(Bl[static_cast<std::size_t>(i)].x() * to_mT) << ','
           << fm(Bl[static_cast<std::size_t>(i)].y() * to_mT) << ','
           << fm(Bl[static_cast<std::size_t>(i)].z() * to_mT) << '\n';
    art.add("line_scan.csv", ls.str());
}

}  // namespace

std::vector<std::string> known_commands()
{
    return {"field",          "metrics",  "optimize",
            "calibrate",      "scan",     "polarimeter",
            "interferometer", "validate", "export_field_map"};
}

std::string sha256_hex(std::string const& bytes)
{
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1
        || EVP_DigestUpdate(ctx, bytes.data(), bytes.size()) != 1
        || EVP_DigestFinal_ex(ctx, digest, &len) != 1)
    {
        EVP_MD_CTX_free(ctx);
        throw NumericalError("SHA-256 digest failed");
    }
    EVP_MD_CTX_free(ctx);
    static char const* hex = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i)
    {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xf]);
    }
    return out;
}

std::vector<std::string> run_command(std::string const& command,
                                     RunOptions const& opts)
{
    set_thread_count(opts.threads);

    std::ifstream in(opts.config_path);
    if (!in)
        throw ConfigError("config: cannot open \"" + opts.config_path + "\"");
    std::ostringstream raw;
    raw << in.rdbuf();
    std::filesystem::path dir
        = std::filesystem::path(opts.config_path).parent_path();
    if (dir.empty())
        dir = ".";
    JobConfig cfg = parse_config(raw.str(), dir.string());

    std::vector<std::string> warnings;
    ArtifactSet art(opts.out_dir);
    if (command == "field")
        run_field(cfg, art);
    else if (command == "metrics")
        run_metrics(cfg, art, warnings);
    else if (command == "optimize")
        run_optimize(cfg, art, warnings);
    else if (command == "calibrate")
        run_calibrate(cfg, art);
    else if (command == "scan")
        run_scan(cfg, art);
    else if (command == "polarimeter")
        run_polarimeter(cfg, art);
    else if (command == "interferometer")
        run_interferometer(cfg, art);
    else if (command == "validate")
        run_validate(cfg, art);
    else if (command == "export_field_map")
        run_export_field_map(cfg, art);
    else
        throw ConfigError("unknown command \"" + command + "\"");

    art.commit(command, opts.config_path, raw.str());
    if (opts.strict && !warnings.empty())
    {
        std::string msg = "strict mode:";
        for (auto const& w : warnings)
            msg += " " + w + ";";
        msg.pop_back();
        throw NumericalError(msg);
    }
    return warnings;
}

}  // namespace maglarmor
