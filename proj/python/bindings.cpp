//---------------------------------------------------------------------------//
// Copyright maglarmor contributors: see top-level LICENSE for details
// SPDX-License-Identifier: Apache-2.0
//---------------------------------------------------------------------------//
//! \file python/bindings.cpp
//! Python module exposing the core field, metric, optimization, and
//! neutron operations.
//---------------------------------------------------------------------------//
#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "maglarmor/config.hpp"
#include "maglarmor/geometry.hpp"
#include "maglarmor/magnetostatics.hpp"
#include "maglarmor/metrics.hpp"
#include "maglarmor/neutron.hpp"
#include "maglarmor/optimize.hpp"
#include "maglarmor/threading.hpp"

namespace py = pybind11;
using namespace maglarmor;

PYBIND11_MODULE(_core, m)
{
    m.doc() = "maglarmor core: analytic magnet fields, action metrics, "
              "design optimization, and neutron spin dynamics";
    m.attr("__version__") = version_string;

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<NumericalError>(m, "NumericalError",
                                           PyExc_RuntimeError);

    m.def("set_thread_count", &set_thread_count, py::arg("n"));
    m.def("thread_count", &thread_count);

    py::enum_<HalfId>(m, "HalfId")
        .value("fixed", HalfId::fixed)
        .value("top", HalfId::top)
        .value("bottom", HalfId::bottom);

    py::class_<VoxelMagnet>(m, "VoxelMagnet")
        .def(py::init<>())
        .def_readwrite("center", &VoxelMagnet::center)
        .def_readwrite("half_extent", &VoxelMagnet::half_extent)
        .def_readwrite("magnetization", &VoxelMagnet::magnetization)
        .def_readwrite("half_id", &VoxelMagnet::half_id);

    py::class_<MagnetAssembly>(m, "MagnetAssembly")
        .def(py::init<>())
        .def_readwrite("voxels", &MagnetAssembly::voxels)
        .def_readonly("gap", &MagnetAssembly::gap)
        .def("validate", &MagnetAssembly::validate);

    m.def("apply_gap", &apply_gap, py::arg("assembly"), py::arg("dz"));

    py::class_<FieldBox>(m, "FieldBox")
        .def_readonly("a", &FieldBox::a)
        .def_readonly("L", &FieldBox::L)
        .def_readonly("nx", &FieldBox::nx)
        .def_readonly("ny", &FieldBox::ny)
        .def_readonly("nz", &FieldBox::nz)
        .def_readonly("nodes", &FieldBox::nodes)
        .def_readonly("weights", &FieldBox::weights);

    m.def("build_field_box", &build_field_box, py::arg("a"), py::arg("L"),
          py::arg("nx"), py::arg("ny"), py::arg("nz"));

    m.def("cuboid_field", &cuboid_field, py::arg("p"), py::arg("lo"),
          py::arg("hi"), py::arg("M"));
    m.def("cuboid_kernel", &cuboid_kernel, py::arg("p"), py::arg("lo"),
          py::arg("hi"));

    py::class_<WireLoop>(m, "WireLoop")
        .def(py::init<>())
        .def_readwrite("points", &WireLoop::points)
        .def_readwrite("current", &WireLoop::current);

    m.def("build_rect_coil_pair", &build_rect_coil_pair, py::arg("width"),
          py::arg("height"), py::arg("separation"), py::arg("turns"),
          py::arg("current"));

    py::class_<FieldSystem>(m, "FieldSystem")
        .def(py::init<>())
        .def_readwrite("magnets", &FieldSystem::magnets)
        .def_readwrite("coils", &FieldSystem::coils)
        .def_readwrite("uniform_bz", &FieldSystem::uniform_bz)
        .def("field", &FieldSystem::field, py::arg("p"))
        .def("fields", &FieldSystem::fields, py::arg("points"));

    py::class_<ActionReport>(m, "ActionReport")
        .def_readonly("theta_mT_mm", &ActionReport::theta_mT_mm)
        .def_readonly("J", &ActionReport::J)
        .def_readonly("delta_e", &ActionReport::delta_e)
        .def_readonly("center_Bz_mT", &ActionReport::center_Bz_mT);

    m.def("evaluate_metrics", &evaluate_metrics, py::arg("system"),
          py::arg("box"));
    m.def("rotation_angle", &rotation_angle, py::arg("theta_mT_mm"),
          py::arg("speed"));

    py::class_<RayWindow>(m, "RayWindow")
        .def(py::init<>())
        .def(py::init([](double a, double b) {
                 RayWindow w;
                 w.x_start = a;
                 w.x_end = b;
                 return w;
             }),
             py::arg("x_start"), py::arg("x_end"))
        .def_readwrite("x_start", &RayWindow::x_start)
        .def_readwrite("x_end", &RayWindow::x_end);

    m.def("window_for_box", &window_for_box, py::arg("box"),
          py::arg("margin") = ray_margin_default);
    m.def("ray_rotation_angle", &ray_rotation_angle, py::arg("system"),
          py::arg("y"), py::arg("z"), py::arg("speed"), py::arg("window"),
          py::arg("step") = ray_step_default);
    m.def("su2_propagate", &su2_propagate, py::arg("system"), py::arg("y"),
          py::arg("z"), py::arg("speed"), py::arg("window"),
          py::arg("step") = ray_step_default);

    py::class_<DephasingResult>(m, "DephasingResult")
        .def_readonly("contrast", &DephasingResult::contrast)
        .def_readonly("alpha_mean", &DephasingResult::alpha_mean)
        .def_readonly("alphas", &DephasingResult::alphas);

    m.def("beam_dephasing", &beam_dephasing, py::arg("system"), py::arg("n"),
          py::arg("aperture"), py::arg("speed"), py::arg("window"),
          py::arg("step") = ray_step_default);

    py::class_<SinusoidFit>(m, "SinusoidFit")
        .def_readonly("offset", &SinusoidFit::offset)
        .def_readonly("amplitude", &SinusoidFit::amplitude)
        .def_readonly("phase", &SinusoidFit::phase);

    m.def("fit_sinusoid", &fit_sinusoid, py::arg("x"), py::arg("y"));
    m.def("x_flip", &x_flip, py::arg("angle"));

    py::class_<PolarimeterConfig>(m, "PolarimeterConfig")
        .def(py::init<>())
        .def_readwrite("guide_min", &PolarimeterConfig::guide_min)
        .def_readwrite("guide_max", &PolarimeterConfig::guide_max)
        .def_readwrite("n_points", &PolarimeterConfig::n_points)
        .def_readwrite("guide_length", &PolarimeterConfig::guide_length)
        .def_readwrite("speed", &PolarimeterConfig::speed)
        .def_readwrite("y", &PolarimeterConfig::y)
        .def_readwrite("z", &PolarimeterConfig::z)
        .def_readwrite("window", &PolarimeterConfig::window)
        .def_readwrite("step", &PolarimeterConfig::step);

    py::class_<PolarimeterResult>(m, "PolarimeterResult")
        .def_readonly("guide_bz", &PolarimeterResult::guide_bz)
        .def_readonly("phi", &PolarimeterResult::phi)
        .def_readonly("intensity", &PolarimeterResult::intensity)
        .def_readonly("fit", &PolarimeterResult::fit)
        .def_readonly("device_alpha", &PolarimeterResult::device_alpha);

    m.def("polarimeter_scan", &polarimeter_scan, py::arg("device"),
          py::arg("config"));

    m.def("interferometer_intensity", &interferometer_intensity,
          py::arg("alpha"), py::arg("chi"));
    m.def("interferometer_intensity_oracle", &interferometer_intensity_oracle,
          py::arg("alpha"), py::arg("chi"));
    m.def("spin_contrast", &spin_contrast, py::arg("alpha"));

    py::class_<InterferometerResult>(m, "InterferometerResult")
        .def_readonly("chi", &InterferometerResult::chi)
        .def_readonly("intensity", &InterferometerResult::intensity)
        .def_readonly("fit", &InterferometerResult::fit)
        .def_readonly("contrast", &InterferometerResult::contrast);

    m.def("interferometer_scan", &interferometer_scan, py::arg("alpha"),
          py::arg("n_points"));

    py::class_<DesignGrid>(m, "DesignGrid")
        .def_static("block_with_corridor", &DesignGrid::block_with_corridor,
                    py::arg("voxel") = 2e-3, py::arg("Lx") = 20e-3,
                    py::arg("Ly") = 24e-3, py::arg("Lz") = 24e-3,
                    py::arg("corridor") = 4e-3)
        .def_readonly("voxel", &DesignGrid::voxel)
        .def_readonly("centers", &DesignGrid::centers)
        .def_readonly("half", &DesignGrid::half);

    py::class_<RingLayout>(m, "RingLayout")
        .def_static("build", &RingLayout::build, py::arg("r_inner") = 6e-3,
                    py::arg("r_outer") = 12e-3, py::arg("rows") = 2,
                    py::arg("sectors") = 10, py::arg("length") = 20e-3,
                    py::arg("voxel") = 0.5e-3)
        .def_readonly("columns", &RingLayout::columns)
        .def_readonly("segment", &RingLayout::segment)
        .def_property_readonly("n_segments", &RingLayout::n_segments)
        .def("sector_angle", &RingLayout::sector_angle, py::arg("seg"))
        .def("two_pole_init", &RingLayout::two_pole_init)
        .def("assembly", &RingLayout::assembly, py::arg("segment_dirs"),
             py::arg("remanence"));

    py::enum_<DesignMode>(m, "DesignMode")
        .value("topology", DesignMode::topology)
        .value("directions", DesignMode::directions);

    py::class_<OptimizeConfig>(m, "OptimizeConfig")
        .def(py::init<>())
        .def_readwrite("mode", &OptimizeConfig::mode)
        .def_readwrite("remanence", &OptimizeConfig::remanence)
        .def_readwrite("theta_target", &OptimizeConfig::theta_target)
        .def_readwrite("theta_weight", &OptimizeConfig::theta_weight)
        .def_readwrite("max_iters", &OptimizeConfig::max_iters)
        .def_readwrite("polish_iters", &OptimizeConfig::polish_iters)
        .def_readwrite("gap", &OptimizeConfig::gap)
        .def_readwrite("adjust_delta", &OptimizeConfig::adjust_delta)
        .def_readwrite("gap_lo", &OptimizeConfig::gap_lo)
        .def_readwrite("gap_hi", &OptimizeConfig::gap_hi)
        .def_readwrite("box_a", &OptimizeConfig::box_a)
        .def_readwrite("box_L", &OptimizeConfig::box_L)
        .def_readwrite("box_nx", &OptimizeConfig::box_nx)
        .def_readwrite("box_ny", &OptimizeConfig::box_ny)
        .def_readwrite("box_nz", &OptimizeConfig::box_nz)
        .def_readwrite("report_nx", &OptimizeConfig::report_nx)
        .def_readwrite("report_ny", &OptimizeConfig::report_ny)
        .def_readwrite("report_nz", &OptimizeConfig::report_nz);

    py::class_<HistoryRow>(m, "HistoryRow")
        .def_readonly("iter", &HistoryRow::iter)
        .def_readonly("F", &HistoryRow::F)
        .def_readonly("theta_mT_mm", &HistoryRow::theta_mT_mm)
        .def_readonly("delta_e", &HistoryRow::delta_e);

    py::class_<DesignResult>(m, "DesignResult")
        .def_readonly("assembly", &DesignResult::assembly)
        .def_readonly("report", &DesignResult::report)
        .def_readonly("history", &DesignResult::history)
        .def_readonly("converged", &DesignResult::converged)
        .def_readonly("lambda_", &DesignResult::lambda)
        .def_readonly("lambda_polish", &DesignResult::lambda_polish)
        .def_readonly("segment_dirs", &DesignResult::segment_dirs);

    m.def("optimize_topology", &optimize_topology, py::arg("config"),
          py::arg("grid"),
          py::call_guard<py::gil_scoped_release>());
    m.def("optimize_directions", &optimize_directions, py::arg("config"),
          py::arg("layout"),
          py::call_guard<py::gil_scoped_release>());

    m.def("calibrate_remanence", &calibrate_remanence,
          py::arg("current_remanence"), py::arg("theta_measured"),
          py::arg("theta_target"));
    m.def("calibrate_gap", &calibrate_gap, py::arg("reference"),
          py::arg("theta_target"), py::arg("gap_lo"), py::arg("gap_hi"),
          py::arg("box"), py::arg("tol_theta") = 0.01);

    py::class_<LinearFit>(m, "LinearFit")
        .def_readonly("slope", &LinearFit::slope)
        .def_readonly("intercept", &LinearFit::intercept)
        .def_readonly("r_squared", &LinearFit::r_squared);

    py::class_<QuadraticFit>(m, "QuadraticFit")
        .def_readonly("c0", &QuadraticFit::c0)
        .def_readonly("c1", &QuadraticFit::c1)
        .def_readonly("c2", &QuadraticFit::c2);

    m.def("fit_linear", &fit_linear, py::arg("x"), py::arg("y"));
    m.def("fit_quadratic", &fit_quadratic, py::arg("x"), py::arg("y"));

    py::class_<ScanRow>(m, "ScanRow")
        .def_readonly("value", &ScanRow::value)
        .def_readonly("report", &ScanRow::report);

    py::class_<ScanResult>(m, "ScanResult")
        .def_readonly("variable", &ScanResult::variable)
        .def_readonly("rows", &ScanResult::rows)
        .def_readonly("theta_fit", &ScanResult::theta_fit)
        .def_readonly("center_fit", &ScanResult::center_fit);

    m.def("scan_gap", &scan_gap, py::arg("reference"), py::arg("gaps"),
          py::arg("box"));
    m.def("scan_remanence", &scan_remanence, py::arg("reference"),
          py::arg("gap"), py::arg("current_remanence"), py::arg("values"),
          py::arg("box"));
    m.def("scan_current", &scan_current, py::arg("system"),
          py::arg("current_reference"), py::arg("values"), py::arg("box"));

    m.def("load_assembly_csv", &load_assembly_csv, py::arg("path"));
}
