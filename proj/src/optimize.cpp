//---------------------------------------------------------------------------//
// Copyright maglarmor contributors: see top-level LICENSE for details
// SPDX-License-Identifier: Apache-2.0
//---------------------------------------------------------------------------//
//! \file src/optimize.cpp
//---------------------------------------------------------------------------//
#include "maglarmor/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <utility>

#include <Eigen/Dense>

#include "maglarmor/magnetostatics.hpp"
#include "maglarmor/threading.hpp"

namespace maglarmor
{
namespace
{

using Eigen::MatrixXd;
using Eigen::VectorXd;

//! (component, axis) pairs entering J; dBz/dx is excluded.
constexpr int grad_rows[8][2] = {
    {0, 0}, {0, 1}, {0, 2}, {1, 0}, {1, 1}, {1, 2}, {2, 1}, {2, 2}};

Vec3 gapped_center(VoxelMagnet const& v, double dz)
{
    Vec3 c = v.center;
    if (v.half_id == HalfId::top)
        c.z() += 0.5 * dz;
    else if (v.half_id == HalfId::bottom)
        c.z() -= 0.5 * dz;
    return c;
}

//! Linear response of the scoring box to grouped voxel magnetizations.
//! Columns are (group, component); groups sharing a column are exact for
//! uniform group magnetization.
struct Operators
{
    MatrixXd Az;            //!< N x 3G: Bz at the nodes
    MatrixXd Ag;            //!< 8N x 3G: J gradient rows at the nodes
    MatrixXd Az_lo, Az_hi;  //!< N x 3G: Bz at the gap extremes
    VectorXd w;             //!< node weights
    VectorXd w8;            //!< weights repeated per gradient row
    double a = 0.0;
    std::size_t n = 0;
    int groups = 0;
};

std::vector<std::vector<int>> group_members(std::vector<int> const& group,
                                            int n_groups)
{
    std::vector<std::vector<int>> members(n_groups);
    for (std::size_t v = 0; v < group.size(); ++v)
        members[group[v]].push_back(static_cast<int>(v));
    return members;
}

Operators assemble_operators(std::vector<VoxelMagnet> const& voxels,
                             std::vector<int> const& group, int n_groups,
                             FieldBox const& box, double gap_ref,
                             bool with_extremes, double gap_lo, double gap_hi,
                             double h = fd_step_default)
{
    Operators ops;
    std::size_t const n = box.nodes.size();
    ops.n = n;
    ops.a = box.a;
    ops.groups = n_groups;
    ops.w = Eigen::Map<VectorXd const>(box.weights.data(),
                                       static_cast<Eigen::Index>(n));
    ops.w8.resize(static_cast<Eigen::Index>(8 * n));
    for (std::size_t i = 0; i < n; ++i)
        for (int r = 0; r < 8; ++r)
            ops.w8[static_cast<Eigen::Index>(8 * i + r)] = box.weights[i];

    ops.Az = MatrixXd::Zero(static_cast<Eigen::Index>(n), 3 * n_groups);
    ops.Ag = MatrixXd::Zero(static_cast<Eigen::Index>(8 * n), 3 * n_groups);
    if (with_extremes)
    {
        ops.Az_lo = MatrixXd::Zero(static_cast<Eigen::Index>(n), 3 * n_groups);
        ops.Az_hi = MatrixXd::Zero(static_cast<Eigen::Index>(n), 3 * n_groups);
    }

    // Extended points: node then +-x, +-y, +-z offsets.
    std::vector<double> px(7 * n), py(7 * n), pz(7 * n);
    std::vector<double> cx(n), cy(n), cz(n);
    for (std::size_t i = 0; i < n; ++i)
    {
        Vec3 const& p = box.nodes[i];
        cx[i] = p.x();
        cy[i] = p.y();
        cz[i] = p.z();
        std::size_t b = 7 * i;
        for (int k = 0; k < 7; ++k)
        {
            px[b + k] = p.x();
            py[b + k] = p.y();
            pz[b + k] = p.z();
        }
        px[b + 1] += h;
        px[b + 2] -= h;
        py[b + 3] += h;
        py[b + 4] -= h;
        pz[b + 5] += h;
        pz[b + 6] -= h;
    }

    auto members = group_members(group, n_groups);
    double const inv2h = 1.0 / (2.0 * h);

    parallel_for(static_cast<std::size_t>(n_groups), [&](std::size_t g) {
        thread_local std::vector<double> k00, k11, k22, k01, k02, k12;
        thread_local std::vector<double> r0, r1, r2;
        k00.resize(7 * n);
        k11.resize(7 * n);
        k22.resize(7 * n);
        k01.resize(7 * n);
        k02.resize(7 * n);
        k12.resize(7 * n);
        for (int v : members[g])
        {
            VoxelMagnet const& vox = voxels[static_cast<std::size_t>(v)];
            Vec3 c = gapped_center(vox, gap_ref);
            kernel::blocks(px.data(), py.data(), pz.data(), 7 * n,
                           c - vox.half_extent, c + vox.half_extent,
                           k00.data(), k11.data(), k22.data(), k01.data(),
                           k02.data(), k12.data());
            double const* K[3][3] = {{k00.data(), k01.data(), k02.data()},
                                     {k01.data(), k11.data(), k12.data()},
                                     {k02.data(), k12.data(), k22.data()}};
            for (int comp = 0; comp < 3; ++comp)
            {
                Eigen::Index col = 3 * static_cast<Eigen::Index>(g) + comp;
                double* az = ops.Az.col(col).data();
                double* ag = ops.Ag.col(col).data();
                for (std::size_t i = 0; i < n; ++i)
                {
                    std::size_t b = 7 * i;
                    az[i] += K[2][comp][b];
                    for (int r = 0; r < 8; ++r)
                    {
                        int rc = grad_rows[r][0];
                        int ax = grad_rows[r][1];
                        ag[8 * i + r] += (K[rc][comp][b + 1 + 2 * ax]
                                          - K[rc][comp][b + 2 + 2 * ax])
                                         * inv2h;
                    }
                }
            }
            if (with_extremes)
            {
                r0.resize(n);
                r1.resize(n);
                r2.resize(n);
                for (int side = 0; side < 2; ++side)
                {
                    double gap = side == 0 ? gap_lo : gap_hi;
                    MatrixXd& A = side == 0 ? ops.Az_lo : ops.Az_hi;
                    Vec3 ce = gapped_center(vox, gap);
                    kernel::z_row(cx.data(), cy.data(), cz.data(), n,
                                  ce - vox.half_extent, ce + vox.half_extent,
                                  r0.data(), r1.data(), r2.data());
                    double const* R[3] = {r0.data(), r1.data(), r2.data()};
                    for (int comp = 0; comp < 3; ++comp)
                    {
                        Eigen::Index col
                            = 3 * static_cast<Eigen::Index>(g) + comp;
                        double* az = A.col(col).data();
                        for (std::size_t i = 0; i < n; ++i)
                            az[i] += R[comp][i];
                    }
                }
            }
        }
    });
    return ops;
}

//! Full-field response at the nodes: rows are (node, component).
MatrixXd assemble_b_operator(std::vector<VoxelMagnet> const& voxels,
                             std::vector<int> const& group, int n_groups,
                             FieldBox const& box, double gap_ref)
{
    std::size_t const n = box.nodes.size();
    MatrixXd Ab = MatrixXd::Zero(static_cast<Eigen::Index>(3 * n),
                                 3 * n_groups);
    std::vector<double> cx(n), cy(n), cz(n);
    for (std::size_t i = 0; i < n; ++i)
    {
        cx[i] = box.nodes[i].x();
        cy[i] = box.nodes[i].y();
        cz[i] = box.nodes[i].z();
    }
    auto members = group_members(group, n_groups);
    parallel_for(static_cast<std::size_t>(n_groups), [&](std::size_t g) {
        thread_local std::vector<double> k00, k11, k22, k01, k02, k12;
        k00.resize(n);
        k11.resize(n);
        k22.resize(n);
        k01.resize(n);
        k02.resize(n);
        k12.resize(n);
        for (int v : members[g])
        {
            VoxelMagnet const& vox = voxels[static_cast<std::size_t>(v)];
            Vec3 c = gapped_center(vox, gap_ref);
            kernel::blocks(cx.data(), cy.data(), cz.data(), n,
                           c - vox.half_extent, c + vox.half_extent,
                           k00.data(), k11.data(), k22.data(), k01.data(),
                           k02.data(), k12.data());
            double const* K[3][3] = {{k00.data(), k01.data(), k02.data()},
                                     {k01.data(), k11.data(), k12.data()},
                                     {k02.data(), k12.data(), k22.data()}};
            for (int comp = 0; comp < 3; ++comp)
            {
                Eigen::Index col = 3 * static_cast<Eigen::Index>(g) + comp;
                double* ab = Ab.col(col).data();
                for (std::size_t i = 0; i < n; ++i)
                    for (int rc = 0; rc < 3; ++rc)
                        ab[3 * i + rc] += K[rc][comp][i];
            }
        }
    });
    return Ab;
}

//! One action penalty term: operator and target [mT*mm].
struct ActionTerm
{
    MatrixXd const* A = nullptr;
    double target = 0.0;
};

struct ObjVal
{
    double F = 0.0;
    double J = 0.0;
    //! Action of the first term (the operating gap) [mT*mm].
    double theta = 0.0;
    //! Cached products for the gradient pass.
    VectorXd gvec;               // Ag * m
    std::vector<VectorXd> bvec;  // A_k * m
};

class Objective
{
  public:
    Objective(Operators const& ops, std::vector<ActionTerm> terms,
              double lambda)
        : ops_(ops), terms_(std::move(terms)), lambda_(lambda)
    {
    }

    double lambda() const { return lambda_; }
    void set_lambda(double l) { lambda_ = l; }

    double theta_of(VectorXd const& b) const
    {
        double s = 0.0;
        for (Eigen::Index i = 0; i < b.size(); ++i)
            s += ops_.w[i] * std::fabs(b[i]);
        return s / (ops_.a * ops_.a) * 1e6;
    }

    //! Sum of squared action deviations at m (for the automatic lambda).
    double penalty_at(VectorXd const& m) const
    {
        double p = 0.0;
        for (auto const& t : terms_)
        {
            double dth = theta_of(*t.A * m) - t.target;
            p += dth * dth;
        }
        return p;
    }

    ObjVal value(VectorXd const& m) const
    {
        ObjVal o;
        o.gvec = ops_.Ag * m;
        o.J = ops_.w8.cwiseProduct(o.gvec).dot(o.gvec);
        o.F = o.J;
        o.bvec.reserve(terms_.size());
        bool first = true;
        for (auto const& t : terms_)
        {
            o.bvec.push_back(*t.A * m);
            double th = theta_of(o.bvec.back());
            if (first)
            {
                o.theta = th;
                first = false;
            }
            double dth = th - t.target;
            o.F += lambda_ * dth * dth;
        }
        return o;
    }

    //! Gradient at the point whose value() produced `o`.
    VectorXd gradient(ObjVal const& o) const
    {
        VectorXd grad
            = 2.0 * (ops_.Ag.transpose() * ops_.w8.cwiseProduct(o.gvec));
        double const inv_a2 = 1.0 / (ops_.a * ops_.a);
        for (std::size_t k = 0; k < terms_.size(); ++k)
        {
            VectorXd const& b = o.bvec[k];
            double th = theta_of(b);
            double dth = th - terms_[k].target;
            VectorXd s(b.size());
            for (Eigen::Index i = 0; i < b.size(); ++i)
            {
                double v = b[i];
                s[i] = ops_.w[i] * (v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0));
            }
            grad.noalias() += (2.0 * lambda_ * dth * 1e6 * inv_a2)
                              * (terms_[k].A->transpose() * s);
        }
        return grad;
    }

  private:
    Operators const& ops_;
    std::vector<ActionTerm> terms_;
    double lambda_;
};

void project_ball(VectorXd& m, double radius)
{
    for (Eigen::Index v = 0; v < m.size() / 3; ++v)
    {
        double nx = m[3 * v], ny = m[3 * v + 1], nz = m[3 * v + 2];
        double nrm = std::sqrt(nx * nx + ny * ny + nz * nz);
        if (nrm > radius)
        {
            double s = radius / nrm;
            m[3 * v] *= s;
            m[3 * v + 1] *= s;
            m[3 * v + 2] *= s;
        }
    }
}

void normalize_rows(VectorXd& u)
{
    for (Eigen::Index v = 0; v < u.size() / 3; ++v)
    {
        double nx = u[3 * v], ny = u[3 * v + 1], nz = u[3 * v + 2];
        double nrm = std::sqrt(nx * nx + ny * ny + nz * nz);
        if (nrm > 0.0)
        {
            u[3 * v] /= nrm;
            u[3 * v + 1] /= nrm;
            u[3 * v + 2] /= nrm;
        }
        else
        {
            u[3 * v + 2] = 1.0;
        }
    }
}

double delta_e_of(MatrixXd const& Ab, VectorXd const& m, VectorXd const& w,
                  double J)
{
    VectorXd b = Ab * m;
    double den = 0.0;
    for (Eigen::Index i = 0; i < w.size(); ++i)
    {
        double bx = b[3 * i], by = b[3 * i + 1], bz = b[3 * i + 2];
        den += w[i] * (bx * bx + by * by + bz * bz);
    }
    if (J == 0.0)
        return 0.0;
    return den > 0.0 ? J / den : std::numeric_limits<double>::infinity();
}

std::vector<ActionTerm> topology_terms(Operators const& ops,
                                       OptimizeConfig const& cfg)
{
    std::vector<ActionTerm> terms;
    terms.push_back({&ops.Az, cfg.theta_target});
    if (cfg.adjust_delta > 0.0)
    {
        // Smaller gap raises the action.
        terms.push_back({&ops.Az_lo, cfg.theta_target + cfg.adjust_delta});
        terms.push_back({&ops.Az_hi, cfg.theta_target - cfg.adjust_delta});
    }
    return terms;
}

ActionReport final_report(MagnetAssembly const& reference,
                          OptimizeConfig const& cfg)
{
    FieldSystem sys;
    sys.magnets = apply_gap(reference, cfg.gap);
    FieldBox box = build_field_box(cfg.box_a, cfg.box_L, cfg.report_nx,
                                   cfg.report_ny, cfg.report_nz);
    return evaluate_metrics(sys, box);
}

}  // namespace

DesignGrid DesignGrid::block_with_corridor(double voxel, double Lx, double Ly,
                                           double Lz, double corridor)
{
    if (voxel <= 0.0 || Lx <= 0.0 || Ly <= 0.0 || Lz <= 0.0)
        throw ConfigError("design grid dimensions must be positive");
    DesignGrid grid;
    grid.voxel = voxel;
    int nx = static_cast<int>(std::lround(Lx / voxel));
    int ny = static_cast<int>(std::lround(Ly / voxel));
    int nz = static_cast<int>(std::lround(Lz / voxel));
    for (int ix = 0; ix < nx; ++ix)
        for (int iy = 0; iy < ny; ++iy)
            for (int iz = 0; iz < nz; ++iz)
            {
                double lox = -0.5 * Lx + ix * voxel;
                double loy = -0.5 * Ly + iy * voxel;
                double loz = -0.5 * Lz + iz * voxel;
                // Drop cells intersecting the open beam corridor.
                if (loy + voxel > -corridor && loy < corridor
                    && loz + voxel > -corridor && loz < corridor)
                    continue;
                Vec3 c(lox + 0.5 * voxel, loy + 0.5 * voxel,
                       loz + 0.5 * voxel);
                grid.centers.push_back(c);
                grid.half.push_back(c.z() > 0.0 ? HalfId::top
                                   : c.z() < 0.0 ? HalfId::bottom
                                                 : HalfId::fixed);
            }
    return grid;
}

RingLayout RingLayout::build(double r_inner, double r_outer, int rows,
                             int sectors, double length, double voxel)
{
    if (r_inner <= 0.0 || r_outer <= r_inner || rows < 1 || sectors < 1
        || length <= 0.0 || voxel <= 0.0)
        throw ConfigError("ring layout parameters out of range");
    RingLayout layout;
    layout.r_inner = r_inner;
    layout.r_outer = r_outer;
    layout.length = length;
    layout.voxel = voxel;
    layout.rows = rows;
    layout.sectors = sectors;
    double const row_len = length / rows;
    double const sector_deg = 360.0 / sectors;
    int const nt = static_cast<int>(std::ceil(r_outer / voxel)) + 1;
    for (int iy = -nt; iy < nt; ++iy)
        for (int iz = -nt; iz < nt; ++iz)
        {
            double y = (iy + 0.5) * voxel;
            double z = (iz + 0.5) * voxel;
            double r = std::hypot(y, z);
            if (r < r_inner || r > r_outer)
                continue;
            double psi_deg = ring_angle(y, z) * 180.0 / constants::pi;
            int s = static_cast<int>(
                std::floor((psi_deg + 0.5 * sector_deg) / sector_deg));
            s = ((s % sectors) + sectors) % sectors;
            for (int row = 0; row < rows; ++row)
            {
                VoxelMagnet v;
                v.center = Vec3(-0.5 * length + (row + 0.5) * row_len, y, z);
                v.half_extent = Vec3(0.5 * row_len, 0.5 * voxel, 0.5 * voxel);
                v.half_id = z > 0.0 ? HalfId::top
                            : z < 0.0 ? HalfId::bottom
                                      : HalfId::fixed;
                layout.columns.push_back(v);
                layout.segment.push_back(row * sectors + s);
            }
        }
    return layout;
}

double RingLayout::sector_angle(int seg) const
{
    return (seg % sectors) * (2.0 * constants::pi / sectors);
}

std::vector<Vec3> RingLayout::two_pole_init() const
{
    std::vector<Vec3> dirs(static_cast<std::size_t>(n_segments()));
    for (int s = 0; s < n_segments(); ++s)
    {
        double chi = 2.0 * sector_angle(s);
        dirs[static_cast<std::size_t>(s)] = Vec3(0.0, std::sin(chi),
                                                 std::cos(chi));
    }
    return dirs;
}

MagnetAssembly RingLayout::assembly(std::vector<Vec3> const& segment_dirs,
                                    double remanence) const
{
    if (static_cast<int>(segment_dirs.size()) != n_segments())
        throw ConfigError("segment direction count does not match layout");
    MagnetAssembly out;
    out.voxels = columns;
    for (std::size_t i = 0; i < columns.size(); ++i)
    {
        Vec3 d = segment_dirs[static_cast<std::size_t>(segment[i])];
        double nrm = d.norm();
        if (nrm <= 0.0)
            throw ConfigError("segment direction must be nonzero");
        out.voxels[i].magnetization = remanence * d / nrm;
    }
    return out;
}

DesignResult optimize_topology(OptimizeConfig const& cfg,
                               DesignGrid const& grid)
{
    std::size_t const M = grid.centers.size();
    if (M == 0)
        throw ConfigError("design grid is empty");
    if (cfg.remanence <= 0.0)
        throw ConfigError("remanence must be positive");
    double const Br = cfg.remanence;

    std::vector<VoxelMagnet> voxels(M);
    std::vector<int> group(M);
    for (std::size_t v = 0; v < M; ++v)
    {
        voxels[v].center = grid.centers[v];
        voxels[v].half_extent = Vec3::Constant(0.5 * grid.voxel);
        voxels[v].half_id = grid.half[v];
        group[v] = static_cast<int>(v);
    }

    FieldBox box
        = build_field_box(cfg.box_a, cfg.box_L, cfg.box_nx, cfg.box_ny,
                          cfg.box_nz);
    bool const multi_gap = cfg.adjust_delta > 0.0;
    Operators ops = assemble_operators(voxels, group, static_cast<int>(M),
                                       box, cfg.gap, multi_gap, cfg.gap_lo,
                                       cfg.gap_hi);
    Objective obj(ops, topology_terms(ops, cfg), 0.0);

    // Continuous phase: ball-projected descent from a weak +z fill.
    VectorXd m(3 * static_cast<Eigen::Index>(M));
    for (std::size_t v = 0; v < M; ++v)
    {
        m[3 * static_cast<Eigen::Index>(v)] = 0.0;
        m[3 * static_cast<Eigen::Index>(v) + 1] = 0.0;
        m[3 * static_cast<Eigen::Index>(v) + 2] = 0.1 * Br;
    }
    ObjVal o0 = obj.value(m);
    VectorXd g0 = obj.gradient(o0);
    double P0 = obj.penalty_at(m);
    double lambda = cfg.theta_weight > 0.0
                        ? cfg.theta_weight
                        : o0.J / std::max(P0, 1e-12);
    obj.set_lambda(lambda);

    double const sqrtM = std::sqrt(static_cast<double>(M));
    double t = 1e-4 * Br / std::max(g0.norm(), 1e-300) * sqrtM;
    ObjVal cur = obj.value(m);
    VectorXd g = obj.gradient(cur);
    bool converged = true;
    for (int it = 0; it < cfg.max_iters; ++it)
    {
        t *= 2.0;
        VectorXd m2;
        ObjVal o2;
        while (true)
        {
            m2 = m - t * g;
            project_ball(m2, Br);
            o2 = obj.value(m2);
            if (o2.F <= cur.F || t < 1e-20)
                break;
            t *= 0.5;
        }
        if (o2.F > cur.F)
            converged = false;
        double step = (m2 - m).norm();
        m.swap(m2);
        cur = std::move(o2);
        g = obj.gradient(cur);
        if (step / std::max(t, 1e-300) < 1e-9 * Br * sqrtM)
            break;
    }

    // Binarize: keep cells at or above half the maximum magnitude.
    std::vector<double> norms(M);
    double nmax = 0.0;
    for (std::size_t v = 0; v < M; ++v)
    {
        norms[v] = m.segment(3 * static_cast<Eigen::Index>(v), 3).norm();
        nmax = std::max(nmax, norms[v]);
    }
    if (nmax < 1e-6 * Br)
        throw NumericalError(
            "binarization emptied the design: all magnetization magnitudes "
            "vanished");
    std::vector<int> support;
    for (std::size_t v = 0; v < M; ++v)
        if (norms[v] >= 0.5 * nmax)
            support.push_back(static_cast<int>(v));
    std::size_t const K = support.size();

    Operators sub;
    sub.w = ops.w;
    sub.w8 = ops.w8;
    sub.a = ops.a;
    sub.n = ops.n;
    sub.groups = static_cast<int>(K);
    sub.Az.resize(ops.Az.rows(), 3 * static_cast<Eigen::Index>(K));
    sub.Ag.resize(ops.Ag.rows(), 3 * static_cast<Eigen::Index>(K));
    if (multi_gap)
    {
        sub.Az_lo.resize(ops.Az.rows(), 3 * static_cast<Eigen::Index>(K));
        sub.Az_hi.resize(ops.Az.rows(), 3 * static_cast<Eigen::Index>(K));
    }
    for (std::size_t k = 0; k < K; ++k)
    {
        Eigen::Index src = 3 * static_cast<Eigen::Index>(support[k]);
        Eigen::Index dst = 3 * static_cast<Eigen::Index>(k);
        sub.Az.middleCols(dst, 3) = ops.Az.middleCols(src, 3);
        sub.Ag.middleCols(dst, 3) = ops.Ag.middleCols(src, 3);
        if (multi_gap)
        {
            sub.Az_lo.middleCols(dst, 3) = ops.Az_lo.middleCols(src, 3);
            sub.Az_hi.middleCols(dst, 3) = ops.Az_hi.middleCols(src, 3);
        }
    }
    ops.Az.resize(0, 0);
    ops.Ag.resize(0, 0);
    ops.Az_lo.resize(0, 0);
    ops.Az_hi.resize(0, 0);

    std::vector<VoxelMagnet> kept(K);
    std::vector<int> kept_group(K);
    VectorXd u(3 * static_cast<Eigen::Index>(K));
    for (std::size_t k = 0; k < K; ++k)
    {
        kept[k] = voxels[static_cast<std::size_t>(support[k])];
        kept_group[k] = static_cast<int>(k);
        u.segment(3 * static_cast<Eigen::Index>(k), 3)
            = m.segment(3 * static_cast<Eigen::Index>(support[k]), 3)
              / norms[static_cast<std::size_t>(support[k])];
    }

    MatrixXd Ab = assemble_b_operator(kept, kept_group, static_cast<int>(K),
                                      box, cfg.gap);

    // Direction-only polish on the sphere |m| = Br.
    Objective pol(sub, topology_terms(sub, cfg), 0.0);
    ObjVal p0 = pol.value(Br * u);
    double P0b = pol.penalty_at(Br * u);
    double lambda_polish = cfg.theta_weight > 0.0
                               ? cfg.theta_weight
                               : p0.J / std::max(P0b, 1e-4);
    pol.set_lambda(lambda_polish);

    DesignResult result;
    ObjVal pcur = pol.value(Br * u);
    VectorXd pg = pol.gradient(pcur) * Br;
    auto tangential = [&](VectorXd const& grad, VectorXd const& unit) {
        VectorXd gt = grad;
        for (Eigen::Index v = 0; v < unit.size() / 3; ++v)
        {
            auto uv = unit.segment(3 * v, 3);
            auto gv = gt.segment(3 * v, 3);
            gv -= uv.dot(gv) * uv;
        }
        return gt;
    };
    VectorXd gt = tangential(pg, u);
    double tp = 1e-2;
    for (int it = 0; it < cfg.polish_iters; ++it)
    {
        tp *= 2.0;
        VectorXd u2;
        ObjVal o2;
        while (true)
        {
            u2 = u - tp * gt;
            normalize_rows(u2);
            o2 = pol.value(Br * u2);
            if (o2.F <= pcur.F || tp < 1e-24)
                break;
            tp *= 0.5;
        }
        if (o2.F > pcur.F)
            converged = false;
        double du = (u2 - u).norm();
        u.swap(u2);
        pcur = std::move(o2);
        pg = pol.gradient(pcur) * Br;
        gt = tangential(pg, u);
        HistoryRow row;
        row.iter = it;
        row.F = pcur.F;
        row.theta_mT_mm = pcur.theta;
        row.delta_e = delta_e_of(Ab, Br * u, sub.w, pcur.J);
        result.history.push_back(row);
        if (du < 1e-12)
            break;
    }

    MagnetAssembly assembly;
    assembly.voxels = kept;
    for (std::size_t k = 0; k < K; ++k)
        assembly.voxels[k].magnetization
            = Br * Vec3(u.segment(3 * static_cast<Eigen::Index>(k), 3));
    assembly.validate();

    result.assembly = assembly;
    result.report = final_report(assembly, cfg);
    result.converged = converged;
    result.lambda = lambda;
    result.lambda_polish = lambda_polish;
    return result;
}

DesignResult optimize_directions(OptimizeConfig const& cfg,
                                 RingLayout const& layout)
{
    if (layout.columns.empty())
        throw ConfigError("ring layout is empty");
    if (cfg.remanence <= 0.0)
        throw ConfigError("remanence must be positive");
    double const Br = cfg.remanence;
    int const G = layout.n_segments();

    FieldBox box
        = build_field_box(cfg.box_a, cfg.box_L, cfg.box_nx, cfg.box_ny,
                          cfg.box_nz);
    Operators ops = assemble_operators(layout.columns, layout.segment, G, box,
                                       cfg.gap, false, 0.0, 0.0);
    MatrixXd Ab = assemble_b_operator(layout.columns, layout.segment, G, box,
                                      cfg.gap);
    std::vector<ActionTerm> terms{{&ops.Az, cfg.theta_target}};
    Objective obj(ops, terms, 0.0);

    std::vector<Vec3> dirs = layout.two_pole_init();
    // Spherical angles (polar from +x, azimuth in the y-z sense of
    // atan2(dy, dx) is unused; we parametrize from the z axis).
    std::vector<double> th(static_cast<std::size_t>(G)),
        ph(static_cast<std::size_t>(G));
    auto to_angles = [&]() {
        for (int s = 0; s < G; ++s)
        {
            Vec3 const& d = dirs[static_cast<std::size_t>(s)];
            th[static_cast<std::size_t>(s)]
                = std::acos(std::clamp(d.z(), -1.0, 1.0));
            ph[static_cast<std::size_t>(s)] = std::atan2(d.y(), d.x());
        }
    };
    auto from_angles = [&](std::vector<double> const& tt,
                           std::vector<double> const& pp) {
        std::vector<Vec3> out(static_cast<std::size_t>(G));
        for (int s = 0; s < G; ++s)
        {
            double st = std::sin(tt[static_cast<std::size_t>(s)]);
            double ct = std::cos(tt[static_cast<std::size_t>(s)]);
            double sp = std::sin(pp[static_cast<std::size_t>(s)]);
            double cp = std::cos(pp[static_cast<std::size_t>(s)]);
            out[static_cast<std::size_t>(s)] = Vec3(st * cp, st * sp, ct);
        }
        return out;
    };
    auto pack = [&](std::vector<Vec3> const& dd) {
        VectorXd m(3 * static_cast<Eigen::Index>(G));
        for (int s = 0; s < G; ++s)
            m.segment(3 * static_cast<Eigen::Index>(s), 3)
                = Br * dd[static_cast<std::size_t>(s)];
        return m;
    };
    to_angles();

    ObjVal o0 = obj.value(pack(dirs));
    double P0 = obj.penalty_at(pack(dirs));
    double lambda = cfg.theta_weight > 0.0
                        ? cfg.theta_weight
                        : 100.0 * o0.J / std::max(P0, 1e-12);
    obj.set_lambda(lambda);

    DesignResult result;
    ObjVal cur = obj.value(pack(dirs));
    auto angle_grad = [&](ObjVal const& o) {
        VectorXd gm = obj.gradient(o) * Br;
        std::vector<double> gth(static_cast<std::size_t>(G)),
            gph(static_cast<std::size_t>(G));
        for (int s = 0; s < G; ++s)
        {
            double tt = th[static_cast<std::size_t>(s)];
            double pp = ph[static_cast<std::size_t>(s)];
            Vec3 gs(gm[3 * s], gm[3 * s + 1], gm[3 * s + 2]);
            Vec3 dth(std::cos(tt) * std::cos(pp), std::cos(tt) * std::sin(pp),
                     -std::sin(tt));
            Vec3 dph(-std::sin(tt) * std::sin(pp),
                     std::sin(tt) * std::cos(pp), 0.0);
            gth[static_cast<std::size_t>(s)] = gs.dot(dth);
            gph[static_cast<std::size_t>(s)] = gs.dot(dph);
        }
        return std::make_pair(gth, gph);
    };
    auto [gth, gph] = angle_grad(cur);
    double t = 1e-3;
    bool converged = true;
    for (int it = 0; it < cfg.max_iters; ++it)
    {
        t *= 2.0;
        std::vector<double> th2, ph2;
        std::vector<Vec3> dirs2;
        ObjVal o2;
        while (true)
        {
            th2 = th;
            ph2 = ph;
            for (int s = 0; s < G; ++s)
            {
                th2[static_cast<std::size_t>(s)]
                    -= t * gth[static_cast<std::size_t>(s)];
                ph2[static_cast<std::size_t>(s)]
                    -= t * gph[static_cast<std::size_t>(s)];
            }
            dirs2 = from_angles(th2, ph2);
            o2 = obj.value(pack(dirs2));
            if (o2.F <= cur.F || t < 1e-24)
                break;
            t *= 0.5;
        }
        if (o2.F > cur.F)
            converged = false;
        double move = 0.0;
        for (int s = 0; s < G; ++s)
            move = std::max(
                move, std::hypot(th2[static_cast<std::size_t>(s)]
                                     - th[static_cast<std::size_t>(s)],
                                 ph2[static_cast<std::size_t>(s)]
                                     - ph[static_cast<std::size_t>(s)]));
        th.swap(th2);
        ph.swap(ph2);
        dirs.swap(dirs2);
        cur = std::move(o2);
        std::tie(gth, gph) = angle_grad(cur);
        HistoryRow row;
        row.iter = it;
        row.F = cur.F;
        row.theta_mT_mm = cur.theta;
        row.delta_e = delta_e_of(Ab, pack(dirs), ops.w, cur.J);
        result.history.push_back(row);
        if (move < 1e-12)
            break;
    }

    MagnetAssembly assembly = layout.assembly(dirs, Br);
    assembly.validate();
    result.assembly = assembly;
    result.report = final_report(assembly, cfg);
    result.converged = converged;
    result.lambda = lambda;
    result.segment_dirs = dirs;
    return result;
}

double calibrate_remanence(double current_remanence, double theta_measured,
                           double theta_target)
{
    if (current_remanence <= 0.0)
        throw ConfigError("remanence must be positive");
    if (theta_measured <= 0.0)
        throw NumericalError(
            "cannot calibrate remanence from a non-positive action");
    return current_remanence * theta_target / theta_measured;
}

namespace
{

double theta_at_gap(MagnetAssembly const& reference, double gap,
                    FieldBox const& box)
{
    FieldSystem sys;
    sys.magnets = apply_gap(reference, gap);
    std::vector<Vec3> B = sys.fields(box.nodes);
    double s = 0.0;
    for (std::size_t i = 0; i < B.size(); ++i)
        s += box.weights[i] * std::fabs(B[i].z());
    return s / (box.a * box.a) * 1e6;
}

}  // namespace

double calibrate_gap(MagnetAssembly const& reference, double theta_target,
                     double gap_lo, double gap_hi, FieldBox const& box,
                     double tol_theta)
{
    if (!(gap_hi > gap_lo) || gap_lo < 0.0)
        throw ConfigError("gap range must satisfy 0 <= lo < hi");
    if (tol_theta <= 0.0)
        throw ConfigError("action tolerance must be positive");

    // Probe for strict monotonicity before bisecting.
    constexpr int n_probe = 5;
    double th_probe[n_probe];
    for (int i = 0; i < n_probe; ++i)
    {
        double g = gap_lo + (gap_hi - gap_lo) * i / (n_probe - 1);
        th_probe[i] = theta_at_gap(reference, g, box);
    }
    double sign0 = th_probe[1] - th_probe[0];
    for (int i = 1; i + 1 < n_probe; ++i)
        if ((th_probe[i + 1] - th_probe[i]) * sign0 <= 0.0)
            throw NumericalError(
                "action is not strictly monotone across the gap range");
    double th_min = std::min(th_probe[0], th_probe[n_probe - 1]);
    double th_max = std::max(th_probe[0], th_probe[n_probe - 1]);
    if (theta_target < th_min - tol_theta || theta_target > th_max + tol_theta)
    {
        std::ostringstream os;
        os << "action target " << theta_target
           << " mT*mm is outside the attainable range [" << th_min << ", "
           << th_max << "]";
        throw NumericalError(os.str());
    }

    double lo = gap_lo, hi = gap_hi;
    double th_lo = th_probe[0];
    if (std::fabs(th_lo - theta_target) <= tol_theta)
        return lo;
    if (std::fabs(th_probe[n_probe - 1] - theta_target) <= tol_theta)
        return hi;
    for (int it = 0; it < 200; ++it)
    {
        double mid = 0.5 * (lo + hi);
        double th_mid = theta_at_gap(reference, mid, box);
        if (std::fabs(th_mid - theta_target) <= tol_theta)
            return mid;
        // Keep the half whose lower end still brackets the target.
        if ((th_mid - theta_target) * (th_lo - theta_target) > 0.0)
        {
            lo = mid;
            th_lo = th_mid;
        }
        else
        {
            hi = mid;
        }
        if (hi - lo < 1e-15)
            break;
    }
    throw NumericalError("gap bisection did not reach the action tolerance");
}

LinearFit fit_linear(std::vector<double> const& x, std::vector<double> const& y)
{
    if (x.size() != y.size() || x.size() < 2)
        throw ConfigError("linear fit needs at least two points");
    std::size_t const n = x.size();
    double sx = 0, sy = 0;
    for (std::size_t i = 0; i < n; ++i)
    {
        sx += x[i];
        sy += y[i];
    }
    double mx = sx / n, my = sy / n;
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i)
    {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (sxx == 0.0)
        throw ConfigError("linear fit abscissae are all identical");
    LinearFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    double ss_res = 0, ss_tot = 0;
    for (std::size_t i = 0; i < n; ++i)
    {
        double r = y[i] - (fit.intercept + fit.slope * x[i]);
        ss_res += r * r;
        ss_tot += (y[i] - my) * (y[i] - my);
    }
    fit.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot
                                 : (ss_res == 0.0 ? 1.0 : 0.0);
    return fit;
}

QuadraticFit fit_quadratic(std::vector<double> const& x,
                           std::vector<double> const& y)
{
    if (x.size() != y.size() || x.size() < 3)
        throw ConfigError("quadratic fit needs at least three points");
    Eigen::Index const n = static_cast<Eigen::Index>(x.size());
    MatrixXd V(n, 3);
    VectorXd rhs(n);
    for (Eigen::Index i = 0; i < n; ++i)
    {
        V(i, 0) = 1.0;
        V(i, 1) = x[static_cast<std::size_t>(i)];
        V(i, 2) = x[static_cast<std::size_t>(i)] * x[static_cast<std::size_t>(i)];
        rhs[i] = y[static_cast<std::size_t>(i)];
    }
    VectorXd c = V.colPivHouseholderQr().solve(rhs);
    QuadraticFit fit;
    fit.c0 = c[0];
    fit.c1 = c[1];
    fit.c2 = c[2];
    return fit;
}

namespace
{

void finish_scan(ScanResult& scan)
{
    std::vector<double> xs, ths, czs;
    for (auto const& row : scan.rows)
    {
        xs.push_back(row.value);
        ths.push_back(row.report.theta_mT_mm);
        czs.push_back(row.report.center_Bz_mT);
    }
    if (xs.size() >= 2)
        scan.theta_fit = fit_linear(xs, ths);
    if (xs.size() >= 3)
        scan.center_fit = fit_quadratic(xs, czs);
}

}  // namespace

ScanResult scan_gap(MagnetAssembly const& reference,
                    std::vector<double> const& gaps, FieldBox const& box)
{
    if (gaps.empty())
        throw ConfigError("gap scan needs at least one value");
    ScanResult scan;
    scan.variable = "gap";
    for (double g : gaps)
    {
        FieldSystem sys;
        sys.magnets = apply_gap(reference, g);
        scan.rows.push_back({g, evaluate_metrics(sys, box)});
    }
    finish_scan(scan);
    return scan;
}

ScanResult scan_remanence(MagnetAssembly const& reference, double gap,
                          double current_remanence,
                          std::vector<double> const& values,
                          FieldBox const& box)
{
    if (values.empty())
        throw ConfigError("remanence scan needs at least one value");
    if (current_remanence <= 0.0)
        throw ConfigError("reference remanence must be positive");
    ScanResult scan;
    scan.variable = "remanence";
    MagnetAssembly gapped = apply_gap(reference, gap);
    for (double v : values)
    {
        FieldSystem sys;
        sys.magnets = gapped;
        double s = v / current_remanence;
        for (auto& vox : sys.magnets.voxels)
            vox.magnetization *= s;
        scan.rows.push_back({v, evaluate_metrics(sys, box)});
    }
    finish_scan(scan);
    return scan;
}

namespace detail
{
namespace
{

Objective make_objective(std::vector<VoxelMagnet> const& voxels,
                         std::vector<int> const& group, int n_groups,
                         OptimizeConfig const& cfg, double lambda,
                         Operators& ops)
{
    FieldBox box = build_field_box(cfg.box_a, cfg.box_L, cfg.box_nx,
                                   cfg.box_ny, cfg.box_nz);
    bool const multi_gap = cfg.adjust_delta > 0.0;
    ops = assemble_operators(voxels, group, n_groups, box, cfg.gap,
                             multi_gap, cfg.gap_lo, cfg.gap_hi);
    return Objective(ops, topology_terms(ops, cfg), lambda);
}

}  // namespace

double objective_value(std::vector<VoxelMagnet> const& voxels,
                       std::vector<int> const& group, int n_groups,
                       OptimizeConfig const& cfg, double lambda,
                       Eigen::VectorXd const& m)
{
    Operators ops;
    Objective obj = make_objective(voxels, group, n_groups, cfg, lambda, ops);
    return obj.value(m).F;
}

Eigen::VectorXd objective_gradient(std::vector<VoxelMagnet> const& voxels,
                                   std::vector<int> const& group,
                                   int n_groups, OptimizeConfig const& cfg,
                                   double lambda, Eigen::VectorXd const& m)
{
    Operators ops;
    Objective obj = make_objective(voxels, group, n_groups, cfg, lambda, ops);
    return obj.gradient(obj.value(m));
}

}  // namespace detail

ScanResult scan_current(FieldSystem const& system, double current_reference,
                        std::vector<double> const& values, FieldBox const& box)
{
    if (values.empty())
        throw ConfigError("current scan needs at least one value");
    if (current_reference == 0.0)
        throw ConfigError("reference current must be nonzero");
    ScanResult scan;
    scan.variable = "current";
    for (double v : values)
    {
        FieldSystem sys = system;
        double s = v / current_reference;
        for (auto& loop : sys.coils)
            loop.current *= s;
        scan.rows.push_back({v, evaluate_metrics(sys, box)});
    }
    finish_scan(scan);
    return scan;
}

}  // namespace maglarmor
