#include "wavebc/wave_forward.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>

#include "wavebc/trace_spaces.hpp"

namespace wavebc {

namespace {

constexpr double kTimeTol = 1e-9;

// --- solver grid descriptors -----------------------------------------------------

struct Grid1d {
    double h = 0.0;
    int n_nodes = 0;  // x_i = i*h, i = 0..n_nodes-1
};

struct GridDisc {
    double r_in = 0.0, dr = 0.0, dth = 0.0, rho = 0.0;
    int n_r = 0;   // radial nodes, r_l = r_in + l*dr, l = 0..n_r-1
    int n_th = 0;  // periodic angular nodes
    int node(int l, int m) const { return l * n_th + m; }
};

Grid1d grid_1d(const DomainSpec& d) {
    Grid1d g;
    g.h = d.interval.h;
    g.n_nodes = static_cast<int>(std::lround(d.interval.L_solver / d.interval.h)) + 1;
    return g;
}

GridDisc grid_disc(const DomainSpec& d) {
    GridDisc g;
    g.rho = d.disc.rho;
    g.r_in = d.disc.rho - d.disc.inner_wall_depth;
    g.n_r = d.disc.n_radial + 1;
    g.n_th = d.disc.n_angular;
    g.dr = d.disc.inner_wall_depth / d.disc.n_radial;
    g.dth = 2.0 * 3.14159265358979323846 / g.n_th;
    return g;
}

// Solver step for the disc: capped by the rigorous 5-point stability bound and
// rounded so that an even number of steps spans one control step.  Control
// samples then land on solver instants and grid-aligned delays replay exactly.
double disc_step(const GridDisc& g, double dt_control, double cfl) {
    const double a = g.dr, b = g.r_in * g.dth;
    const double limit = 1.0 / std::sqrt(1.0 / (a * a) + 1.0 / (b * b));
    const double raw = cfl * std::min({a, b, limit});
    const int m = 2 * static_cast<int>(std::ceil(dt_control / (2.0 * raw) - kTimeTol));
    return dt_control / std::max(2, m);
}

// --- boundary flux reconstruction ------------------------------------------------

// Linear interpolation of the cell-centered control samples with virtual zeros
// outside [0, n_tau); this is exactly the temporal hat reconstruction.
double interp_time_samples(const Eigen::MatrixXd& values, double dt, int col, double t) {
    const double a = t / dt - 0.5;
    const int k0 = static_cast<int>(std::floor(a));
    const double w = a - k0;
    const int n = static_cast<int>(values.rows());
    const double v0 = (k0 >= 0 && k0 < n) ? values(k0, col) : 0.0;
    const double v1 = (k0 + 1 >= 0 && k0 + 1 < n) ? values(k0 + 1, col) : 0.0;
    return (1.0 - w) * v0 + w * v1;
}

// Periodic linear interpolation between control sites at a solver angle.
double interp_angular(const Eigen::VectorXd& site_values, double theta) {
    const int ng = static_cast<int>(site_values.size());
    if (ng == 1) return site_values(0);
    const double dg = 2.0 * 3.14159265358979323846 / ng;
    double a = theta / dg;
    a -= std::floor(a / ng) * ng;
    const int i0 = static_cast<int>(std::floor(a)) % ng;
    const double w = a - std::floor(a);
    return (1.0 - w) * site_values(i0) + w * site_values((i0 + 1) % ng);
}

using FluxFn = std::function<void(double t, Eigen::VectorXd& flux)>;

FluxFn flux_from_field(const DomainSpec& domain, const BoundaryTimeField& f) {
    if (domain.kind == DomainKind::interval) {
        return [f](double t, Eigen::VectorXd& flux) {
            flux(0) = interp_time_samples(f.values, f.dt_control, 0, t);
        };
    }
    const GridDisc g = grid_disc(domain);
    return [f, g](double t, Eigen::VectorXd& flux) {
        Eigen::VectorXd site(f.n_gamma());
        for (int j = 0; j < f.n_gamma(); ++j)
            site(j) = interp_time_samples(f.values, f.dt_control, j, t);
        for (int m = 0; m < g.n_th; ++m) flux(m) = interp_angular(site, m * g.dth);
    };
}

// --- potential / nonlocal term ---------------------------------------------------

struct SourceTerm {
    const Eigen::VectorXd* q = nullptr;
    const NonlocalStencil* stencil = nullptr;
    const DomainSpec* domain = nullptr;

    void apply(const Eigen::VectorXd& u, Eigen::VectorXd& out) const {
        if (stencil) {
            out = u;
            for (int r = 0; r < stencil->rounds; ++r) smooth_once(out);
            out *= stencil->amplitude;
        } else {
            out = q->cwiseProduct(u);
        }
    }

    void smooth_once(Eigen::VectorXd& u) const {
        if (domain->kind == DomainKind::interval) {
            const int n = static_cast<int>(u.size());
            Eigen::VectorXd s(n);
            for (int i = 0; i < n; ++i) {
                const double l = u(i > 0 ? i - 1 : 1);
                const double r = u(i < n - 1 ? i + 1 : n - 2);
                s(i) = 0.25 * (l + 2.0 * u(i) + r);
            }
            u = s;
        } else {
            const GridDisc g = grid_disc(*domain);
            Eigen::VectorXd s(u.size());
            for (int l = 0; l < g.n_r; ++l) {
                const int lm = (l > 0) ? l - 1 : 1;
                const int lp = (l < g.n_r - 1) ? l + 1 : g.n_r - 2;
                for (int m = 0; m < g.n_th; ++m)
                    s(g.node(l, m)) = 0.25 * (u(g.node(lm, m)) + 2.0 * u(g.node(l, m)) +
                                              u(g.node(lp, m)));
            }
            Eigen::VectorXd s2(u.size());
            for (int l = 0; l < g.n_r; ++l)
                for (int m = 0; m < g.n_th; ++m) {
                    const int mm = (m + g.n_th - 1) % g.n_th, mp = (m + 1) % g.n_th;
                    s2(g.node(l, m)) = 0.25 * (s(g.node(l, mm)) + 2.0 * s(g.node(l, m)) +
                                               s(g.node(l, mp)));
                }
            u = s2;
        }
    }
};

// --- leapfrog engine --------------------------------------------------------------

struct RunRequest {
    double t_start = 0.0;
    double t_end = 0.0;
    FluxFn flux;                          // per solver boundary site
    const Eigen::VectorXd* init_velocity = nullptr;
    std::vector<double> snapshot_times;   // sorted ascending
    bool collect_trace = false;
    bool collect_full = false;
};

struct RunResult {
    std::vector<double> times;
    Eigen::MatrixXd trace;                 // n_t x n_boundary_sites
    std::vector<Eigen::VectorXd> snapshots;
    Eigen::MatrixXd full;                  // n_t x n_nodes
    double dt = 0.0;
    double cfl_ratio = 0.0;
};

// Discrete Laplacian with Neumann ghost values; flux enters at the controlled
// boundary, the far wall is a homogeneous-Neumann artifact.
void laplacian_1d(const Grid1d& g, const Eigen::VectorXd& u, const Eigen::VectorXd& flux,
                  Eigen::VectorXd& lap) {
    const double h2 = g.h * g.h;
    const int n = g.n_nodes;
    lap(0) = (2.0 * u(1) - 2.0 * u(0) + 2.0 * g.h * flux(0)) / h2;
    for (int i = 1; i < n - 1; ++i) lap(i) = (u(i + 1) - 2.0 * u(i) + u(i - 1)) / h2;
    lap(n - 1) = (2.0 * u(n - 2) - 2.0 * u(n - 1)) / h2;
}

void laplacian_disc(const GridDisc& g, const Eigen::VectorXd& u, const Eigen::VectorXd& flux,
                    Eigen::VectorXd& lap) {
    const double dr2 = g.dr * g.dr;
    for (int l = 0; l < g.n_r; ++l) {
        const double r = g.r_in + l * g.dr;
        const double inv_r_dth2 = 1.0 / (r * r * g.dth * g.dth);
        for (int m = 0; m < g.n_th; ++m) {
            const int mm = (m + g.n_th - 1) % g.n_th, mp = (m + 1) % g.n_th;
            const double u_c = u(g.node(l, m));
            double radial;
            if (l == 0) {
                radial = 2.0 * (u(g.node(1, m)) - u_c) / dr2;  // inner wall ghost
            } else if (l == g.n_r - 1) {
                radial = (2.0 * u(g.node(l - 1, m)) - 2.0 * u_c + 2.0 * g.dr * flux(m)) / dr2 +
                         flux(m) / g.rho;
            } else {
                radial = (u(g.node(l + 1, m)) - 2.0 * u_c + u(g.node(l - 1, m))) / dr2 +
                         (u(g.node(l + 1, m)) - u(g.node(l - 1, m))) / (2.0 * g.dr * r);
            }
            lap(g.node(l, m)) = radial + (u(g.node(l, mp)) - 2.0 * u_c + u(g.node(l, mm))) * inv_r_dth2;
        }
    }
}

RunResult run_leapfrog(const DomainSpec& domain, const SourceTerm& src, const RunRequest& req,
                       double dt) {
    const bool is_1d = (domain.kind == DomainKind::interval);
    Grid1d g1;
    GridDisc gd;
    int n_nodes, n_sites;
    double stability;
    if (is_1d) {
        g1 = grid_1d(domain);
        n_nodes = g1.n_nodes;
        n_sites = 1;
        stability = g1.h;
    } else {
        gd = grid_disc(domain);
        n_nodes = gd.n_r * gd.n_th;
        n_sites = gd.n_th;
        const double a = gd.dr, b = gd.r_in * gd.dth;
        stability = 1.0 / std::sqrt(1.0 / (a * a) + 1.0 / (b * b));
    }
    if (dt > stability * (1.0 + 1e-12))
        throw ConfigurationError("CFL violation: solver step exceeds the stability limit");

    const int n_steps = static_cast<int>(std::ceil((req.t_end - req.t_start) / dt - kTimeTol));
    RunResult res;
    res.dt = dt;
    res.cfl_ratio = dt / stability;
    res.times.resize(n_steps + 1);
    for (int m = 0; m <= n_steps; ++m) res.times[m] = req.t_start + m * dt;
    if (req.collect_trace) res.trace.setZero(n_steps + 1, n_sites);
    if (req.collect_full) res.full.setZero(n_steps + 1, n_nodes);

    Eigen::VectorXd u_prev = Eigen::VectorXd::Zero(n_nodes);
    Eigen::VectorXd u_cur(n_nodes), u_next(n_nodes);
    Eigen::VectorXd lap(n_nodes), pot(n_nodes), flux(n_sites);
    auto laplacian = [&](const Eigen::VectorXd& u, const Eigen::VectorXd& fl, Eigen::VectorXd& out) {
        if (is_1d)
            laplacian_1d(g1, u, fl, out);
        else
            laplacian_disc(gd, u, fl, out);
    };
    auto record_trace = [&](int m, const Eigen::VectorXd& u) {
        if (!req.collect_trace) return;
        if (is_1d)
            res.trace(m, 0) = u(0);
        else
            for (int s = 0; s < gd.n_th; ++s) res.trace(m, s) = u(gd.node(gd.n_r - 1, s));
    };

    // First step: Taylor expansion about t_start with zero displacement.
    req.flux(req.t_start, flux);
    laplacian(u_prev, flux, lap);
    u_cur = 0.5 * dt * dt * lap;
    if (req.init_velocity) {
        Eigen::VectorXd zero_flux = Eigen::VectorXd::Zero(n_sites);
        Eigen::VectorXd lap_v(n_nodes), pot_v(n_nodes);
        laplacian(*req.init_velocity, zero_flux, lap_v);
        src.apply(*req.init_velocity, pot_v);
        u_cur += dt * (*req.init_velocity) + (dt * dt * dt / 6.0) * (lap_v - pot_v);
    }

    if (n_steps < 1) throw ConfigurationError("run_leapfrog: empty time range");
    record_trace(0, u_prev);
    record_trace(1, u_cur);
    if (req.collect_full) {
        res.full.row(0) = u_prev.transpose();
        res.full.row(1) = u_cur.transpose();
    }

    std::size_t snap_idx = 0;
    auto take_snapshots = [&](int m_new, const Eigen::VectorXd& u_new, const Eigen::VectorXd& u_old) {
        while (snap_idx < req.snapshot_times.size() &&
               req.snapshot_times[snap_idx] <= res.times[m_new] + kTimeTol) {
            const double want = req.snapshot_times[snap_idx];
            // exact step hits are taken verbatim so that grid-aligned delay
            // relations replay bitwise
            if (std::abs(want - res.times[m_new]) <= kTimeTol) {
                res.snapshots.push_back(u_new);
            } else if (std::abs(want - res.times[m_new - 1]) <= kTimeTol) {
                res.snapshots.push_back(u_old);
            } else {
                const double a = (want - res.times[m_new - 1]) / dt;
                res.snapshots.push_back((1.0 - a) * u_old + a * u_new);
            }
            ++snap_idx;
        }
    };
    while (snap_idx < req.snapshot_times.size() &&
           req.snapshot_times[snap_idx] <= req.t_start + kTimeTol) {
        res.snapshots.push_back(u_prev);
        ++snap_idx;
    }
    take_snapshots(1, u_cur, u_prev);

    for (int m = 1; m < n_steps; ++m) {
        req.flux(res.times[m], flux);
        laplacian(u_cur, flux, lap);
        src.apply(u_cur, pot);
        u_next = 2.0 * u_cur - u_prev + dt * dt * (lap - pot);
        record_trace(m + 1, u_next);
        if (req.collect_full) res.full.row(m + 1) = u_next.transpose();
        u_prev.swap(u_cur);
        u_cur.swap(u_next);
        take_snapshots(m + 1, u_cur, u_prev);
    }
    return res;
}

double solver_step(const DomainSpec& domain, double dt_control) {
    if (domain.kind == DomainKind::interval) return domain.interval.h;  // unit Courant
    return disc_step(grid_disc(domain), dt_control, domain.disc.cfl);
}

// --- restrictions between solver grid and control/interior grids ------------------

double interp_series(const std::vector<double>& times, const Eigen::MatrixXd& series, int col,
                     double t) {
    const double a = (t - times.front()) / (times[1] - times[0]);
    int m = static_cast<int>(std::floor(a));
    m = std::clamp(m, 0, static_cast<int>(times.size()) - 2);
    const double w = a - m;
    return (1.0 - w) * series(m, col) + w * series(m + 1, col);
}

BoundaryTimeField restrict_trace(const DomainSpec& domain, const RunResult& run,
                                 const ControlGrid& out_grid) {
    BoundaryTimeField g = make_field(out_grid);
    std::vector<int> site_col(out_grid.n_gamma, 0);
    if (domain.kind == DomainKind::disc) {
        const GridDisc gd = grid_disc(domain);
        if (gd.n_th % out_grid.n_gamma != 0)
            throw ConfigurationError("solver angular resolution must be a multiple of the control sites");
        for (int j = 0; j < out_grid.n_gamma; ++j) site_col[j] = j * (gd.n_th / out_grid.n_gamma);
    }
    for (int k = 0; k < out_grid.n_tau; ++k)
        for (int j = 0; j < out_grid.n_gamma; ++j)
            g.values(k, j) = interp_series(run.times, run.trace, site_col[j], out_grid.t_sample(k));
    return g;
}

InteriorField restrict_snapshot(const InteriorGrid& grid, const Eigen::VectorXd& u) {
    InteriorField out = grid.make_interior_field();
    const DomainSpec& d = grid.domain;
    if (d.kind == DomainKind::interval) {
        const Grid1d g = grid_1d(d);
        for (int p = 0; p < grid.n_tau; ++p) {
            const double x = grid.tau_sample(p);
            const int i = std::clamp(static_cast<int>(std::floor(x / g.h)), 0, g.n_nodes - 2);
            const double w = x / g.h - i;
            out.values(grid.node(p, 0)) = (1.0 - w) * u(i) + w * u(i + 1);
        }
    } else {
        const GridDisc g = grid_disc(d);
        const int stride = g.n_th / grid.n_gamma;
        for (int p = 0; p < grid.n_tau; ++p) {
            const double r = d.disc.rho - grid.tau_sample(p);
            const int l = std::clamp(static_cast<int>(std::floor((r - g.r_in) / g.dr)), 0, g.n_r - 2);
            const double w = (r - g.r_in) / g.dr - l;
            for (int i = 0; i < grid.n_gamma; ++i) {
                const int m = i * stride;
                out.values(grid.node(p, i)) =
                    (1.0 - w) * u(g.node(l, m)) + w * u(g.node(l + 1, m));
            }
        }
    }
    return out;
}

// Interior field back onto the solver grid: linear in depth (clamped at the first
// node, tapered to zero between the deepest node and depth T), periodic linear
// between control sites in angle.
Eigen::VectorXd prolong_interior(const InteriorGrid& grid, const InteriorField& y) {
    const DomainSpec& d = grid.domain;
    const double dtau = grid.dtau();
    auto depth_profile = [&](double tau, const Eigen::VectorXd& column) -> double {
        if (tau >= grid.T) return 0.0;
        const double a = tau / dtau - 0.5;
        if (a <= 0.0) return column(0);
        const int p0 = static_cast<int>(std::floor(a));
        if (p0 >= grid.n_tau - 1) {
            const double tail = grid.T - grid.tau_sample(grid.n_tau - 1);
            return column(grid.n_tau - 1) * (grid.T - tau) / tail;
        }
        const double w = a - p0;
        return (1.0 - w) * column(p0) + w * column(p0 + 1);
    };
    if (d.kind == DomainKind::interval) {
        const Grid1d g = grid_1d(d);
        Eigen::VectorXd out = Eigen::VectorXd::Zero(g.n_nodes);
        Eigen::VectorXd col(grid.n_tau);
        for (int p = 0; p < grid.n_tau; ++p) col(p) = y.values(grid.node(p, 0));
        for (int i = 0; i < g.n_nodes; ++i) out(i) = depth_profile(i * g.h, col);
        return out;
    }
    const GridDisc g = grid_disc(d);
    Eigen::VectorXd out = Eigen::VectorXd::Zero(g.n_r * g.n_th);
    Eigen::MatrixXd cols(grid.n_tau, grid.n_gamma);
    for (int p = 0; p < grid.n_tau; ++p)
        for (int i = 0; i < grid.n_gamma; ++i) cols(p, i) = y.values(grid.node(p, i));
    for (int l = 0; l < g.n_r; ++l) {
        const double tau = d.disc.rho - (g.r_in + l * g.dr);
        Eigen::VectorXd site(grid.n_gamma);
        for (int i = 0; i < grid.n_gamma; ++i) site(i) = depth_profile(tau, cols.col(i));
        for (int m = 0; m < g.n_th; ++m) out(g.node(l, m)) = interp_angular(site, m * g.dth);
    }
    return out;
}

void check_margins(const DomainSpec& domain, double t_end, double t_start) {
    if (domain.kind == DomainKind::interval) {
        if (2.0 * domain.interval.L_solver + t_start < t_end + kTimeTol)
            throw ConfigurationError("causality margin violated: interval too short for t_end");
    } else {
        if (2.0 * domain.disc.inner_wall_depth + t_start < t_end + kTimeTol)
            throw ConfigurationError("causality margin violated: inner wall too shallow for t_end");
    }
}

ResponseData assemble_response_impl(const DomainSpec& domain, const SourceTerm& src,
                                    const ControlGrid& control) {
    const double T = control.horizon();
    domain.require_valid_horizon(T);
    const double dt_c = control.dt;
    check_margins(domain, 2.0 * T, -dt_c);
    const double dt = solver_step(domain, dt_c);
    const ControlGrid g2 = control.doubled();

    ResponseData R;
    R.T = T;
    R.control = control;
    R.kernel.assign(g2.n_tau, Eigen::MatrixXd::Zero(control.n_gamma, control.n_gamma));

    for (int site = 0; site < control.n_gamma; ++site) {
        BoundaryTimeField pulse = make_field(g2);
        pulse.values(0, site) = 1.0;
        RunRequest req;
        req.t_start = -dt_c;  // the first-sample hat extends half a cell before t = 0
        req.t_end = 2.0 * T;
        req.flux = flux_from_field(domain, pulse);
        req.collect_trace = true;
        const RunResult run = run_leapfrog(domain, src, req, dt);
        const BoundaryTimeField tr = restrict_trace(domain, run, g2);
        for (int s = 0; s < g2.n_tau; ++s)
            for (int j = 0; j < control.n_gamma; ++j) R.kernel[s](j, site) = tr.values(s, j);
    }
    R.check();
    return R;
}

}  // namespace

// --- potentials --------------------------------------------------------------------

int solver_node_count(const DomainSpec& domain) {
    if (domain.kind == DomainKind::interval) return grid_1d(domain).n_nodes;
    const GridDisc g = grid_disc(domain);
    return g.n_r * g.n_th;
}

double solver_node_depth(const DomainSpec& domain, int node) {
    if (domain.kind == DomainKind::interval) return node * domain.interval.h;
    const GridDisc g = grid_disc(domain);
    return domain.disc.rho - (g.r_in + (node / g.n_th) * g.dr);
}

PotentialField make_zero_potential(const DomainSpec& domain) {
    return PotentialField{Eigen::VectorXd::Zero(solver_node_count(domain))};
}

PotentialField make_constant_potential(const DomainSpec& domain, double c) {
    return PotentialField{Eigen::VectorXd::Constant(solver_node_count(domain), c)};
}

PotentialField make_gaussian_potential(const DomainSpec& domain, double amplitude,
                                       double center_depth, double width) {
    if (width <= 0.0) throw ArgumentError("make_gaussian_potential: width must be positive");
    PotentialField q = make_zero_potential(domain);
    for (int i = 0; i < q.values.size(); ++i) {
        const double d = solver_node_depth(domain, i) - center_depth;
        q.values(i) = amplitude * std::exp(-0.5 * d * d / (width * width));
    }
    return q;
}

PotentialField make_rough_potential(const DomainSpec& domain, double max_abs, int block_cells,
                                    std::uint64_t seed) {
    if (block_cells <= 0) throw ArgumentError("make_rough_potential: block_cells must be positive");
    PotentialField q = make_zero_potential(domain);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(-max_abs, max_abs);
    if (domain.kind == DomainKind::interval) {
        double v = dist(rng);
        for (int i = 0; i < q.values.size(); ++i) {
            if (i % block_cells == 0) v = dist(rng);
            q.values(i) = v;
        }
    } else {
        const GridDisc g = grid_disc(domain);
        double v = dist(rng);
        for (int l = 0; l < g.n_r; ++l) {
            if (l % block_cells == 0) v = dist(rng);
            for (int m = 0; m < g.n_th; ++m) q.values(g.node(l, m)) = v;
        }
    }
    return q;
}

void zero_beyond_depth(const DomainSpec& domain, PotentialField& q, double T) {
    for (int i = 0; i < q.values.size(); ++i)
        if (solver_node_depth(domain, i) > T) q.values(i) = 0.0;
}

InteriorField restrict_potential_to_grid(const InteriorGrid& grid, const PotentialField& q) {
    return restrict_snapshot(grid, q.values);
}

PotentialField potential_from_interior(const InteriorGrid& grid, const Eigen::VectorXd& values) {
    if (values.size() != grid.n_nodes())
        throw DimensionError("potential_from_interior: field does not match grid");
    InteriorField y{values, grid.cell_volume};
    return PotentialField{prolong_interior(grid, y)};
}

// --- response data -------------------------------------------------------------------

void ResponseData::check() const {
    if (static_cast<int>(kernel.size()) != 2 * control.n_tau)
        throw DimensionError("ResponseData: kernel slice count mismatch");
    for (const auto& slice : kernel)
        if (!slice.allFinite()) throw ConfigurationError("ResponseData: non-finite kernel");
}

Eigen::MatrixXd ResponseData::full_matrix() const {
    const ControlGrid g2 = doubled_grid();
    const int ng = control.n_gamma, nt = g2.n_tau;
    Eigen::MatrixXd R = Eigen::MatrixXd::Zero(g2.flat_size(), g2.flat_size());
    for (int k = 0; k < nt; ++k)
        for (int m = 0; m <= k; ++m)
            R.block(k * ng, m * ng, ng, ng) = kernel[k - m];
    return R;
}

Eigen::MatrixXd ResponseData::matrix_T() const {
    const int ng = control.n_gamma, nt = control.n_tau;
    Eigen::MatrixXd R = Eigen::MatrixXd::Zero(nt * ng, nt * ng);
    for (int k = 0; k < nt; ++k)
        for (int m = 0; m <= k; ++m)
            R.block(k * ng, m * ng, ng, ng) = kernel[k - m];
    return R;
}

BoundaryTimeField ResponseData::apply(const BoundaryTimeField& f) const {
    const ControlGrid g2 = doubled_grid();
    if (f.n_tau() != g2.n_tau || f.n_gamma() != g2.n_gamma)
        throw DimensionError("ResponseData::apply: field does not match the doubled grid");
    BoundaryTimeField out = make_field(g2);
    for (int k = 0; k < g2.n_tau; ++k)
        for (int m = 0; m <= k; ++m)
            out.values.row(k) += (kernel[k - m] * f.values.row(m).transpose()).transpose();
    return out;
}

// --- public operations ----------------------------------------------------------------

SpaceTimeField solve_ibvp(const DomainSpec& domain, const PotentialField& q,
                          const BoundaryTimeField& f, double t_end) {
    if (q.values.size() != solver_node_count(domain))
        throw DimensionError("solve_ibvp: potential does not match the solver grid");
    if (!q.values.allFinite()) throw ConfigurationError("solve_ibvp: non-finite potential");
    if (f.horizon < t_end - kTimeTol)
        throw ConfigurationError("solve_ibvp: control horizon shorter than t_end");
    check_margins(domain, t_end, 0.0);

    SourceTerm src{&q.values, nullptr, &domain};
    RunRequest req;
    req.t_start = 0.0;
    req.t_end = t_end;
    req.flux = flux_from_field(domain, f);
    req.collect_full = true;
    req.collect_trace = true;
    const RunResult run = run_leapfrog(domain, src, req, solver_step(domain, f.dt_control));

    SpaceTimeField out;
    out.times = run.times;
    out.values = run.full;
    out.dt_solver = run.dt;
    out.cfl_ratio = run.cfl_ratio;
    return out;
}

InteriorField control_operator_ref(const InteriorGrid& grid, const PotentialField& q,
                                   const BoundaryTimeField& f) {
    const DomainSpec& domain = grid.domain;
    if (q.values.size() != solver_node_count(domain))
        throw DimensionError("control_operator_ref: potential does not match the solver grid");
    check_margins(domain, grid.T, 0.0);
    SourceTerm src{&q.values, nullptr, &domain};
    RunRequest req;
    req.t_start = 0.0;
    req.t_end = grid.T;
    req.flux = flux_from_field(domain, f);
    req.snapshot_times = {grid.T};
    const RunResult run = run_leapfrog(domain, src, req, solver_step(domain, f.dt_control));
    return restrict_snapshot(grid, run.snapshots.at(0));
}

OperatorMatrix reference_control_matrix(const InteriorGrid& grid, const PotentialField& q) {
    const DomainSpec& domain = grid.domain;
    const ControlGrid control = grid.control_grid();
    const double dt_c = control.dt;
    check_margins(domain, grid.T, -dt_c);
    const double dt = solver_step(domain, dt_c);

    OperatorMatrix W;
    W.domain = SpaceTag::outer(control);
    W.codomain = SpaceTag::inner(grid.n_nodes());
    W.entries.setZero(grid.n_nodes(), control.flat_size());

    SourceTerm src{&q.values, nullptr, &domain};
    // Basis control (m, i) is the site-i hat delayed by m steps, so one solve per
    // site with snapshots at the delayed instants covers the whole basis.
    std::vector<double> snap_times(control.n_tau);
    for (int m = 0; m < control.n_tau; ++m) snap_times[m] = grid.T - (control.n_tau - 1 - m) * dt_c;
    for (int site = 0; site < control.n_gamma; ++site) {
        BoundaryTimeField pulse = make_field(control);
        pulse.values(0, site) = 1.0;
        RunRequest req;
        req.t_start = -dt_c;
        req.t_end = grid.T;
        req.flux = flux_from_field(domain, pulse);
        req.snapshot_times = snap_times;
        const RunResult run = run_leapfrog(domain, src, req, dt);
        for (int m = 0; m < control.n_tau; ++m) {
            // snapshot list is ordered by time: entry m is u(., T - (n-1-m)*dt_c),
            // i.e. the wave of the basis control delayed by n-1-m steps.
            const InteriorField y = restrict_snapshot(grid, run.snapshots.at(m));
            const int delay_steps = control.n_tau - 1 - m;
            W.entries.col(delay_steps * control.n_gamma + site) = y.values;
        }
    }
    return W;
}

ResponseData assemble_response(const DomainSpec& domain, const PotentialField& q,
                               const ControlGrid& control) {
    if (q.values.size() != solver_node_count(domain))
        throw DimensionError("assemble_response: potential does not match the solver grid");
    SourceTerm src{&q.values, nullptr, &domain};
    return assemble_response_impl(domain, src, control);
}

ResponseData assemble_response_nonlocal(const DomainSpec& domain, const NonlocalStencil& K,
                                        const ControlGrid& control) {
    if (K.rounds < 0) throw ArgumentError("assemble_response_nonlocal: negative rounds");
    SourceTerm src{nullptr, &K, &domain};
    ResponseData R = assemble_response_impl(domain, src, control);
    R.nonlocal_source = true;
    return R;
}

BoundaryTimeField solve_dual(const InteriorGrid& grid, const PotentialField& q,
                             const InteriorField& y) {
    const DomainSpec& domain = grid.domain;
    if (y.values.size() != grid.n_nodes())
        throw DimensionError("solve_dual: field does not match the interior grid");
    check_margins(domain, grid.T, 0.0);
    const ControlGrid control = grid.control_grid();
    const double dt = solver_step(domain, control.dt);

    // Reversed time: w(s) := v(T - s) satisfies the same equation with zero flux,
    // zero displacement and initial velocity -y.
    const Eigen::VectorXd v0 = -prolong_interior(grid, y);
    SourceTerm src{&q.values, nullptr, &domain};
    RunRequest req;
    req.t_start = 0.0;
    req.t_end = grid.T;
    const int n_sites = (domain.kind == DomainKind::disc) ? grid_disc(domain).n_th : 1;
    req.flux = [n_sites](double, Eigen::VectorXd& flux) { flux.setZero(); };
    req.init_velocity = &v0;
    req.collect_trace = true;
    const RunResult run = run_leapfrog(domain, src, req, dt);

    // The run is in reversed time: sample k of the trace is v(., T - t_k).
    // The sign makes the pairing <W f, y> = <f, O y> hold: integrating the
    // bilinear identity by parts gives <u(T), y> = -int f v for this Cauchy
    // orientation.
    BoundaryTimeField tr = time_reverse(restrict_trace(domain, run, control));
    tr.values = -tr.values;
    return tr;
}

void add_relative_noise(ResponseData& R, double level, std::uint64_t seed) {
    if (level <= 0.0) return;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    double base = 0.0;
    for (const auto& s : R.kernel) base += s.squaredNorm();
    base = std::sqrt(base);
    std::vector<Eigen::MatrixXd> noise(R.kernel.size());
    double nn = 0.0;
    for (auto& s : noise) {
        s.setZero(R.control.n_gamma, R.control.n_gamma);
        for (int j = 0; j < s.rows(); ++j)
            for (int i = 0; i < s.cols(); ++i) s(j, i) = gauss(rng);
        nn += s.squaredNorm();
    }
    nn = std::sqrt(nn);
    const double scale = level * base / nn;
    for (std::size_t s = 0; s < R.kernel.size(); ++s) R.kernel[s] += scale * noise[s];
    R.synthetic_noise_level = level;
}

}  // namespace wavebc
