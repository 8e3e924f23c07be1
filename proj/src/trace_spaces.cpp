#include "wavebc/trace_spaces.hpp"

#include <cmath>

namespace wavebc {

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kGridTol = 1e-9;
}  // namespace

BoundarySubset BoundarySubset::arc(int n_gamma, int first, int count) {
    if (count < 0 || count > n_gamma) throw ArgumentError("BoundarySubset::arc: bad count");
    BoundarySubset s;
    s.sites.setConstant(n_gamma, false);
    for (int c = 0; c < count; ++c) s.sites(((first + c) % n_gamma + n_gamma) % n_gamma) = true;
    return s;
}

BoundaryTimeField time_reverse(const BoundaryTimeField& f) {
    BoundaryTimeField out = f;
    const int n = f.n_tau();
    for (int k = 0; k < n; ++k) out.values.row(k) = f.values.row(n - 1 - k);
    return out;
}

BoundaryTimeField time_integrate(const BoundaryTimeField& f) {
    // Cumulative midpoint rule with a trailing half cell: exact on constants,
    // second order on smooth data.
    BoundaryTimeField out = f;
    const int n = f.n_tau();
    const double dt = f.dt_control;
    for (int j = 0; j < f.n_gamma(); ++j) {
        double acc = 0.0;
        for (int k = 0; k < n; ++k) {
            out.values(k, j) = dt * (acc + 0.5 * f.values(k, j));
            acc += f.values(k, j);
        }
    }
    return out;
}

BoundaryTimeField odd_extend(const BoundaryTimeField& f) {
    const int n = f.n_tau();
    BoundaryTimeField out;
    out.values.resize(2 * n, f.n_gamma());
    out.horizon = 2.0 * f.horizon;
    out.dt_control = f.dt_control;
    out.gamma_weights = f.gamma_weights;
    for (int k = 0; k < n; ++k) out.values.row(k) = f.values.row(k);
    for (int k = n; k < 2 * n; ++k) out.values.row(k) = -f.values.row(2 * n - 1 - k);
    return out;
}

BoundaryTimeField odd_restrict(const BoundaryTimeField& g) {
    const int n2 = g.n_tau();
    if (n2 % 2 != 0) throw DimensionError("odd_restrict: doubled grid expected");
    const int n = n2 / 2;
    BoundaryTimeField out;
    out.values.resize(n, g.n_gamma());
    out.horizon = 0.5 * g.horizon;
    out.dt_control = g.dt_control;
    out.gamma_weights = g.gamma_weights;
    for (int k = 0; k < n; ++k) out.values.row(k) = g.values.row(k) - g.values.row(n2 - 1 - k);
    return out;
}

BoundaryTimeField delay_shift(const BoundaryTimeField& f, double lag) {
    if (lag < 0.0) throw ArgumentError("delay_shift: negative lag");
    const double steps = lag / f.dt_control;
    const int m = static_cast<int>(std::lround(steps));
    if (std::abs(steps - m) > kGridTol)
        throw AlignmentError("delay_shift: lag is not a multiple of the control step");
    BoundaryTimeField out = f;
    out.values.setZero();
    for (int k = m; k < f.n_tau(); ++k) out.values.row(k) = f.values.row(k - m);
    return out;
}

BoundaryTimeField band_cutoff(const BoundaryTimeField& f, double xi,
                              const std::optional<BoundarySubset>& sigma) {
    if (xi < -kGridTol || xi > f.horizon + kGridTol)
        throw ArgumentError("band_cutoff: xi outside [0, horizon]");
    BoundaryTimeField out = f;
    const double T = f.horizon;
    for (int k = 0; k < f.n_tau(); ++k)
        if (f.t_sample(k) < T - xi - kGridTol) out.values.row(k).setZero();
    if (sigma) {
        if (sigma->n_gamma() != f.n_gamma())
            throw DimensionError("band_cutoff: sigma mask size mismatch");
        for (int j = 0; j < f.n_gamma(); ++j)
            if (!sigma->contains(j)) out.values.col(j).setZero();
    }
    return out;
}

InteriorField depth_cutoff(const InteriorGrid& grid, const InteriorField& y, double xi,
                           const std::optional<BoundarySubset>& sigma) {
    if (y.values.size() != grid.n_nodes())
        throw DimensionError("depth_cutoff: field does not match grid");
    if (xi < -kGridTol || xi > grid.T + kGridTol)
        throw ArgumentError("depth_cutoff: xi outside [0, T]");
    if (sigma && sigma->n_gamma() != grid.n_gamma)
        throw DimensionError("depth_cutoff: sigma mask size mismatch");
    InteriorField out = y;
    for (int p = 0; p < grid.n_tau; ++p) {
        const bool keep_depth = grid.tau_sample(p) <= xi + kGridTol;
        for (int i = 0; i < grid.n_gamma; ++i) {
            const bool keep = keep_depth && (!sigma || sigma->contains(i));
            if (!keep) out.values(grid.node(p, i)) = 0.0;
        }
    }
    return out;
}

BoundaryTimeField time_derivative(const BoundaryTimeField& f) {
    const int n = f.n_tau();
    if (n < 3) throw ArgumentError("time_derivative: needs at least 3 samples");
    BoundaryTimeField out = f;
    const double dt = f.dt_control;
    out.values.row(0) = (-3.0 * f.values.row(0) + 4.0 * f.values.row(1) - f.values.row(2)) / (2.0 * dt);
    for (int k = 1; k < n - 1; ++k)
        out.values.row(k) = (f.values.row(k + 1) - f.values.row(k - 1)) / (2.0 * dt);
    out.values.row(n - 1) =
        (3.0 * f.values.row(n - 1) - 4.0 * f.values.row(n - 2) + f.values.row(n - 3)) / (2.0 * dt);
    return out;
}

Eigen::MatrixXd time_reverse_matrix(const ControlGrid& g) {
    const int n = g.flat_size();
    Eigen::MatrixXd Y = Eigen::MatrixXd::Zero(n, n);
    for (int k = 0; k < g.n_tau; ++k)
        for (int j = 0; j < g.n_gamma; ++j)
            Y((g.n_tau - 1 - k) * g.n_gamma + j, k * g.n_gamma + j) = 1.0;
    return Y;
}

Eigen::MatrixXd time_integrate_matrix(const ControlGrid& g) {
    const int n = g.flat_size();
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
    for (int k = 0; k < g.n_tau; ++k)
        for (int m = 0; m <= k; ++m) {
            const double w = (m == k) ? 0.5 * g.dt : g.dt;
            for (int j = 0; j < g.n_gamma; ++j) J(k * g.n_gamma + j, m * g.n_gamma + j) = w;
        }
    return J;
}

Eigen::MatrixXd odd_extend_matrix(const ControlGrid& g) {
    const int n = g.n_tau;
    Eigen::MatrixXd S = Eigen::MatrixXd::Zero(2 * n * g.n_gamma, n * g.n_gamma);
    for (int j = 0; j < g.n_gamma; ++j) {
        for (int k = 0; k < n; ++k) {
            S(k * g.n_gamma + j, k * g.n_gamma + j) = 1.0;
            S((2 * n - 1 - k) * g.n_gamma + j, k * g.n_gamma + j) = -1.0;
        }
    }
    return S;
}

Eigen::VectorXd band_cutoff_diag(const ControlGrid& g, double xi,
                                 const std::optional<BoundarySubset>& sigma) {
    if (xi < -kGridTol || xi > g.horizon() + kGridTol)
        throw ArgumentError("band_cutoff_diag: xi outside [0, horizon]");
    Eigen::VectorXd d = Eigen::VectorXd::Zero(g.flat_size());
    for (int k = 0; k < g.n_tau; ++k) {
        if (g.t_sample(k) < g.horizon() - xi - kGridTol) continue;
        for (int j = 0; j < g.n_gamma; ++j)
            if (!sigma || sigma->contains(j)) d(k * g.n_gamma + j) = 1.0;
    }
    return d;
}

void apply_time_derivative_columns(const ControlGrid& g, Eigen::MatrixXd& columns) {
    if (columns.rows() != g.flat_size())
        throw DimensionError("apply_time_derivative_columns: row count mismatch");
    const int n = g.n_tau, ng = g.n_gamma;
    const double dt = g.dt;
    Eigen::MatrixXd src = columns;
    auto row = [&](int k, int j) { return src.row(k * ng + j); };
    for (int j = 0; j < ng; ++j) {
        columns.row(0 * ng + j) = (-3.0 * row(0, j) + 4.0 * row(1, j) - row(2, j)) / (2.0 * dt);
        for (int k = 1; k < n - 1; ++k)
            columns.row(k * ng + j) = (row(k + 1, j) - row(k - 1, j)) / (2.0 * dt);
        columns.row((n - 1) * ng + j) =
            (3.0 * row(n - 1, j) - 4.0 * row(n - 2, j) + row(n - 3, j)) / (2.0 * dt);
    }
}

std::vector<int> NestIndex::index_set(int m) const {
    if (m < 0 || m >= n_thresholds()) throw ArgumentError("NestIndex: threshold out of range");
    std::vector<int> set;
    const int steps = threshold_steps[m];
    for (int k = n_tau - steps; k < n_tau; ++k)
        for (int j = 0; j < n_gamma; ++j)
            if (sigma.contains(j)) set.push_back(k * n_gamma + j);
    return set;
}

NestIndex make_nest(const ControlGrid& g, int step_samples,
                    const std::optional<BoundarySubset>& sigma) {
    if (step_samples <= 0 || g.n_tau % step_samples != 0)
        throw ArgumentError("make_nest: step must divide the number of time samples");
    NestIndex nest;
    nest.n_tau = g.n_tau;
    nest.n_gamma = g.n_gamma;
    nest.dt = g.dt;
    nest.sigma = sigma ? *sigma : BoundarySubset::all(g.n_gamma);
    if (nest.sigma.n_gamma() != g.n_gamma)
        throw DimensionError("make_nest: sigma mask size mismatch");
    for (int s = 0; s <= g.n_tau; s += step_samples) nest.threshold_steps.push_back(s);
    return nest;
}

// --- smooth controls -------------------------------------------------------------

namespace {

struct Shape1d {
    double v = 0.0, dv = 0.0, ddv = 0.0;
};

Shape1d eval_shape(const SmoothControlSpec& s, double t) {
    Shape1d out;
    if (s.shape == ControlShape::raised_cosine) {
        const double u = t - s.center_time;
        if (std::abs(u) >= 0.5 * s.width) return out;
        const double k = 2.0 * kPi / s.width;
        out.v = s.amplitude * 0.5 * (1.0 + std::cos(k * u));
        out.dv = -s.amplitude * 0.5 * k * std::sin(k * u);
        out.ddv = -s.amplitude * 0.5 * k * k * std::cos(k * u);
    } else {
        const double sig = s.width / 8.0;  // support cut at 4 sigma, tail ~ 3e-4
        const double u = t - s.center_time;
        if (std::abs(u) >= 0.5 * s.width) return out;
        const double e = s.amplitude * std::exp(-0.5 * u * u / (sig * sig));
        out.v = e;
        out.dv = -u / (sig * sig) * e;
        out.ddv = (u * u / (sig * sig) - 1.0) / (sig * sig) * e;
    }
    return out;
}

double angular_distance(double a, double b) {
    double d = std::fmod(std::abs(a - b), 2.0 * kPi);
    return std::min(d, 2.0 * kPi - d);
}

double eval_profile(const SmoothControlSpec& s, double gamma) {
    if (s.profile == BoundaryProfileKind::uniform) return 1.0;
    const double d = angular_distance(gamma, s.profile_center);
    if (d >= 0.5 * s.profile_width) return 0.0;
    const double c = std::cos(kPi * d / s.profile_width);
    return c * c;
}

void check_class(const SmoothControlSpec& s, double T) {
    const double start = s.center_time - 0.5 * s.width;
    const double end = s.center_time + 0.5 * s.width;
    if (start <= 0.0)
        throw ArgumentError("smooth control: support must stay clear of t = 0");
    if (s.control_class == ControlClass::M0 && end >= T)
        throw ArgumentError("smooth control: class M0 support must stay clear of t = T");
    if (s.center_time > T)
        throw ArgumentError("smooth control: center beyond the horizon");
}

}  // namespace

double SmoothControl::value(double gamma, double t) const {
    return eval_profile(spec, gamma) * eval_shape(spec, t).v;
}

SmoothControl make_smooth_control(const ControlGrid& g, const SmoothControlSpec& spec) {
    check_class(spec, g.horizon());
    SmoothControl c;
    c.spec = spec;
    c.f = make_field(g);
    c.f_t = make_field(g);
    c.f_tt = make_field(g);
    for (int k = 0; k < g.n_tau; ++k) {
        const Shape1d s = eval_shape(spec, g.t_sample(k));
        for (int j = 0; j < g.n_gamma; ++j) {
            const double a = eval_profile(spec, g.gamma_coords(j));
            c.f.values(k, j) = a * s.v;
            c.f_t.values(k, j) = a * s.dv;
            c.f_tt.values(k, j) = a * s.ddv;
        }
    }
    return c;
}

std::vector<SmoothControl> make_smooth_controls(const ControlGrid& g,
                                                const SmoothControlSpec& spec, int count) {
    if (count <= 0) throw ArgumentError("make_smooth_controls: count must be positive");
    std::vector<SmoothControl> out;
    out.reserve(count);
    if (count == 1) {
        out.push_back(make_smooth_control(g, spec));
        return out;
    }
    const double T = g.horizon();
    const double c_min = 0.5 * spec.width + g.dt;
    const double c_max = (spec.control_class == ControlClass::M0) ? T - 0.5 * spec.width - g.dt : T;
    if (c_max <= c_min)
        throw ArgumentError("make_smooth_controls: width leaves no admissible centers");
    for (int q = 0; q < count; ++q) {
        SmoothControlSpec s = spec;
        s.center_time = c_min + (c_max - c_min) * (q + 0.5) / count;
        if (s.profile == BoundaryProfileKind::bump)
            s.profile_center = spec.profile_center + 2.0 * kPi * q / count;
        out.push_back(make_smooth_control(g, s));
    }
    return out;
}

}  // namespace wavebc
