#include "wavebc/geometry.hpp"

#include <cmath>

namespace wavebc {

namespace {
constexpr double kPi = 3.14159265358979323846;

double wrap_angle(double a) {
    double w = std::fmod(a, 2.0 * kPi);
    if (w < 0.0) w += 2.0 * kPi;
    return w;
}
}  // namespace

void DomainSpec::require_valid_horizon(double T) const {
    if (T <= 0.0) throw ConfigurationError("horizon T must be positive");
    if (T > kHorizonCapFactor * derived.T_cut)
        throw ConfigurationError("horizon T exceeds the 0.9*T_cut cap");
    if (kind == DomainKind::interval && interval.L_solver <= T)
        throw ConfigurationError("interval truncation length must exceed T");
}

DomainSpec make_interval_domain(double L_solver, double h) {
    if (L_solver <= 0.0 || h <= 0.0)
        throw ConfigurationError("interval lengths must be positive");
    DomainSpec d;
    d.kind = DomainKind::interval;
    d.interval.L_solver = L_solver;
    d.interval.h = h;
    d.derived.T_star = L_solver;
    d.derived.T_cut = L_solver;
    return d;
}

DomainSpec make_disc_domain(double rho, double inner_wall_depth, int n_angular, int n_radial,
                            double cfl) {
    if (rho <= 0.0 || inner_wall_depth <= 0.0)
        throw ConfigurationError("disc lengths must be positive");
    if (n_angular <= 0 || n_radial <= 0)
        throw ConfigurationError("disc grid counts must be positive");
    if (cfl <= 0.0 || cfl > 1.0) throw ConfigurationError("disc cfl factor must lie in (0, 1]");
    if (inner_wall_depth >= rho)
        throw ConfigurationError("inner wall must stay strictly inside the disc");
    DomainSpec d;
    d.kind = DomainKind::disc;
    d.disc.rho = rho;
    d.disc.inner_wall_depth = inner_wall_depth;
    d.disc.n_angular = n_angular;
    d.disc.n_radial = n_radial;
    d.disc.cfl = cfl;
    d.derived.T_star = rho;
    d.derived.T_cut = rho;
    return d;
}

double eikonal(const DomainSpec& domain, const Point2& point) {
    if (domain.kind == DomainKind::interval) {
        if (point.x < 0.0 || point.x > domain.interval.L_solver)
            throw OutOfDomainError("eikonal: point outside the interval");
        return point.x;
    }
    const double r = std::hypot(point.x, point.y);
    if (r > domain.disc.rho * (1.0 + 1e-12))
        throw OutOfDomainError("eikonal: point outside the disc");
    return domain.disc.rho - std::min(r, domain.disc.rho);
}

SgcPoint sgc_inverse(const DomainSpec& domain, const Point2& point) {
    const double tau = eikonal(domain, point);
    if (domain.kind == DomainKind::interval) return SgcPoint{0.0, tau};
    const double r = domain.disc.rho - tau;
    if (r <= 0.0) throw CutLocusError("sgc_inverse: disc center is the cut locus");
    return SgcPoint{wrap_angle(std::atan2(point.y, point.x)), tau};
}

Point2 sgc_forward(const DomainSpec& domain, const SgcPoint& p) {
    if (p.tau < 0.0) throw ArgumentError("sgc_forward: negative depth");
    if (p.tau >= domain.derived.T_cut)
        throw CutLocusError("sgc_forward: depth reaches the cut locus");
    if (domain.kind == DomainKind::interval) return Point2{p.tau, 0.0};
    const double r = domain.disc.rho - p.tau;
    return Point2{r * std::cos(p.gamma), r * std::sin(p.gamma)};
}

double jacobian_beta(const DomainSpec& domain, const SgcPoint& p) {
    if (p.tau < 0.0) throw ArgumentError("jacobian_beta: negative depth");
    if (p.tau >= domain.derived.T_cut)
        throw CutLocusError("jacobian_beta: depth reaches the cut locus");
    if (domain.kind == DomainKind::interval) return 1.0;
    return (domain.disc.rho - p.tau) / domain.disc.rho;
}

InteriorGrid make_interior_grid(const DomainSpec& domain, double T, int n_tau, int n_gamma) {
    domain.require_valid_horizon(T);
    if (n_tau <= 0) throw ArgumentError("make_interior_grid: n_tau must be positive");
    if (domain.kind == DomainKind::interval && n_gamma != 1)
        throw ArgumentError("make_interior_grid: interval has a single boundary site");
    if (n_gamma <= 0) throw ArgumentError("make_interior_grid: n_gamma must be positive");

    InteriorGrid g;
    g.domain = domain;
    g.T = T;
    g.n_tau = n_tau;
    g.n_gamma = n_gamma;
    g.gamma_coords.resize(n_gamma);
    g.gamma_weights.resize(n_gamma);
    if (domain.kind == DomainKind::interval) {
        g.gamma_coords(0) = 0.0;
        g.gamma_weights(0) = 1.0;  // counting measure on the point boundary
    } else {
        const double dg = 2.0 * kPi / n_gamma;
        for (int i = 0; i < n_gamma; ++i) {
            g.gamma_coords(i) = i * dg;
            g.gamma_weights(i) = domain.disc.rho * dg;  // exact arc measure
        }
    }

    const int n = n_tau * n_gamma;
    g.sgc.resize(n);
    g.beta.resize(n);
    g.cell_volume.resize(n);
    const double dtau = T / n_tau;
    for (int p = 0; p < n_tau; ++p) {
        const double tau = (p + 0.5) * dtau;
        for (int i = 0; i < n_gamma; ++i) {
            const int id = g.node(p, i);
            g.sgc[id] = SgcPoint{g.gamma_coords(i), tau};
            g.beta(id) = jacobian_beta(domain, g.sgc[id]);
            // Midpoint of the exact measure; for the disc the integrand is linear
            // in tau, so this reproduces the polar cell area exactly.
            g.cell_volume(id) = g.beta(id) * dtau * g.gamma_weights(i);
        }
    }
    return g;
}

PatternMask make_pattern_mask(const InteriorGrid& grid) {
    PatternMask m;
    // T < T_cut by construction of the grid, so Theta^T covers all of Sigma^T.
    m.mask.setConstant(grid.n_tau, grid.n_gamma, true);
    return m;
}

BoundaryTimeField image_apply(const InteriorGrid& grid, const InteriorField& y) {
    if (y.values.size() != grid.n_nodes())
        throw DimensionError("image_apply: field does not match grid");
    BoundaryTimeField out = make_field(grid.control_grid());
    for (int p = 0; p < grid.n_tau; ++p)
        for (int i = 0; i < grid.n_gamma; ++i)
            out.values(p, i) = std::sqrt(grid.beta(grid.node(p, i))) * y.values(grid.node(p, i));
    return out;
}

InteriorField image_adjoint(const InteriorGrid& grid, const BoundaryTimeField& g) {
    if (g.n_tau() != grid.n_tau || g.n_gamma() != grid.n_gamma)
        throw DimensionError("image_adjoint: field does not match control grid");
    InteriorField out = grid.make_interior_field();
    for (int p = 0; p < grid.n_tau; ++p)
        for (int i = 0; i < grid.n_gamma; ++i)
            out.values(grid.node(p, i)) = g.values(p, i) / std::sqrt(grid.beta(grid.node(p, i)));
    return out;
}

OperatorMatrix image_matrix(const InteriorGrid& grid) {
    // Node index p*n_gamma+i coincides with the flat control index k*n_gamma+j,
    // so the image operator is diagonal in this layout.
    OperatorMatrix M;
    M.domain = SpaceTag::inner(grid.n_nodes());
    M.codomain = SpaceTag::outer(grid.control_grid());
    M.entries = Eigen::MatrixXd::Zero(grid.n_nodes(), grid.n_nodes());
    for (int id = 0; id < grid.n_nodes(); ++id) M.entries(id, id) = std::sqrt(grid.beta(id));
    return M;
}

}  // namespace wavebc
