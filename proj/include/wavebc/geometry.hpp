#ifndef WAVEBC_GEOMETRY_HPP
#define WAVEBC_GEOMETRY_HPP

#include <Eigen/Dense>
#include <vector>

#include "wavebc/fields.hpp"

namespace wavebc {

enum class DomainKind { interval, disc };

/// Spatial point: x on the interval, (x, y) on the disc.
struct Point2 {
    double x = 0.0;
    double y = 0.0;
};

/// Analytic geometry of the two supported domains plus derived constants.
///
/// Interval: half-line model truncated at L_solver with a single controlled
/// endpoint at x = 0; the far endpoint is a causally invisible artifact.
/// Disc: radius rho, controlled along the full circle; the cut locus is the
/// center, so T_cut = rho.
struct DomainSpec {
    DomainKind kind = DomainKind::interval;

    struct Interval {
        double L_solver = 0.0;  // truncation length
        double h = 0.0;         // solver space step
    } interval;

    struct Disc {
        double rho = 0.0;
        double inner_wall_depth = 0.0;  // depth of the homogeneous-Neumann inner wall
        int n_angular = 0;              // solver angular resolution
        int n_radial = 0;               // solver radial resolution
        double cfl = 0.9;               // solver step safety factor
    } disc;

    struct Derived {
        double T_star = 0.0;
        double T_cut = 0.0;
    } derived;

    /// Reconstruction horizons are capped below the cut-locus time; the disc
    /// Jacobian degenerates as tau -> rho, so the cap carries a safety factor.
    static constexpr double kHorizonCapFactor = 0.9;

    void require_valid_horizon(double T) const;
};

DomainSpec make_interval_domain(double L_solver, double h);
DomainSpec make_disc_domain(double rho, double inner_wall_depth, int n_angular, int n_radial,
                            double cfl = 0.9);

/// Semi-geodesic coordinates: nearest boundary point and depth.
struct SgcPoint {
    double gamma = 0.0;  // trivial (0) on the interval; angle in radians on the disc
    double tau = 0.0;    // distance to Gamma
};

/// Distance to the boundary.
double eikonal(const DomainSpec& domain, const Point2& point);

/// (gamma, tau) of a point off the cut locus.
SgcPoint sgc_inverse(const DomainSpec& domain, const Point2& point);

/// Point with the given semi-geodesic coordinates.
Point2 sgc_forward(const DomainSpec& domain, const SgcPoint& p);

/// Volume Jacobian beta of the passage to semi-geodesic coordinates:
/// 1 on the interval, (rho - tau)/rho on the disc.
double jacobian_beta(const DomainSpec& domain, const SgcPoint& p);

/// Tensor grid on Omega^T in semi-geodesic coordinates.  Depth samples are the
/// cell-centered control-time samples and boundary sites are the control sites,
/// so the image operator is a weighted re-indexing.  Node index = p * n_gamma + i
/// (depth-major), matching the time-major layout of boundary fields.
struct InteriorGrid {
    DomainSpec domain;
    double T = 0.0;
    int n_tau = 0;
    int n_gamma = 0;
    std::vector<SgcPoint> sgc;        // per node
    Eigen::VectorXd beta;             // per node, positive off the cut locus
    Eigen::VectorXd cell_volume;      // per node, exact measure
    Eigen::VectorXd gamma_coords;     // per site
    Eigen::VectorXd gamma_weights;    // boundary measure per site

    int n_nodes() const { return n_tau * n_gamma; }
    int node(int p, int i) const { return p * n_gamma + i; }
    double tau_sample(int p) const { return (p + 0.5) * T / n_tau; }
    double dtau() const { return T / n_tau; }

    ControlGrid control_grid() const {
        return ControlGrid{n_tau, n_gamma, T / n_tau, gamma_coords, gamma_weights};
    }
    InteriorField make_interior_field() const {
        return InteriorField{Eigen::VectorXd::Zero(n_nodes()), cell_volume};
    }
};

InteriorGrid make_interior_grid(const DomainSpec& domain, double T, int n_tau, int n_gamma);

/// Boolean mask over the control grid of Sigma^T marking the pattern Theta^T.
struct PatternMask {
    Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> mask;  // n_tau x n_gamma
};

PatternMask make_pattern_mask(const InteriorGrid& grid);

/// Image operator I^T: (I y)(gamma, tau) = beta^{1/2}(gamma,tau) y(x(gamma,tau)).
BoundaryTimeField image_apply(const InteriorGrid& grid, const InteriorField& y);

/// Adjoint of the image operator: beta^{-1/2}-weighted pullback.
InteriorField image_adjoint(const InteriorGrid& grid, const BoundaryTimeField& g);

/// Image operator as a (diagonal) matrix from H^T to F^T.
OperatorMatrix image_matrix(const InteriorGrid& grid);

}  // namespace wavebc

#endif
