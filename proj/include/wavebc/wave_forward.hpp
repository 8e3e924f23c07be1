#ifndef WAVEBC_WAVE_FORWARD_HPP
#define WAVEBC_WAVE_FORWARD_HPP

#include <cstdint>
#include <vector>

#include "wavebc/fields.hpp"
#include "wavebc/geometry.hpp"

namespace wavebc {

/// Bounded potential sampled on the solver grid of Omega.
struct PotentialField {
    Eigen::VectorXd values;
    double sup_norm() const { return values.size() ? values.cwiseAbs().maxCoeff() : 0.0; }
};

// Solver grid layout.  Interval: nodes x_i = i*h, i = 0..Nx.  Disc: polar nodes
// (r_l, theta_m) on the annulus, r_l = r_in + l*dr, index l*n_angular + m.
int solver_node_count(const DomainSpec& domain);
/// Depth (eikonal value) of a solver node.
double solver_node_depth(const DomainSpec& domain, int node);

PotentialField make_zero_potential(const DomainSpec& domain);
PotentialField make_constant_potential(const DomainSpec& domain, double c);
/// Gaussian profile in depth: amp * exp(-(tau - center)^2 / (2 width^2)).
/// Radially symmetric on the disc.
PotentialField make_gaussian_potential(const DomainSpec& domain, double amplitude,
                                       double center_depth, double width);
/// Seeded piecewise-constant potential with |q| <= max_abs, blocks of block_cells.
PotentialField make_rough_potential(const DomainSpec& domain, double max_abs, int block_cells,
                                    std::uint64_t seed);
void zero_beyond_depth(const DomainSpec& domain, PotentialField& q, double T);
/// Potential sampled at the interior-grid nodes (for error summaries).
InteriorField restrict_potential_to_grid(const InteriorGrid& grid, const PotentialField& q);
/// Interior-grid node values prolonged onto the solver grid (zero beyond depth T).
PotentialField potential_from_interior(const InteriorGrid& grid, const Eigen::VectorXd& values);

/// Space-time solution record on the solver grid.
struct SpaceTimeField {
    std::vector<double> times;
    Eigen::MatrixXd values;  // n_t x n_nodes
    double dt_solver = 0.0;
    double cfl_ratio = 0.0;  // dt / stability limit, <= 1
};

/// Symmetric interior smoothing stencil replacing the multiplication by q:
/// rounds applications of the 3-point (1,2,1)/4 smoother per axis, scaled by
/// amplitude.  rounds = 0 reproduces the local potential q == amplitude.
struct NonlocalStencil {
    double amplitude = 0.0;
    int rounds = 0;
};

/// Discrete extended response operator stored as a time-convolution kernel.
/// kernel[s](j, i) is the trace at boundary site j, time sample s, of the
/// response to a unit temporal hat at the first control sample of site i.
struct ResponseData {
    std::vector<Eigen::MatrixXd> kernel;  // 2*n_tau slices of n_gamma x n_gamma
    double T = 0.0;
    ControlGrid control;  // horizon-T control grid
    double synthetic_noise_level = 0.0;
    bool nonlocal_source = false;

    ControlGrid doubled_grid() const { return control.doubled(); }
    int n_slices() const { return static_cast<int>(kernel.size()); }
    /// Lower block-Toeplitz expansion R[(k,j),(m,i)] = kernel[k-m](j,i).
    Eigen::MatrixXd full_matrix() const;
    /// Truncation to the horizon-T response operator R^T.
    Eigen::MatrixXd matrix_T() const;
    /// Convolution application on the doubled grid.
    BoundaryTimeField apply(const BoundaryTimeField& f) const;
    void check() const;
};

/// Leapfrog solve of the controlled wave system with Neumann flux f, zero
/// Cauchy data, from t = 0 to t_end.
SpaceTimeField solve_ibvp(const DomainSpec& domain, const PotentialField& q,
                          const BoundaryTimeField& f, double t_end);

/// W^T f: wave snapshot u^f(., T) restricted onto the interior grid.
InteriorField control_operator_ref(const InteriorGrid& grid, const PotentialField& q,
                                   const BoundaryTimeField& f);

/// Forward-solver control operator on the control basis, one column per basis
/// control (delay relation: one solve per boundary site, snapshots at the
/// delayed instants).
OperatorMatrix reference_control_matrix(const InteriorGrid& grid, const PotentialField& q);

/// Extended response over [0, 2T]: one solve per boundary site with a unit
/// temporal hat pulse; traces projected to the control grid.
ResponseData assemble_response(const DomainSpec& domain, const PotentialField& q,
                               const ControlGrid& control);

/// Same synthesis with the multiplication by q replaced by the nonlocal term.
ResponseData assemble_response_nonlocal(const DomainSpec& domain, const NonlocalStencil& K,
                                        const ControlGrid& control);

/// Dual system: reversed-time solve with v|_{t=T} = 0, v_t|_{t=T} = y and
/// homogeneous Neumann flux; returns the trace O^T y = v^y|_{Sigma^T}.
BoundaryTimeField solve_dual(const InteriorGrid& grid, const PotentialField& q,
                             const InteriorField& y);

/// Additive Gaussian kernel noise of exact relative Frobenius size `level`.
void add_relative_noise(ResponseData& R, double level, std::uint64_t seed);

}  // namespace wavebc

#endif
