#ifndef WAVEBC_TRACE_SPACES_HPP
#define WAVEBC_TRACE_SPACES_HPP

#include <optional>
#include <vector>

#include "wavebc/fields.hpp"
#include "wavebc/geometry.hpp"

namespace wavebc {

/// Open subset sigma of the boundary, as a site mask on the control grid.
struct BoundarySubset {
    Eigen::Array<bool, Eigen::Dynamic, 1> sites;

    static BoundarySubset all(int n_gamma) {
        BoundarySubset s;
        s.sites.setConstant(n_gamma, true);
        return s;
    }
    /// Contiguous arc of sites [first, first+count) modulo n_gamma.
    static BoundarySubset arc(int n_gamma, int first, int count);
    bool contains(int j) const { return sites(j); }
    int n_gamma() const { return static_cast<int>(sites.size()); }
};

// --- standard operators on boundary-time fields ---------------------------------

/// Y: f(., t) -> f(., T - t).  Maps sample k to sample n_tau-1-k.
BoundaryTimeField time_reverse(const BoundaryTimeField& f);

/// J: cumulative time integral, sampled at the cell centers.
BoundaryTimeField time_integrate(const BoundaryTimeField& f);

/// S: odd extension about t = T from [0,T) to [0,2T).
BoundaryTimeField odd_extend(const BoundaryTimeField& f);

/// S^*: (g)(t) - g(2T - t) restricted to [0,T); adjoint of odd_extend under the
/// quadrature inner products.  odd_restrict(odd_extend(f)) == 2 f exactly.
BoundaryTimeField odd_restrict(const BoundaryTimeField& g);

/// Right shift by a nonnegative grid-aligned lag; tail truncated at the horizon.
BoundaryTimeField delay_shift(const BoundaryTimeField& f, double lag);

/// X^{T,xi}: zeroes samples with t < T - xi (and sites outside sigma when given).
BoundaryTimeField band_cutoff(const BoundaryTimeField& f, double xi,
                              const std::optional<BoundarySubset>& sigma = std::nullopt);

/// G^xi: zeroes interior nodes with tau > xi (and outside sigma when given).
InteriorField depth_cutoff(const InteriorGrid& grid, const InteriorField& y, double xi,
                           const std::optional<BoundarySubset>& sigma = std::nullopt);

/// Second-order time derivative stencil (central; one-sided at both ends).
BoundaryTimeField time_derivative(const BoundaryTimeField& f);

// --- matrix forms on the flattened control grid ---------------------------------

Eigen::MatrixXd time_reverse_matrix(const ControlGrid& g);
Eigen::MatrixXd time_integrate_matrix(const ControlGrid& g);
/// S as a (2n x n) matrix from the T-grid to the doubled grid.
Eigen::MatrixXd odd_extend_matrix(const ControlGrid& g);
/// 0/1 diagonal of X^{T,xi} (optionally restricted to sigma).
Eigen::VectorXd band_cutoff_diag(const ControlGrid& g, double xi,
                                 const std::optional<BoundarySubset>& sigma = std::nullopt);
/// Applies the time-derivative stencil to each column of a flattened operator.
void apply_time_derivative_columns(const ControlGrid& g, Eigen::MatrixXd& columns);

// --- nest of delayed-control subspaces ------------------------------------------

/// Increasing family of index sets of the delayed-control subspaces F^{T,xi}.
/// Thresholds are stored in samples: xi_m = step_m * dt.
struct NestIndex {
    int n_tau = 0;
    int n_gamma = 0;
    double dt = 0.0;
    std::vector<int> threshold_steps;  // 0 = s_0 < ... < s_N = n_tau
    BoundarySubset sigma;

    int n_thresholds() const { return static_cast<int>(threshold_steps.size()); }
    double threshold(int m) const { return threshold_steps[m] * dt; }
    /// Flat indices of samples with t >= T - xi_m and site in sigma, ordered.
    std::vector<int> index_set(int m) const;
};

/// Uniform nest with spacing step_samples (must divide n_tau).
NestIndex make_nest(const ControlGrid& g, int step_samples,
                    const std::optional<BoundarySubset>& sigma = std::nullopt);

// --- smooth control generators ---------------------------------------------------

enum class ControlShape { raised_cosine, gaussian_pulse };
enum class ControlClass { M, M0 };  // M vanishes near t=0; M0 also near t=T

enum class BoundaryProfileKind { uniform, bump };

struct SmoothControlSpec {
    ControlShape shape = ControlShape::raised_cosine;
    double center_time = 0.0;
    double width = 0.0;  // full support width (4 sigma for the gaussian)
    double amplitude = 1.0;
    BoundaryProfileKind profile = BoundaryProfileKind::uniform;
    double profile_center = 0.0;  // bump center angle
    double profile_width = 0.0;   // bump angular width
    ControlClass control_class = ControlClass::M;
};

/// A control with closed-form time derivatives, sampled on the control grid.
struct SmoothControl {
    SmoothControlSpec spec;
    BoundaryTimeField f;
    BoundaryTimeField f_t;
    BoundaryTimeField f_tt;

    double value(double gamma, double t) const;  // analytic evaluation (usable at t = T)
};

SmoothControl make_smooth_control(const ControlGrid& g, const SmoothControlSpec& spec);

/// count controls derived from spec by spreading the center over the admissible
/// window (and rotating the boundary bump on the disc), so the generated waves
/// cover all depths of Omega^T.
std::vector<SmoothControl> make_smooth_controls(const ControlGrid& g,
                                                const SmoothControlSpec& spec, int count);

}  // namespace wavebc

#endif
