#ifndef WAVEBC_BC_INVERSION_HPP
#define WAVEBC_BC_INVERSION_HPP

#include <string>
#include <vector>

#include "wavebc/trace_spaces.hpp"
#include "wavebc/wave_forward.hpp"

namespace wavebc {

/// Discretization of the time derivative inside the amplitude-integral bands.
enum class BandDerivative { exact_inverse, edge_stencils };

/// Tunables of the reconstruction pipeline.
struct InversionConfig {
    int partition_step = 4;            // amplitude-integral step, in control samples
    double spectral_floor = 1e-8;      // eigenvalue cutoff relative to lambda_max
    double positivity_tol = 1e-6;      // abort when lambda_min < -tol * lambda_max
    double projection_rank_tol = 1e-7; // column acceptance threshold in the nest bases
    double denom_threshold = 0.25;     // wave-amplitude fraction below which nodes are masked
    double margin_gamma = -1.0;        // reliable-region margin at the boundary (<0: 3 solver cells)
    double margin_T = -1.0;            // reliable-region margin at depth T   (<0: 3 solver cells)
    int n_test_controls = 5;
    int ls_smoothing_rounds = 8;       // mollification of the least-squares fields in step 4
    int wave_smoothing_rounds = 0;     // mollification of the waves before differencing
    int calibration_passes = 1;        // reference subtractions in step 4 (0: raw formula)
    BandDerivative band_derivative = BandDerivative::exact_inverse;

    double resolved_margin_gamma(const DomainSpec& d) const;
    double resolved_margin_T(const DomainSpec& d) const;
    void validate(double T) const;
};

/// Connecting operator C^T assembled from response data, with its cached
/// symmetric eigendecomposition.
struct ConnectingOperator {
    OperatorMatrix matrix;         // on F^T, symmetrized
    Eigen::VectorXd eigenvalues;   // ascending
    Eigen::MatrixXd eigenvectors;
    double symmetry_defect = 0.0;  // ||C - C^t|| / ||C|| before symmetrization
    double spectral_floor = 0.0;   // relative threshold applied by psd_sqrt
    int retained_rank = 0;

    ControlGrid grid;  // horizon-T control grid

    /// Orthonormal basis of the retained eigenspace (highest eigenvalues).
    Eigen::MatrixXd retained_basis() const;
    /// Retained directions one decade above the truncation edge, used for the
    /// isometry-defect measurements.
    Eigen::MatrixXd defect_basis() const;
};

/// C^T = -1/2 S^* R^{2T} J^{2T} S on the control grid of F^T; symmetrized by
/// averaging, the asymmetry recorded as a diagnostic.
ConnectingOperator connecting_from_response(const ResponseData& R);

/// Truncated-spectral square root.  Eigenvalues below spectral_floor*lambda_max
/// are zeroed; lambda_min < -positivity_tol*lambda_max raises NotPsdError.
OperatorMatrix psd_sqrt(ConnectingOperator& C, double spectral_floor, double positivity_tol);

/// Orthogonal projection in F^T onto span of the C^{1/2} columns of the nest
/// index set at threshold xi, by rank-revealing orthogonalization.
OperatorMatrix nest_projection(const OperatorMatrix& C_half, const NestIndex& nest, double xi,
                               double rank_tol);

/// Nested orthonormal bases for all nest thresholds (block Gram-Schmidt with
/// reorthogonalization; subspaces are nested by construction).
struct NestBases {
    std::vector<Eigen::MatrixXd> new_blocks;  // columns added at each threshold
    std::vector<int> ranks;                   // cumulative rank per threshold
    Eigen::MatrixXd basis(int m) const;       // orthonormal basis at threshold m
};
NestBases build_nest_bases(const Eigen::MatrixXd& C_half, const NestIndex& nest, double rank_tol);

/// Amplitude integral A = Y * sum_i dX_i D_t C^{1/2} dP_i over the nest partition.
struct AmplitudeOperator {
    OperatorMatrix matrix;           // on F^T
    std::vector<double> partition;   // thresholds xi_i
    double isometry_defect = 0.0;    // ||A^t A - I|| on the retained subspace (spectral)
    double range_defect = 0.0;       // ||A A^t - G_Theta|| on the realized range
};

AmplitudeOperator amplitude_integral(const ConnectingOperator& C, const OperatorMatrix& C_half,
                                     const NestIndex& nest, double rank_tol,
                                     BandDerivative mode = BandDerivative::exact_inverse);

/// W_rec = (I^T)^* A C^{1/2} as a dense matrix from the control basis to the
/// interior nodes (visualization of waves).
OperatorMatrix reconstruct_control(const InteriorGrid& grid, const AmplitudeOperator& A,
                                   const OperatorMatrix& C_half);

/// Discrete Laplacian on the interior grid (second-order; one-sided at the
/// radial edges, periodic in angle).
Eigen::VectorXd interior_laplacian(const InteriorGrid& grid, const Eigen::VectorXd& values);

struct RecoveredPotential {
    Eigen::VectorXd values;                              // on the interior grid
    Eigen::Array<bool, Eigen::Dynamic, 1> reliability_mask;
    struct Stats {
        int n_reliable = 0;
        int n_masked_margin = 0;
        int n_masked_denominator = 0;
        double max_wave_amplitude = 0.0;
        double mean_ls_residual = 0.0;  // normalized least-squares misfit over reliable nodes
    } residual_stats;
};

/// Pointwise weighted least squares for q from the graph of the multiplication:
/// q(x) = sum_f w_f (lap w_f - w_ftt) / sum_f w_f^2 over the reliable region.
RecoveredPotential recover_potential(const InteriorGrid& grid, const OperatorMatrix& W_rec,
                                     const std::vector<SmoothControl>& controls,
                                     const InversionConfig& cfg);

/// Same estimator with a known reference system subtracted: the graph residual
/// of a synthesized reference potential (geometry is known, so its waves are
/// computable by the same pipeline) cancels the discretization systematics
/// shared by both systems.
RecoveredPotential recover_potential_referenced(const InteriorGrid& grid,
                                                const OperatorMatrix& W_rec,
                                                const OperatorMatrix& W_ref_rec,
                                                const Eigen::VectorXd& q_ref_interior,
                                                const std::vector<SmoothControl>& controls,
                                                const InversionConfig& cfg);

/// Stage-by-stage diagnostics of a full inversion.
struct InversionDiagnostics {
    double c_symmetry_defect = 0.0;
    double lambda_min = 0.0;
    double lambda_max = 0.0;
    int retained_rank = 0;
    double isometry_defect = 0.0;
    double range_defect = 0.0;
    std::vector<double> partition_thresholds;
    std::vector<std::string> notes;
};

struct InversionResult {
    RecoveredPotential potential;
    InversionDiagnostics diagnostics;
    Eigen::VectorXd eigenvalues;       // spectrum of C (ascending)
    Eigen::MatrixXd sample_wave_rec;   // W_rec f for the test controls (columns)
    std::vector<SmoothControl> controls;
};

/// Full pipeline: connecting operator, square root, nest projections, amplitude
/// integral, control reconstruction, potential recovery.
InversionResult invert(const DomainSpec& domain, const ResponseData& R,
                       const InversionConfig& cfg);

/// Default test-control family used by the pipeline and the characterization
/// checks: raised cosines spread over the admissible centers.
std::vector<SmoothControl> default_test_controls(const ControlGrid& grid, int count);

}  // namespace wavebc

#endif
