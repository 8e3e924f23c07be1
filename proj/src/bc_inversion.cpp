#include "wavebc/bc_inversion.hpp"

#include <Eigen/QR>
#include <cmath>

#include "wavebc/linalg.hpp"

namespace wavebc {

namespace {
constexpr double kGridTol = 1e-9;

Eigen::MatrixXd time_flip_rows(const ControlGrid& g, const Eigen::MatrixXd& M) {
    Eigen::MatrixXd out(M.rows(), M.cols());
    for (int k = 0; k < g.n_tau; ++k)
        out.middleRows((g.n_tau - 1 - k) * g.n_gamma, g.n_gamma) =
            M.middleRows(k * g.n_gamma, g.n_gamma);
    return out;
}
}  // namespace

double InversionConfig::resolved_margin_gamma(const DomainSpec& d) const {
    if (margin_gamma >= 0.0) return margin_gamma;
    return 3.0 * (d.kind == DomainKind::interval ? d.interval.h
                                                 : d.disc.inner_wall_depth / d.disc.n_radial);
}

double InversionConfig::resolved_margin_T(const DomainSpec& d) const {
    if (margin_T >= 0.0) return margin_T;
    return 3.0 * (d.kind == DomainKind::interval ? d.interval.h
                                                 : d.disc.inner_wall_depth / d.disc.n_radial);
}

void InversionConfig::validate(double T) const {
    if (partition_step <= 0) throw ArgumentError("InversionConfig: partition_step must be positive");
    if (spectral_floor <= 0.0 || positivity_tol <= 0.0 || projection_rank_tol <= 0.0 ||
        denom_threshold <= 0.0)
        throw ArgumentError("InversionConfig: thresholds must be positive");
    if (n_test_controls <= 0) throw ArgumentError("InversionConfig: need at least one test control");
    if (margin_gamma >= T / 4.0 || margin_T >= T / 4.0)
        throw ArgumentError("InversionConfig: margins must stay below T/4");
}

Eigen::MatrixXd ConnectingOperator::retained_basis() const {
    const int n = static_cast<int>(eigenvalues.size());
    return eigenvectors.rightCols(std::min(retained_rank, n));
}

Eigen::MatrixXd ConnectingOperator::defect_basis() const {
    // Isometry defects are evaluated one decade above the truncation edge;
    // directions at the edge are only partially represented by the truncated
    // square root and would dominate the measurement with truncation noise.
    const int n = static_cast<int>(eigenvalues.size());
    const double lam_max = eigenvalues(n - 1);
    int count = 0;
    for (int i = 0; i < n; ++i)
        if (eigenvalues(i) >= 10.0 * spectral_floor * lam_max) ++count;
    return eigenvectors.rightCols(std::min(count, retained_rank));
}

ConnectingOperator connecting_from_response(const ResponseData& R) {
    R.check();
    const ControlGrid gT = R.control;
    const ControlGrid g2 = R.doubled_grid();
    if (std::abs(R.T - gT.horizon()) > kGridTol)
        throw DimensionError("connecting_from_response: horizon mismatch");

    const Eigen::MatrixXd S = odd_extend_matrix(gT);
    const Eigen::MatrixXd J2 = time_integrate_matrix(g2);
    const Eigen::MatrixXd Rm = R.full_matrix();
    // The time step and boundary weights agree on both grids, so the quadrature
    // adjoint of S is the plain transpose.
    const Eigen::MatrixXd C_raw = -0.5 * (S.transpose() * (Rm * (J2 * S)));

    ConnectingOperator C;
    C.grid = gT;
    const double nrm = C_raw.norm();
    C.symmetry_defect = nrm > 0.0 ? (C_raw - C_raw.transpose()).norm() / nrm : 0.0;
    C.matrix.entries = 0.5 * (C_raw + C_raw.transpose());
    C.matrix.domain = SpaceTag::outer(gT);
    C.matrix.codomain = SpaceTag::outer(gT);

    const auto es = symmetric_eigen(C.matrix.entries);
    C.eigenvalues = es.eigenvalues();
    C.eigenvectors = es.eigenvectors();
    C.retained_rank = static_cast<int>(C.eigenvalues.size());
    return C;
}

OperatorMatrix psd_sqrt(ConnectingOperator& C, double spectral_floor, double positivity_tol) {
    const int n = static_cast<int>(C.eigenvalues.size());
    if (n == 0) throw DimensionError("psd_sqrt: empty operator");
    const double lam_max = C.eigenvalues(n - 1);
    if (lam_max <= 0.0)
        throw NotPsdError("psd_sqrt: spectrum is nonpositive; data fail characterization condition 2");
    const double lam_min = C.eigenvalues(0);
    if (lam_min < -positivity_tol * lam_max)
        throw NotPsdError("psd_sqrt: lambda_min/lambda_max = " +
                          std::to_string(lam_min / lam_max) +
                          " below tolerance; data fail characterization condition 2");

    const double floor_abs = spectral_floor * lam_max;
    Eigen::VectorXd root = Eigen::VectorXd::Zero(n);
    int rank = 0;
    for (int i = 0; i < n; ++i) {
        if (C.eigenvalues(i) >= floor_abs) {
            root(i) = std::sqrt(C.eigenvalues(i));
            ++rank;
        }
    }
    C.spectral_floor = spectral_floor;
    C.retained_rank = rank;

    OperatorMatrix half;
    half.domain = C.matrix.domain;
    half.codomain = C.matrix.codomain;
    half.entries = C.eigenvectors * root.asDiagonal() * C.eigenvectors.transpose();
    return half;
}

NestBases build_nest_bases(const Eigen::MatrixXd& C_half, const NestIndex& nest, double rank_tol) {
    const int n = static_cast<int>(C_half.rows());
    double col_scale = 0.0;
    for (int c = 0; c < C_half.cols(); ++c) col_scale = std::max(col_scale, C_half.col(c).norm());
    const double accept = rank_tol * col_scale;

    NestBases out;
    out.new_blocks.resize(nest.n_thresholds());
    out.ranks.resize(nest.n_thresholds());
    Eigen::MatrixXd Q(n, n);
    int r = 0;
    std::vector<int> prev;
    for (int m = 0; m < nest.n_thresholds(); ++m) {
        const std::vector<int> cur = nest.index_set(m);
        std::vector<int> fresh;
        for (int idx : cur)
            if (std::find(prev.begin(), prev.end(), idx) == prev.end()) fresh.push_back(idx);
        const int r0 = r;
        for (int idx : fresh) {
            Eigen::VectorXd v = C_half.col(idx);
            // two-pass Gram-Schmidt keeps the basis orthonormal to machine precision
            for (int pass = 0; pass < 2; ++pass)
                if (r > 0) v -= Q.leftCols(r) * (Q.leftCols(r).transpose() * v);
            const double nv = v.norm();
            if (nv > accept) {
                Q.col(r) = v / nv;
                ++r;
            }
        }
        out.new_blocks[m] = Q.middleCols(r0, r - r0);
        out.ranks[m] = r;
        prev = cur;
    }
    return out;
}

Eigen::MatrixXd NestBases::basis(int m) const {
    if (m < 0 || m >= static_cast<int>(ranks.size()))
        throw ArgumentError("NestBases::basis: threshold out of range");
    const int n = static_cast<int>(new_blocks.back().rows());
    Eigen::MatrixXd Q(n, ranks[m]);
    int c = 0;
    for (int i = 0; i <= m; ++i) {
        Q.middleCols(c, new_blocks[i].cols()) = new_blocks[i];
        c += static_cast<int>(new_blocks[i].cols());
    }
    return Q;
}

OperatorMatrix nest_projection(const OperatorMatrix& C_half, const NestIndex& nest, double xi,
                               double rank_tol) {
    int m_found = -1;
    for (int m = 0; m < nest.n_thresholds(); ++m)
        if (std::abs(nest.threshold(m) - xi) < kGridTol) m_found = m;
    if (m_found < 0) throw ArgumentError("nest_projection: xi is not a nest threshold");
    const NestBases bases = build_nest_bases(C_half.entries, nest, rank_tol);
    const Eigen::MatrixXd Q = bases.basis(m_found);
    OperatorMatrix P;
    P.domain = C_half.domain;
    P.codomain = C_half.domain;
    P.entries = Q * Q.transpose();
    return P;
}

AmplitudeOperator amplitude_integral(const ConnectingOperator& C, const OperatorMatrix& C_half,
                                     const NestIndex& nest, double rank_tol, BandDerivative mode) {
    const ControlGrid g = C.grid;
    const int n = g.flat_size();
    const int nt = g.n_tau, ng = g.n_gamma;
    if (C_half.entries.rows() != n)
        throw DimensionError("amplitude_integral: square-root size mismatch");
    if (nest.n_tau != nt || nest.n_gamma != ng)
        throw AlignmentError("amplitude_integral: nest does not match the control grid");
    if (nest.n_thresholds() < 2)
        throw ArgumentError("amplitude_integral: nest needs at least one positive threshold");
    // Partition scale: the diagonal of the operator integral is extracted with
    // sliding windows of this length (in samples).  Disjoint partition cells
    // would put every cell boundary into the second-difference stencils and the
    // resulting O(delta xi) jumps dominate; overlapping windows realize the same
    // integral without the cell boundaries.
    const int L = std::max(2, nest.threshold_steps[1] - nest.threshold_steps[0]);

    // Nested bases at every sample threshold: block j spans the fresh
    // directions of time row n_tau - j.
    const NestIndex fine = make_nest(g, 1, nest.sigma.n_gamma() == ng
                                               ? std::optional<BoundarySubset>(nest.sigma)
                                               : std::nullopt);
    const NestBases bases = build_nest_bases(C_half.entries, fine, rank_tol);
    const int R = bases.ranks.back();
    Eigen::MatrixXd Q_all(n, R);
    std::vector<int> col_lo(fine.n_thresholds(), 0);
    {
        int c = 0;
        for (int j = 0; j < fine.n_thresholds(); ++j) {
            col_lo[j] = c;
            Q_all.middleCols(c, bases.new_blocks[j].cols()) = bases.new_blocks[j];
            c += static_cast<int>(bases.new_blocks[j].cols());
        }
    }
    const Eigen::MatrixXd M_all = C_half.entries * Q_all;

    const double dt = g.dt;
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
    Eigen::MatrixXd Dk(ng, R);
    for (int k = 0; k < nt; ++k) {
        // fresh blocks whose time row lies in the window around k
        const int r_top = std::min(k + L - 1, nt - 1);
        const int r_bot = (mode == BandDerivative::exact_inverse)
                              ? k
                              : std::max(0, k - std::min(3, L - 1));
        const int j_lo = nt - r_top;  // threshold index owning row r_top
        const int j_hi = nt - r_bot;
        const int c0 = col_lo[j_lo];
        const int c1 = (j_hi + 1 <= static_cast<int>(col_lo.size()) - 1)
                           ? col_lo[j_hi + 1]
                           : R;
        const int nc = c1 - c0;
        if (nc <= 0) continue;

        if (mode == BandDerivative::exact_inverse) {
            // The window operand vanishes above row r_top; invert the in-window
            // integration rule down to row k and read the amplitude there.
            for (int jj = 0; jj < ng; ++jj) {
                Eigen::RowVectorXd running = Eigen::RowVectorXd::Zero(nc);
                Eigen::RowVectorXd x(nc);
                for (int r = r_top; r >= k; --r) {
                    x = 2.0 * (M_all.block(r * ng + jj, c0, 1, nc) / dt - running);
                    running += x;
                }
                Dk.block(jj, 0, 1, nc) = -x;
            }
        } else {
            // Dispersion smears the fronts, so the summed operand is smooth
            // near row k: plain second-order differences.
            for (int jj = 0; jj < ng; ++jj) {
                if (k == 0) {
                    Dk.block(jj, 0, 1, nc) =
                        (-3.0 * M_all.block(jj, c0, 1, nc) +
                         4.0 * M_all.block(ng + jj, c0, 1, nc) -
                         M_all.block(2 * ng + jj, c0, 1, nc)) / (2.0 * dt);
                } else if (k == nt - 1) {
                    Dk.block(jj, 0, 1, nc) =
                        (3.0 * M_all.block((nt - 1) * ng + jj, c0, 1, nc) -
                         4.0 * M_all.block((nt - 2) * ng + jj, c0, 1, nc) +
                         M_all.block((nt - 3) * ng + jj, c0, 1, nc)) / (2.0 * dt);
                } else {
                    Dk.block(jj, 0, 1, nc) =
                        (M_all.block((k + 1) * ng + jj, c0, 1, nc) -
                         M_all.block((k - 1) * ng + jj, c0, 1, nc)) / (2.0 * dt);
                }
            }
        }
        // detected jump amplitudes carry the factor -beta^(1/2) y; flip the sign
        // so that A composes to an isometry with A U^* = I
        A.middleRows(k * ng, ng).noalias() -= Dk.leftCols(nc) * Q_all.middleCols(c0, nc).transpose();
    }

    AmplitudeOperator out;
    out.matrix.domain = SpaceTag::outer(g);
    out.matrix.codomain = SpaceTag::outer(g);
    out.matrix.entries = time_flip_rows(g, A);
    for (int m = 0; m < nest.n_thresholds(); ++m) out.partition.push_back(nest.threshold(m));

    // Isometry and range defects restricted to the retained subspace.
    const Eigen::MatrixXd Vr = C.defect_basis();
    if (Vr.cols() > 0) {
        const Eigen::MatrixXd E = out.matrix.entries * Vr;
        out.isometry_defect =
            symmetric_spectral_norm(E.transpose() * E - Eigen::MatrixXd::Identity(E.cols(), E.cols()));
        Eigen::HouseholderQR<Eigen::MatrixXd> qr(E);
        Eigen::MatrixXd Qr = qr.householderQ() * Eigen::MatrixXd::Identity(n, E.cols());
        const Eigen::MatrixXd At_Q = out.matrix.entries.transpose() * Qr;
        out.range_defect = symmetric_spectral_norm(At_Q.transpose() * At_Q -
                                             Eigen::MatrixXd::Identity(E.cols(), E.cols()));
    }
    return out;
}

OperatorMatrix reconstruct_control(const InteriorGrid& grid, const AmplitudeOperator& A,
                                   const OperatorMatrix& C_half) {
    const int n = grid.n_nodes();
    if (A.matrix.entries.rows() != n || C_half.entries.rows() != n)
        throw DimensionError("reconstruct_control: operator sizes do not match the grid");
    OperatorMatrix W;
    W.domain = C_half.domain;
    W.codomain = SpaceTag::inner(n);
    W.entries.noalias() = A.matrix.entries * C_half.entries;
    // image adjoint is diagonal in the shared (depth-major) layout
    for (int id = 0; id < n; ++id) W.entries.row(id) /= std::sqrt(grid.beta(id));
    return W;
}

Eigen::VectorXd interior_laplacian(const InteriorGrid& grid, const Eigen::VectorXd& values) {
    if (values.size() != grid.n_nodes())
        throw DimensionError("interior_laplacian: field does not match grid");
    const int nt = grid.n_tau, ng = grid.n_gamma;
    const double d = grid.dtau(), d2 = d * d;
    Eigen::VectorXd lap = Eigen::VectorXd::Zero(values.size());
    auto v = [&](int p, int i) { return values(grid.node(p, i)); };
    for (int i = 0; i < ng; ++i) {
        for (int p = 0; p < nt; ++p) {
            double u_tt, u_t;
            if (p == 0) {
                u_tt = (2.0 * v(0, i) - 5.0 * v(1, i) + 4.0 * v(2, i) - v(3, i)) / d2;
                u_t = (-3.0 * v(0, i) + 4.0 * v(1, i) - v(2, i)) / (2.0 * d);
            } else if (p == nt - 1) {
                u_tt = (2.0 * v(nt - 1, i) - 5.0 * v(nt - 2, i) + 4.0 * v(nt - 3, i) -
                        v(nt - 4, i)) / d2;
                u_t = (3.0 * v(nt - 1, i) - 4.0 * v(nt - 2, i) + v(nt - 3, i)) / (2.0 * d);
            } else {
                u_tt = (v(p + 1, i) - 2.0 * v(p, i) + v(p - 1, i)) / d2;
                u_t = (v(p + 1, i) - v(p - 1, i)) / (2.0 * d);
            }
            if (grid.domain.kind == DomainKind::interval) {
                lap(grid.node(p, i)) = u_tt;
            } else {
                const double r = grid.domain.disc.rho - grid.tau_sample(p);
                const int im = (i + ng - 1) % ng, ip = (i + 1) % ng;
                const double dth = 2.0 * 3.14159265358979323846 / ng;
                const double u_thth = (v(p, ip) - 2.0 * v(p, i) + v(p, im)) / (dth * dth);
                lap(grid.node(p, i)) = u_tt - u_t / r + u_thth / (r * r);
            }
        }
    }
    return lap;
}

namespace {

// One round of the (1,2,1)/4 smoother along depth (mirrored ends) and, on the
// disc, along the periodic angle.
Eigen::VectorXd mollify_field(const InteriorGrid& grid, Eigen::VectorXd u, int rounds) {
    const int nt = grid.n_tau, ng = grid.n_gamma;
    Eigen::VectorXd s(u.size());
    for (int r = 0; r < rounds; ++r) {
        for (int i = 0; i < ng; ++i)
            for (int p = 0; p < nt; ++p) {
                const int pm = p > 0 ? p - 1 : 1, pp = p < nt - 1 ? p + 1 : nt - 2;
                s(grid.node(p, i)) = 0.25 * (u(grid.node(pm, i)) + 2.0 * u(grid.node(p, i)) +
                                             u(grid.node(pp, i)));
            }
        u = s;
        if (ng > 2) {
            for (int p = 0; p < nt; ++p)
                for (int i = 0; i < ng; ++i) {
                    const int im = (i + ng - 1) % ng, ip = (i + 1) % ng;
                    s(grid.node(p, i)) = 0.25 * (u(grid.node(p, im)) + 2.0 * u(grid.node(p, i)) +
                                                 u(grid.node(p, ip)));
                }
            u = s;
        }
    }
    return u;
}

}  // namespace

namespace {

RecoveredPotential recover_impl(const InteriorGrid& grid, const OperatorMatrix& W_rec,
                                const OperatorMatrix* W_ref_rec, const Eigen::VectorXd* q_ref,
                                const std::vector<SmoothControl>& controls,
                                const InversionConfig& cfg) {
    if (controls.empty()) throw ArgumentError("recover_potential: no controls supplied");
    const int n = grid.n_nodes();
    if (W_rec.entries.rows() != n)
        throw DimensionError("recover_potential: operator does not match grid");
    if (W_ref_rec && (W_ref_rec->entries.rows() != n || !q_ref || q_ref->size() != n))
        throw DimensionError("recover_potential: reference does not match grid");
    const double mg = cfg.resolved_margin_gamma(grid.domain);
    const double mT = cfg.resolved_margin_T(grid.domain);

    Eigen::VectorXd numer = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd denom = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd misfit_ref = Eigen::VectorXd::Zero(n);
    std::vector<Eigen::VectorXd> waves, rhs;
    double amp_max = 0.0;
    for (const SmoothControl& c : controls) {
        // Grid-scale roughness in the reconstructed waves rectifies in the
        // quadratic forms below, so it is mollified before any product.
        const Eigen::VectorXd w =
            mollify_field(grid, W_rec.entries * to_flat(c.f), cfg.wave_smoothing_rounds);
        const Eigen::VectorXd w_tt =
            mollify_field(grid, W_rec.entries * to_flat(c.f_tt), cfg.wave_smoothing_rounds);
        Eigen::VectorXd r = interior_laplacian(grid, w) - w_tt;
        if (W_ref_rec) {
            // graph residual of the synthesized reference system; the shared
            // discretization systematics cancel in the difference
            const Eigen::VectorXd w0 =
                mollify_field(grid, W_ref_rec->entries * to_flat(c.f), cfg.wave_smoothing_rounds);
            const Eigen::VectorXd w0_tt = mollify_field(
                grid, W_ref_rec->entries * to_flat(c.f_tt), cfg.wave_smoothing_rounds);
            r -= interior_laplacian(grid, w0) - w0_tt;
            r += q_ref->cwiseProduct(w0);
        }
        numer += w.cwiseProduct(r);
        denom += w.cwiseProduct(w);
        misfit_ref += r.cwiseProduct(r);
        waves.push_back(w);
        rhs.push_back(std::move(r));
        amp_max = std::max(amp_max, w.cwiseAbs().maxCoeff());
    }
    // Mollify the least-squares fields at the grid scale before dividing; the
    // second differences above amplify grid-scale reconstruction noise that the
    // pointwise quotient cannot tolerate.
    numer = mollify_field(grid, numer, cfg.ls_smoothing_rounds);
    denom = mollify_field(grid, denom, cfg.ls_smoothing_rounds);

    RecoveredPotential out;
    out.values = Eigen::VectorXd::Zero(n);
    out.reliability_mask.setConstant(n, false);
    const double denom_cut = std::pow(cfg.denom_threshold * amp_max, 2);
    out.residual_stats.max_wave_amplitude = amp_max;

    int n_margin = 0, n_denom = 0, n_ok = 0;
    double misfit_acc = 0.0;
    for (int p = 0; p < grid.n_tau; ++p) {
        const double tau = grid.tau_sample(p);
        const bool in_margin = (tau < mg) || (tau > grid.T - mT);
        for (int i = 0; i < grid.n_gamma; ++i) {
            const int id = grid.node(p, i);
            if (in_margin) {
                ++n_margin;
                continue;
            }
            if (denom(id) < denom_cut) {
                ++n_denom;
                continue;
            }
            out.values(id) = numer(id) / denom(id);
            out.reliability_mask(id) = true;
            ++n_ok;
            double mis = 0.0;
            for (std::size_t c = 0; c < waves.size(); ++c) {
                const double e = rhs[c](id) - out.values(id) * waves[c](id);
                mis += e * e;
            }
            misfit_acc += std::sqrt(mis / (misfit_ref(id) + 1e-300));
        }
    }
    if (n_ok == 0)
        throw DegenerateConfigurationError("recover_potential: reliable region is empty");
    out.residual_stats.n_reliable = n_ok;
    out.residual_stats.n_masked_margin = n_margin;
    out.residual_stats.n_masked_denominator = n_denom;
    out.residual_stats.mean_ls_residual = misfit_acc / n_ok;
    return out;
}

}  // namespace

RecoveredPotential recover_potential(const InteriorGrid& grid, const OperatorMatrix& W_rec,
                                     const std::vector<SmoothControl>& controls,
                                     const InversionConfig& cfg) {
    return recover_impl(grid, W_rec, nullptr, nullptr, controls, cfg);
}

RecoveredPotential recover_potential_referenced(const InteriorGrid& grid,
                                                const OperatorMatrix& W_rec,
                                                const OperatorMatrix& W_ref_rec,
                                                const Eigen::VectorXd& q_ref_interior,
                                                const std::vector<SmoothControl>& controls,
                                                const InversionConfig& cfg) {
    return recover_impl(grid, W_rec, &W_ref_rec, &q_ref_interior, controls, cfg);
}

std::vector<SmoothControl> default_test_controls(const ControlGrid& grid, int count) {
    if (count <= 0) throw ArgumentError("default_test_controls: count must be positive");
    // Wide raised cosines with supports snapped to the sample cells: kinks of
    // f'' then fall on quadrature cell edges and stay invisible to the
    // midpoint rule.
    std::vector<SmoothControl> out;
    const double T = grid.horizon(), dt = grid.dt;
    const double width = std::round(0.45 * T / dt) * 2.0 * dt;
    const double c_min = 0.5 * width + dt, c_max = T;
    for (int j = 0; j < count; ++j) {
        SmoothControlSpec spec;
        spec.shape = ControlShape::raised_cosine;
        spec.width = width;
        spec.control_class = ControlClass::M;
        double c = (count == 1) ? 0.5 * (c_min + c_max)
                                : c_min + (c_max - c_min) * (j + 0.5) / count;
        c = std::round(c / dt) * dt;
        if (c - 0.5 * width <= 0.0) c += dt;
        spec.center_time = c;
        out.push_back(make_smooth_control(grid, spec));
    }
    return out;
}

InversionResult invert(const DomainSpec& domain, const ResponseData& R,
                       const InversionConfig& cfg) {
    cfg.validate(R.T);
    const ControlGrid grid_c = R.control;
    if (cfg.partition_step >= grid_c.n_tau)
        throw ArgumentError("invert: partition_step must stay below the control sample count");
    const InteriorGrid grid = make_interior_grid(domain, R.T, grid_c.n_tau, grid_c.n_gamma);

    InversionResult res;
    ConnectingOperator C = connecting_from_response(R);
    res.diagnostics.c_symmetry_defect = C.symmetry_defect;
    res.diagnostics.lambda_min = C.eigenvalues(0);
    res.diagnostics.lambda_max = C.eigenvalues(C.eigenvalues.size() - 1);
    res.eigenvalues = C.eigenvalues;

    const OperatorMatrix C_half = psd_sqrt(C, cfg.spectral_floor, cfg.positivity_tol);
    res.diagnostics.retained_rank = C.retained_rank;

    const NestIndex nest = make_nest(grid.control_grid(), cfg.partition_step);
    const AmplitudeOperator A =
        amplitude_integral(C, C_half, nest, cfg.projection_rank_tol, cfg.band_derivative);
    res.diagnostics.isometry_defect = A.isometry_defect;
    res.diagnostics.range_defect = A.range_defect;
    res.diagnostics.partition_thresholds = A.partition;

    const OperatorMatrix W_rec = reconstruct_control(grid, A, C_half);
    res.controls = default_test_controls(grid.control_grid(), cfg.n_test_controls);
    res.sample_wave_rec.resize(grid.n_nodes(), static_cast<int>(res.controls.size()));
    for (std::size_t c = 0; c < res.controls.size(); ++c)
        res.sample_wave_rec.col(c) = W_rec.entries * to_flat(res.controls[c].f);

    if (cfg.calibration_passes <= 0) {
        res.potential = recover_potential(grid, W_rec, res.controls, cfg);
    } else {
        // Reference calibration: run the identical synthesis + reconstruction on
        // a known reference potential (free field first, then the recovered
        // field) and subtract its graph residual; the discretization
        // systematics shared by data and reference cancel.
        Eigen::VectorXd q_ref = Eigen::VectorXd::Zero(grid.n_nodes());
        for (int pass = 0; pass < cfg.calibration_passes; ++pass) {
            const PotentialField qp = potential_from_interior(grid, q_ref);
            const ResponseData R_ref = assemble_response(domain, qp, grid_c);
            ConnectingOperator C_ref = connecting_from_response(R_ref);
            const OperatorMatrix Ch_ref = psd_sqrt(C_ref, cfg.spectral_floor, cfg.positivity_tol);
            const AmplitudeOperator A_ref =
                amplitude_integral(C_ref, Ch_ref, nest, cfg.projection_rank_tol, cfg.band_derivative);
            const OperatorMatrix W_ref_rec = reconstruct_control(grid, A_ref, Ch_ref);
            res.potential =
                recover_potential_referenced(grid, W_rec, W_ref_rec, q_ref, res.controls, cfg);
            // next reference: recovered values, holes filled from the nearest
            // reliable depth at the same site
            for (int i = 0; i < grid.n_gamma; ++i) {
                for (int p = 0; p < grid.n_tau; ++p) {
                    const int id = grid.node(p, i);
                    if (res.potential.reliability_mask(id)) {
                        q_ref(id) = res.potential.values(id);
                        continue;
                    }
                    double v = 0.0;
                    for (int d = 1; d < grid.n_tau; ++d) {
                        const int lo = p - d, hi = p + d;
                        if (lo >= 0 && res.potential.reliability_mask(grid.node(lo, i))) {
                            v = res.potential.values(grid.node(lo, i));
                            break;
                        }
                        if (hi < grid.n_tau && res.potential.reliability_mask(grid.node(hi, i))) {
                            v = res.potential.values(grid.node(hi, i));
                            break;
                        }
                    }
                    q_ref(id) = v;
                }
            }
            // Conditioning keeps the feedback stable: outliers are clamped at
            // a robust scale and the reference is mollified hard.  Any
            // reference is unbiased (its own residual is subtracted exactly);
            // conditioning only trades cancellation quality for stability.
            {
                std::vector<double> vals;
                for (int id = 0; id < grid.n_nodes(); ++id)
                    if (res.potential.reliability_mask(id)) vals.push_back(q_ref(id));
                std::nth_element(vals.begin(), vals.begin() + vals.size() / 2, vals.end());
                const double med = vals[vals.size() / 2];
                for (double& v : vals) v = std::abs(v - med);
                std::nth_element(vals.begin(), vals.begin() + vals.size() / 2, vals.end());
                const double spread = 1.4826 * vals[vals.size() / 2] + 1e-12;
                for (int id = 0; id < grid.n_nodes(); ++id)
                    q_ref(id) = std::clamp(q_ref(id), med - 4.0 * spread, med + 4.0 * spread);
                q_ref = mollify_field(grid, q_ref, 2 * cfg.ls_smoothing_rounds);
            }
            res.diagnostics.notes.push_back("calibration pass " + std::to_string(pass + 1) +
                                            " complete");
        }
    }
    res.diagnostics.notes.push_back("pipeline completed");
    return res;
}

}  // namespace wavebc
