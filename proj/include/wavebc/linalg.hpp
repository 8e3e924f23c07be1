#ifndef WAVEBC_LINALG_HPP
#define WAVEBC_LINALG_HPP

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "wavebc/errors.hpp"

namespace wavebc {

/// Symmetric eigendecomposition with a deterministic jitter retry: the QL
/// iteration can fail on spectra with large near-degenerate clusters, and a
/// relative diagonal perturbation of 1e-13 breaks the ties without moving any
/// eigenvalue beyond rounding.
inline Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> symmetric_eigen(const Eigen::MatrixXd& M) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
    if (es.info() == Eigen::Success) return es;
    const double scale = M.norm() / std::max<Eigen::Index>(1, M.rows());
    Eigen::MatrixXd J = M;
    for (int attempt = 1; attempt <= 2; ++attempt) {
        const double eps = scale * 1e-13 * attempt;
        for (Eigen::Index i = 0; i < J.rows(); ++i) J(i, i) += eps * ((i % 7) + 1);
        es.compute(J);
        if (es.info() == Eigen::Success) return es;
    }
    throw ConfigurationError("symmetric_eigen: eigendecomposition failed to converge");
}

/// Spectral norm of a symmetric matrix.
inline double symmetric_spectral_norm(const Eigen::MatrixXd& M) {
    const auto es = symmetric_eigen(M);
    const auto& ev = es.eigenvalues();
    return std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1)));
}

/// Spectral norm of a general matrix via the Gram spectrum.
inline double spectral_norm(const Eigen::MatrixXd& M) {
    return std::sqrt(std::max(0.0, symmetric_eigen(M.transpose() * M).eigenvalues().maxCoeff()));
}

}  // namespace wavebc

#endif
