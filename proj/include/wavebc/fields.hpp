#ifndef WAVEBC_FIELDS_HPP
#define WAVEBC_FIELDS_HPP

#include <Eigen/Dense>
#include <string>

#include "wavebc/errors.hpp"

namespace wavebc {

// Time samples are cell-centered: t_k = (k + 1/2) * dt, k = 0..n_tau-1, so that
// n_tau * dt equals the horizon and time reversal about the horizon midpoint maps
// sample k to sample n_tau-1-k without interpolation.  Quadrature in time is the
// midpoint rule (uniform weight dt); on the boundary it is the exact linear/arc
// measure carried per site in gamma_weights.

/// Discretization of the boundary cylinder Gamma x [0, horizon).
struct ControlGrid {
    int n_tau = 0;
    int n_gamma = 0;
    double dt = 0.0;
    Eigen::VectorXd gamma_coords;   // boundary coordinate per site (angle for the disc)
    Eigen::VectorXd gamma_weights;  // boundary measure per site

    double horizon() const { return n_tau * dt; }
    double t_sample(int k) const { return (k + 0.5) * dt; }
    int flat_size() const { return n_tau * n_gamma; }

    /// Same boundary sites, doubled time horizon.
    ControlGrid doubled() const {
        ControlGrid g = *this;
        g.n_tau = 2 * n_tau;
        return g;
    }
};

/// Element of an outer space: samples on Gamma x [0, horizon) with quadrature weights.
struct BoundaryTimeField {
    Eigen::MatrixXd values;         // n_tau x n_gamma
    double horizon = 0.0;
    double dt_control = 0.0;
    Eigen::VectorXd gamma_weights;  // per-site boundary measure

    int n_tau() const { return static_cast<int>(values.rows()); }
    int n_gamma() const { return static_cast<int>(values.cols()); }
    double t_sample(int k) const { return (k + 0.5) * dt_control; }
    double quadrature_weight(int /*k*/, int j) const { return dt_control * gamma_weights(j); }
};

/// Element of an inner space: samples on the interior grid with cell-volume weights.
struct InteriorField {
    Eigen::VectorXd values;
    Eigen::VectorXd weights;  // cell volumes, same length as values
};

inline BoundaryTimeField make_field(const ControlGrid& g) {
    BoundaryTimeField f;
    f.values = Eigen::MatrixXd::Zero(g.n_tau, g.n_gamma);
    f.horizon = g.horizon();
    f.dt_control = g.dt;
    f.gamma_weights = g.gamma_weights;
    return f;
}

inline void require_same_shape(const BoundaryTimeField& a, const BoundaryTimeField& b,
                               const char* where) {
    if (a.n_tau() != b.n_tau() || a.n_gamma() != b.n_gamma())
        throw DimensionError(std::string(where) + ": field shapes differ");
}

/// L2(Sigma) inner product under the sample quadrature.
inline double inner_product(const BoundaryTimeField& f, const BoundaryTimeField& g) {
    require_same_shape(f, g, "inner_product");
    double acc = 0.0;
    for (int j = 0; j < f.n_gamma(); ++j)
        acc += f.gamma_weights(j) * f.values.col(j).dot(g.values.col(j));
    return acc * f.dt_control;
}

inline double norm(const BoundaryTimeField& f) {
    return std::sqrt(std::max(0.0, inner_product(f, f)));
}

/// L2(Omega) inner product under cell-volume weights.
inline double inner_product(const InteriorField& y, const InteriorField& v) {
    if (y.values.size() != v.values.size())
        throw DimensionError("inner_product: interior field sizes differ");
    return (y.values.array() * v.values.array() * y.weights.array()).sum();
}

inline double norm(const InteriorField& y) {
    return std::sqrt(std::max(0.0, inner_product(y, y)));
}

// Flattened layout for operator matrices: index = k * n_gamma + j (time-major).

inline Eigen::VectorXd to_flat(const BoundaryTimeField& f) {
    Eigen::VectorXd v(f.n_tau() * f.n_gamma());
    for (int k = 0; k < f.n_tau(); ++k)
        for (int j = 0; j < f.n_gamma(); ++j) v(k * f.n_gamma() + j) = f.values(k, j);
    return v;
}

inline BoundaryTimeField from_flat(const ControlGrid& g, const Eigen::VectorXd& v) {
    if (v.size() != g.flat_size()) throw DimensionError("from_flat: size mismatch");
    BoundaryTimeField f = make_field(g);
    for (int k = 0; k < g.n_tau; ++k)
        for (int j = 0; j < g.n_gamma; ++j) f.values(k, j) = v(k * g.n_gamma + j);
    return f;
}

/// Diagonal of the quadrature weight matrix on the flattened control grid.
inline Eigen::VectorXd flat_quadrature(const ControlGrid& g) {
    Eigen::VectorXd w(g.flat_size());
    for (int k = 0; k < g.n_tau; ++k)
        for (int j = 0; j < g.n_gamma; ++j) w(k * g.n_gamma + j) = g.dt * g.gamma_weights(j);
    return w;
}

/// Space descriptor for operator matrices.
struct SpaceTag {
    enum class Kind { outer, inner };
    Kind kind = Kind::outer;
    int size = 0;          // flattened dimension
    double horizon = 0.0;  // outer spaces only

    static SpaceTag outer(const ControlGrid& g) { return {Kind::outer, g.flat_size(), g.horizon()}; }
    static SpaceTag inner(int n_nodes) { return {Kind::inner, n_nodes, 0.0}; }
    bool operator==(const SpaceTag&) const = default;
};

/// Dense matrix between tagged spaces.
struct OperatorMatrix {
    Eigen::MatrixXd entries;
    SpaceTag domain;
    SpaceTag codomain;

    void check() const {
        if (entries.rows() != codomain.size || entries.cols() != domain.size)
            throw DimensionError("OperatorMatrix: entry dimensions do not match space tags");
    }
};

}  // namespace wavebc

#endif
