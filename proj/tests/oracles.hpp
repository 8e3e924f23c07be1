#ifndef WAVEBC_TESTS_ORACLES_HPP
#define WAVEBC_TESTS_ORACLES_HPP

#include <functional>
#include <vector>

#include "wavebc/trace_spaces.hpp"

// Independent reference computations for the test suites.  Everything here is
// derived from closed forms or from quadrature of integral equations; nothing
// calls back into the solver or inversion paths it checks.
namespace wavebc::oracles {

/// Closed-form antiderivative of a smooth control shape at time t.
double control_integral(const SmoothControlSpec& spec, double t);

/// d'Alembert half-line solution with Neumann flux f at x = 0 and q = 0:
/// u(x, t) = (Jf)(t - x).
double dalembert_value(const SmoothControlSpec& spec, double x, double t);

/// Trace u(0, t) for a constant potential on the half line, by fixed-point
/// iteration of the Duhamel integral equation on the exact d'Alembert
/// propagator (image source for the Neumann wall).
std::vector<double> picard_trace_constant_q(const SmoothControlSpec& spec, double q,
                                            double t_end, int n_grid, int iterations);

/// Composite-midpoint quadrature of a smooth function on [a, b].
double quad_midpoint(const std::function<double(double)>& f, double a, double b, int n);

}  // namespace wavebc::oracles

#endif
