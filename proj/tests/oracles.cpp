#include "oracles.hpp"

#include <algorithm>
#include <cmath>

namespace wavebc::oracles {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

double control_integral(const SmoothControlSpec& spec, double t) {
    const double a = spec.center_time - 0.5 * spec.width;
    const double b = spec.center_time + 0.5 * spec.width;
    const double hi = std::min(t, b);
    if (hi <= a) return 0.0;
    if (spec.shape == ControlShape::raised_cosine) {
        // antiderivative of amp/2 (1 + cos(2 pi (s - c)/w))
        const double k = 2.0 * kPi / spec.width;
        auto F = [&](double s) {
            return 0.5 * spec.amplitude *
                   ((s - spec.center_time) + std::sin(k * (s - spec.center_time)) / k);
        };
        return F(hi) - F(a);
    }
    const double sig = spec.width / 8.0;
    auto F = [&](double s) {
        return spec.amplitude * sig * std::sqrt(kPi / 2.0) *
               std::erf((s - spec.center_time) / (sig * std::sqrt(2.0)));
    };
    return F(hi) - F(a);
}

double dalembert_value(const SmoothControlSpec& spec, double x, double t) {
    return control_integral(spec, t - x);
}

std::vector<double> picard_trace_constant_q(const SmoothControlSpec& spec, double q,
                                            double t_end, int n_grid, int iterations) {
    // Fixed point of
    //   u(x,t) = u0(x,t) - q/2 int_0^t [ int_{|x-x'|<s} u + int_{x+x'<s} u ] dx' dt'
    // with s = t - t', on the half line x >= 0 (the second window is the image
    // source realizing the Neumann wall).
    const int n = n_grid;
    const double d = t_end / n;
    std::vector<std::vector<double>> u0(n + 1, std::vector<double>(n + 1));
    for (int m = 0; m <= n; ++m)
        for (int i = 0; i <= n; ++i) u0[m][i] = dalembert_value(spec, i * d, m * d);
    std::vector<std::vector<double>> u = u0;
    std::vector<std::vector<double>> prefix(n + 1, std::vector<double>(n + 1));

    for (int it = 0; it < iterations; ++it) {
        for (int j = 0; j <= n; ++j) {
            prefix[j][0] = 0.0;
            for (int i = 1; i <= n; ++i)
                prefix[j][i] = prefix[j][i - 1] + 0.5 * d * (u[j][i - 1] + u[j][i]);
        }
        auto window = [&](int j, double a, double b) {
            a = std::max(a, 0.0);
            b = std::min(b, n * d);
            if (b <= a) return 0.0;
            auto P = [&](double x) {
                const double r = x / d;
                const int k = std::min(static_cast<int>(r), n - 1);
                const double w = r - k;
                return (1.0 - w) * prefix[j][k] + w * prefix[j][k + 1];
            };
            return P(b) - P(a);
        };
        std::vector<std::vector<double>> next = u0;
        for (int m = 1; m <= n; ++m) {
            for (int j = 0; j <= m; ++j) {
                const double wj = (j == 0 || j == m) ? 0.5 : 1.0;  // trapezoid in t'
                const double s = (m - j) * d;
                if (s <= 0.0) continue;
                for (int i = 0; i <= n; ++i) {
                    const double x = i * d;
                    const double both = window(j, x - s, x + s) + window(j, 0.0, s - x);
                    next[m][i] -= 0.5 * q * wj * d * both;
                }
            }
        }
        u = std::move(next);
    }
    std::vector<double> trace(n + 1);
    for (int m = 0; m <= n; ++m) trace[m] = u[m][0];
    return trace;
}

double quad_midpoint(const std::function<double(double)>& f, double a, double b, int n) {
    double acc = 0.0;
    const double h = (b - a) / n;
    for (int i = 0; i < n; ++i) acc += f(a + (i + 0.5) * h);
    return acc * h;
}

}  // namespace wavebc::oracles
