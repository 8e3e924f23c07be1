#ifndef WAVEBC_RUN_CONFIG_HPP
#define WAVEBC_RUN_CONFIG_HPP

#include <cstdint>
#include <string>

#include "wavebc/characterization.hpp"

namespace wavebc {

/// Parsed run configuration.  File format: UTF-8 `key = value` lines with
/// dotted section keys; '#' starts a comment; unknown keys are rejected.
struct RunConfig {
    // domain
    std::string domain_kind = "interval";
    double L_solver = 1.2;
    double h = 1.0 / 400.0;
    double rho = 1.0;
    double inner_wall_depth = 0.45;
    int n_angular = 64;
    int n_radial = 128;
    double dt_ratio = 0.9;

    // time / control
    double T = 0.8;
    int n_gamma = 1;
    int n_tau = 80;

    // potential
    std::string potential_kind = "zero";  // zero | constant | gaussian | file
    double potential_amplitude = 0.0;
    double potential_center = 0.0;  // depth of the gaussian center
    double potential_width = 0.1;
    std::string potential_file;

    // noise
    double noise_level = 0.0;
    std::uint64_t noise_seed = 12345;

    // nonlocal fixture
    bool nonlocal = false;
    double nonlocal_amplitude = 1.0;
    int nonlocal_rounds = 8;

    // flags
    bool deterministic = false;
    bool embed_oracle = false;
    std::string band_derivative_mode = "auto";  // auto | inverse | stencil

    CharacterizationConfig check;  // includes the inversion block

    DomainSpec make_domain() const;
    ControlGrid make_control_grid() const;
    /// Synthesis potential: extended by zero beyond depth T.
    PotentialField make_potential(const DomainSpec& domain) const;
    /// Validates invariants and resolves derived fields (band-derivative mode).
    void validate();
};

RunConfig parse_config_text(const std::string& text);
RunConfig parse_config_file(const std::string& path);
/// Canonical `key = value` echo; parse_config_text inverts it exactly.
std::string config_echo(const RunConfig& cfg);

}  // namespace wavebc

#endif
