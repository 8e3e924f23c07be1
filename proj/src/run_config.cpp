#include "wavebc/run_config.hpp"

#include <cctype>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace wavebc {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

double parse_double(const std::string& v, int line) {
    std::size_t pos = 0;
    double x;
    try {
        x = std::stod(v, &pos);
    } catch (...) {
        throw ConfigParseError("expected a number, got '" + v + "'", line);
    }
    if (pos != v.size()) throw ConfigParseError("trailing characters after number '" + v + "'", line);
    return x;
}

int parse_int(const std::string& v, int line) {
    const double x = parse_double(v, line);
    const int i = static_cast<int>(x);
    if (x != i) throw ConfigParseError("expected an integer, got '" + v + "'", line);
    return i;
}

std::uint64_t parse_u64(const std::string& v, int line) {
    try {
        return std::stoull(v);
    } catch (...) {
        throw ConfigParseError("expected an unsigned integer, got '" + v + "'", line);
    }
}

bool parse_bool(const std::string& v, int line) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw ConfigParseError("expected true/false, got '" + v + "'", line);
}

std::string fmt_num(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

}  // namespace

RunConfig parse_config_text(const std::string& text) {
    RunConfig c;
    using Setter = std::function<void(RunConfig&, const std::string&, int)>;
    static const std::map<std::string, Setter> setters = {
        {"domain.kind", [](RunConfig& c, const std::string& v, int l) {
             if (v != "interval" && v != "disc") throw ConfigParseError("unknown domain.kind '" + v + "'", l);
             c.domain_kind = v;
         }},
        {"domain.L_solver", [](RunConfig& c, const std::string& v, int l) { c.L_solver = parse_double(v, l); }},
        {"domain.h", [](RunConfig& c, const std::string& v, int l) { c.h = parse_double(v, l); }},
        {"domain.rho", [](RunConfig& c, const std::string& v, int l) { c.rho = parse_double(v, l); }},
        {"domain.inner_wall_depth", [](RunConfig& c, const std::string& v, int l) { c.inner_wall_depth = parse_double(v, l); }},
        {"domain.n_angular", [](RunConfig& c, const std::string& v, int l) { c.n_angular = parse_int(v, l); }},
        {"domain.n_radial", [](RunConfig& c, const std::string& v, int l) { c.n_radial = parse_int(v, l); }},
        {"time.T", [](RunConfig& c, const std::string& v, int l) { c.T = parse_double(v, l); }},
        {"time.dt_ratio", [](RunConfig& c, const std::string& v, int l) { c.dt_ratio = parse_double(v, l); }},
        {"control.n_gamma", [](RunConfig& c, const std::string& v, int l) { c.n_gamma = parse_int(v, l); }},
        {"control.n_tau", [](RunConfig& c, const std::string& v, int l) { c.n_tau = parse_int(v, l); }},
        {"potential.kind", [](RunConfig& c, const std::string& v, int l) {
             if (v != "zero" && v != "constant" && v != "gaussian" && v != "file")
                 throw ConfigParseError("unknown potential.kind '" + v + "'", l);
             c.potential_kind = v;
         }},
        {"potential.amplitude", [](RunConfig& c, const std::string& v, int l) { c.potential_amplitude = parse_double(v, l); }},
        {"potential.center", [](RunConfig& c, const std::string& v, int l) { c.potential_center = parse_double(v, l); }},
        {"potential.width", [](RunConfig& c, const std::string& v, int l) { c.potential_width = parse_double(v, l); }},
        {"potential.file", [](RunConfig& c, const std::string& v, int) { c.potential_file = v; }},
        {"noise.level", [](RunConfig& c, const std::string& v, int l) { c.noise_level = parse_double(v, l); }},
        {"noise.seed", [](RunConfig& c, const std::string& v, int l) { c.noise_seed = parse_u64(v, l); }},
        {"nonlocal.enabled", [](RunConfig& c, const std::string& v, int l) { c.nonlocal = parse_bool(v, l); }},
        {"nonlocal.amplitude", [](RunConfig& c, const std::string& v, int l) { c.nonlocal_amplitude = parse_double(v, l); }},
        {"nonlocal.rounds", [](RunConfig& c, const std::string& v, int l) { c.nonlocal_rounds = parse_int(v, l); }},
        {"mode.deterministic", [](RunConfig& c, const std::string& v, int l) { c.deterministic = parse_bool(v, l); }},
        {"mode.embed_oracle", [](RunConfig& c, const std::string& v, int l) { c.embed_oracle = parse_bool(v, l); }},
        {"inversion.partition_step", [](RunConfig& c, const std::string& v, int l) { c.check.inversion.partition_step = parse_int(v, l); }},
        {"inversion.spectral_floor", [](RunConfig& c, const std::string& v, int l) { c.check.inversion.spectral_floor = parse_double(v, l); }},
        {"inversion.positivity_tol", [](RunConfig& c, const std::string& v, int l) { c.check.inversion.positivity_tol = parse_double(v, l); }},
        {"inversion.projection_rank_tol", [](RunConfig& c, const std::string& v, int l) { c.check.inversion.projection_rank_tol = parse_double(v, l); }},
        {"inversion.denom_threshold", [](RunConfig& c, const std::string& v, int l) { c.check.inversion.denom_threshold = parse_double(v, l); }},
        {"inversion.margin_gamma", [](RunConfig& c, const std::string& v, int l) { c.check.inversion.margin_gamma = parse_double(v, l); }},
        {"inversion.margin_T", [](RunConfig& c, const std::string& v, int l) { c.check.inversion.margin_T = parse_double(v, l); }},
        {"inversion.n_test_controls", [](RunConfig& c, const std::string& v, int l) { c.check.inversion.n_test_controls = parse_int(v, l); }},
        {"inversion.ls_smoothing_rounds", [](RunConfig& c, const std::string& v, int l) { c.check.inversion.ls_smoothing_rounds = parse_int(v, l); }},
        {"inversion.wave_smoothing_rounds", [](RunConfig& c, const std::string& v, int l) { c.check.inversion.wave_smoothing_rounds = parse_int(v, l); }},
        {"inversion.calibration_passes", [](RunConfig& c, const std::string& v, int l) { c.check.inversion.calibration_passes = parse_int(v, l); }},
        {"inversion.band_derivative", [](RunConfig& c, const std::string& v, int l) {
             if (v != "auto" && v != "inverse" && v != "stencil")
                 throw ConfigParseError("unknown inversion.band_derivative '" + v + "'", l);
             c.band_derivative_mode = v;
         }},
        {"check.tol1_sym", [](RunConfig& c, const std::string& v, int l) { c.check.tol1_sym = parse_double(v, l); }},
        {"check.tol1_shift", [](RunConfig& c, const std::string& v, int l) { c.check.tol1_shift = parse_double(v, l); }},
        {"check.tol1_jcomm", [](RunConfig& c, const std::string& v, int l) { c.check.tol1_jcomm = parse_double(v, l); }},
        {"check.tol2_sym", [](RunConfig& c, const std::string& v, int l) { c.check.tol2_sym = parse_double(v, l); }},
        {"check.tol2_positivity", [](RunConfig& c, const std::string& v, int l) { c.check.tol2_positivity = parse_double(v, l); }},
        {"check.tol3_isometry", [](RunConfig& c, const std::string& v, int l) { c.check.tol3_isometry = parse_double(v, l); }},
        {"check.tol4_ratio", [](RunConfig& c, const std::string& v, int l) { c.check.tol4_ratio = parse_double(v, l); }},
        {"check.tol5_flux", [](RunConfig& c, const std::string& v, int l) { c.check.tol5_flux = parse_double(v, l); }},
        {"check.tol6_controllability", [](RunConfig& c, const std::string& v, int l) { c.check.tol6_controllability = parse_double(v, l); }},
        {"check.tol7_qmax", [](RunConfig& c, const std::string& v, int l) { c.check.tol7_qmax = parse_double(v, l); }},
        {"check.tol_commutator", [](RunConfig& c, const std::string& v, int l) { c.check.tol_commutator = parse_double(v, l); }},
        {"check.n_shift_lags", [](RunConfig& c, const std::string& v, int l) { c.check.n_shift_lags = parse_int(v, l); }},
        {"check.n_sigma_pairs", [](RunConfig& c, const std::string& v, int l) { c.check.n_sigma_pairs = parse_int(v, l); }},
        {"check.seed", [](RunConfig& c, const std::string& v, int l) { c.check.seed = parse_u64(v, l); }},
    };

    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) throw ConfigParseError("missing '=' in '" + line + "'", line_no);
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        const auto it = setters.find(key);
        if (it == setters.end()) throw ConfigParseError("unknown key '" + key + "'", line_no);
        it->second(c, value, line_no);
    }
    c.validate();
    return c;
}

RunConfig parse_config_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigParseError("cannot open config file '" + path + "'", 0);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str());
}

std::string config_echo(const RunConfig& c) {
    std::ostringstream os;
    os << "domain.kind = " << c.domain_kind << "\n";
    if (c.domain_kind == "interval") {
        os << "domain.L_solver = " << fmt_num(c.L_solver) << "\n";
        os << "domain.h = " << fmt_num(c.h) << "\n";
    } else {
        os << "domain.rho = " << fmt_num(c.rho) << "\n";
        os << "domain.inner_wall_depth = " << fmt_num(c.inner_wall_depth) << "\n";
        os << "domain.n_angular = " << c.n_angular << "\n";
        os << "domain.n_radial = " << c.n_radial << "\n";
        os << "time.dt_ratio = " << fmt_num(c.dt_ratio) << "\n";
    }
    os << "time.T = " << fmt_num(c.T) << "\n";
    os << "control.n_gamma = " << c.n_gamma << "\n";
    os << "control.n_tau = " << c.n_tau << "\n";
    os << "potential.kind = " << c.potential_kind << "\n";
    os << "potential.amplitude = " << fmt_num(c.potential_amplitude) << "\n";
    os << "potential.center = " << fmt_num(c.potential_center) << "\n";
    os << "potential.width = " << fmt_num(c.potential_width) << "\n";
    if (!c.potential_file.empty()) os << "potential.file = " << c.potential_file << "\n";
    os << "noise.level = " << fmt_num(c.noise_level) << "\n";
    os << "noise.seed = " << c.noise_seed << "\n";
    os << "nonlocal.enabled = " << (c.nonlocal ? "true" : "false") << "\n";
    os << "nonlocal.amplitude = " << fmt_num(c.nonlocal_amplitude) << "\n";
    os << "nonlocal.rounds = " << c.nonlocal_rounds << "\n";
    os << "mode.deterministic = " << (c.deterministic ? "true" : "false") << "\n";
    os << "mode.embed_oracle = " << (c.embed_oracle ? "true" : "false") << "\n";
    os << "inversion.partition_step = " << c.check.inversion.partition_step << "\n";
    os << "inversion.spectral_floor = " << fmt_num(c.check.inversion.spectral_floor) << "\n";
    os << "inversion.positivity_tol = " << fmt_num(c.check.inversion.positivity_tol) << "\n";
    os << "inversion.projection_rank_tol = " << fmt_num(c.check.inversion.projection_rank_tol) << "\n";
    os << "inversion.denom_threshold = " << fmt_num(c.check.inversion.denom_threshold) << "\n";
    os << "inversion.margin_gamma = " << fmt_num(c.check.inversion.margin_gamma) << "\n";
    os << "inversion.margin_T = " << fmt_num(c.check.inversion.margin_T) << "\n";
    os << "inversion.n_test_controls = " << c.check.inversion.n_test_controls << "\n";
    os << "inversion.ls_smoothing_rounds = " << c.check.inversion.ls_smoothing_rounds << "\n";
    os << "inversion.wave_smoothing_rounds = " << c.check.inversion.wave_smoothing_rounds << "\n";
    os << "inversion.calibration_passes = " << c.check.inversion.calibration_passes << "\n";
    os << "inversion.band_derivative = "
       << (c.check.inversion.band_derivative == BandDerivative::exact_inverse ? "inverse" : "stencil")
       << "\n";
    os << "check.tol1_sym = " << fmt_num(c.check.tol1_sym) << "\n";
    os << "check.tol1_shift = " << fmt_num(c.check.tol1_shift) << "\n";
    os << "check.tol1_jcomm = " << fmt_num(c.check.tol1_jcomm) << "\n";
    os << "check.tol2_sym = " << fmt_num(c.check.tol2_sym) << "\n";
    os << "check.tol2_positivity = " << fmt_num(c.check.tol2_positivity) << "\n";
    os << "check.tol3_isometry = " << fmt_num(c.check.tol3_isometry) << "\n";
    os << "check.tol4_ratio = " << fmt_num(c.check.tol4_ratio) << "\n";
    os << "check.tol5_flux = " << fmt_num(c.check.tol5_flux) << "\n";
    os << "check.tol6_controllability = " << fmt_num(c.check.tol6_controllability) << "\n";
    os << "check.tol7_qmax = " << fmt_num(c.check.tol7_qmax) << "\n";
    os << "check.tol_commutator = " << fmt_num(c.check.tol_commutator) << "\n";
    os << "check.n_shift_lags = " << c.check.n_shift_lags << "\n";
    os << "check.n_sigma_pairs = " << c.check.n_sigma_pairs << "\n";
    os << "check.seed = " << c.check.seed << "\n";
    return os.str();
}

DomainSpec RunConfig::make_domain() const {
    if (domain_kind == "interval") return make_interval_domain(L_solver, h);
    return make_disc_domain(rho, inner_wall_depth, n_angular, n_radial, dt_ratio);
}

ControlGrid RunConfig::make_control_grid() const {
    const DomainSpec d = make_domain();
    const InteriorGrid grid = make_interior_grid(d, T, n_tau, n_gamma);
    return grid.control_grid();
}

PotentialField RunConfig::make_potential(const DomainSpec& domain) const {
    PotentialField q;
    if (potential_kind == "zero") {
        q = make_zero_potential(domain);
    } else if (potential_kind == "constant") {
        q = make_constant_potential(domain, potential_amplitude);
    } else if (potential_kind == "gaussian") {
        q = make_gaussian_potential(domain, potential_amplitude, potential_center, potential_width);
    } else {
        std::ifstream in(potential_file, std::ios::binary);
        if (!in) throw ConfigurationError("cannot open potential file '" + potential_file + "'");
        const int n = solver_node_count(domain);
        q.values.resize(n);
        in.read(reinterpret_cast<char*>(q.values.data()), n * sizeof(double));
        if (in.gcount() != static_cast<std::streamsize>(n * sizeof(double)))
            throw ConfigurationError("potential file shorter than the solver grid");
    }
    zero_beyond_depth(domain, q, T);
    return q;
}

void RunConfig::validate() {
    if (T <= 0.0) throw ConfigurationError("time.T must be positive");
    if (n_tau < 4) throw ConfigurationError("control.n_tau must be at least 4");
    if (n_gamma < 1) throw ConfigurationError("control.n_gamma must be positive");
    if (domain_kind == "interval" && n_gamma != 1)
        throw ConfigurationError("interval runs use a single boundary site");
    if (domain_kind == "disc" && n_angular % n_gamma != 0)
        throw ConfigurationError("domain.n_angular must be a multiple of control.n_gamma");
    if (noise_level < 0.0) throw ConfigurationError("noise.level must be nonnegative");
    make_domain().require_valid_horizon(T);
    if (band_derivative_mode == "inverse") {
        check.inversion.band_derivative = BandDerivative::exact_inverse;
    } else if (band_derivative_mode == "stencil") {
        check.inversion.band_derivative = BandDerivative::edge_stencils;
    } else {
        // sharp fronts on the interval (unit Courant), smeared fronts on the disc
        check.inversion.band_derivative = (domain_kind == "interval")
                                              ? BandDerivative::exact_inverse
                                              : BandDerivative::edge_stencils;
    }
    check.inversion.validate(T);
    if (check.inversion.partition_step >= n_tau)
        throw ConfigurationError("inversion.partition_step must stay below control.n_tau");
}

}  // namespace wavebc
