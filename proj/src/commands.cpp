#include "wavebc/commands.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "json.hpp"

#include "wavebc/dataset.hpp"
#include "wavebc/plot.hpp"

namespace fs = std::filesystem;

namespace wavebc {

namespace {

std::string fmt(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return buf;
}

void atomic_write_text(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        f.write(content.data(), static_cast<std::streamsize>(content.size()));
    }
    fs::rename(tmp, path);
}

int classify_exception() {
    try {
        throw;
    } catch (const ConfigParseError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const DatasetError& e) {
        std::cerr << "dataset error: " << e.what() << "\n";
        return kExitDataInvalid;
    } catch (const NotPsdError& e) {
        std::cerr << "numerical abort: " << e.what() << "\n";
        return kExitNumericalAbort;
    } catch (const DegenerateConfigurationError& e) {
        std::cerr << "numerical abort: " << e.what() << "\n";
        return kExitNumericalAbort;
    } catch (const ConfigurationError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const DimensionError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitDataInvalid;
    } catch (const std::invalid_argument& e) {
        std::cerr << "argument error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumericalAbort;
    }
}

// Relative L2 error over the reliable region; absolute when the truth is tiny.
struct ErrorSummary {
    double rel_l2 = 0.0;
    double abs_l2 = 0.0;
    double truth_norm = 0.0;
    bool relative_meaningful = false;
};

ErrorSummary error_summary(const InteriorGrid& grid, const Eigen::VectorXd& q_rec,
                           const Eigen::Array<bool, Eigen::Dynamic, 1>& mask,
                           const Eigen::VectorXd& q_true) {
    double num = 0.0, den = 0.0;
    for (int id = 0; id < grid.n_nodes(); ++id) {
        if (!mask(id)) continue;
        const double w = grid.cell_volume(id);
        num += w * std::pow(q_rec(id) - q_true(id), 2);
        den += w * q_true(id) * q_true(id);
    }
    ErrorSummary s;
    s.abs_l2 = std::sqrt(num);
    s.truth_norm = std::sqrt(den);
    s.relative_meaningful = s.truth_norm > 1e-8;
    s.rel_l2 = s.relative_meaningful ? s.abs_l2 / s.truth_norm : 0.0;
    return s;
}

}  // namespace

int cmd_simulate(const SimulateOptions& opt) {
    try {
        RunConfig cfg = parse_config_file(opt.config_path);
        if (opt.noise) cfg.noise_level = *opt.noise;
        if (opt.seed) cfg.noise_seed = *opt.seed;
        if (opt.nonlocal) cfg.nonlocal = true;
        if (opt.deterministic) cfg.deterministic = true;
        cfg.validate();

        const DomainSpec domain = cfg.make_domain();
        const ControlGrid control = cfg.make_control_grid();

        ResponseData R;
        if (cfg.nonlocal) {
            R = assemble_response_nonlocal(
                domain, NonlocalStencil{cfg.nonlocal_amplitude, cfg.nonlocal_rounds}, control);
        } else {
            const PotentialField q = cfg.make_potential(domain);
            R = assemble_response(domain, q, control);
        }
        if (cfg.noise_level > 0.0) add_relative_noise(R, cfg.noise_level, cfg.noise_seed);

        DatasetContainer ds = dataset_from_response(cfg, R);
        const InteriorGrid grid = make_interior_grid(domain, cfg.T, cfg.n_tau, cfg.n_gamma);
        if (!cfg.nonlocal) {
            const PotentialField q = cfg.make_potential(domain);
            const InteriorField qi = restrict_potential_to_grid(grid, q);
            ds.add("q_true_interior", {static_cast<std::uint64_t>(grid.n_nodes())}, qi.values);
            if (cfg.embed_oracle) {
                const OperatorMatrix W = reference_control_matrix(grid, q);
                Eigen::VectorXd flat(W.entries.size());
                for (int r = 0; r < W.entries.rows(); ++r)
                    for (int c = 0; c < W.entries.cols(); ++c)
                        flat(static_cast<Eigen::Index>(r) * W.entries.cols() + c) = W.entries(r, c);
                ds.add("oracle_W", {static_cast<std::uint64_t>(W.entries.rows()),
                                    static_cast<std::uint64_t>(W.entries.cols())},
                       std::move(flat));
            }
        }
        write_dataset(opt.out_path, ds);
        std::cout << "wrote " << opt.out_path << "\n";
        return kExitOk;
    } catch (...) {
        return classify_exception();
    }
}

int cmd_invert(const InvertOptions& opt) {
    try {
        const DatasetContainer ds = read_dataset(opt.data_path);
        RunConfig cfg;
        const ResponseData R = response_from_dataset(ds, cfg);
        if (opt.spectral_floor) cfg.check.inversion.spectral_floor = *opt.spectral_floor;
        if (opt.partition_step) cfg.check.inversion.partition_step = *opt.partition_step;
        const InversionConfig& icfg = cfg.check.inversion;
        icfg.validate(R.T);

        const DomainSpec domain = cfg.make_domain();
        const InteriorGrid grid = make_interior_grid(domain, R.T, cfg.n_tau, cfg.n_gamma);
        const InversionResult res = invert(domain, R, icfg);

        fs::create_directories(opt.out_dir);
        DatasetContainer out;
        std::string manifest = config_echo(cfg);
        manifest += "result.c_symmetry_defect = " + fmt(res.diagnostics.c_symmetry_defect) + "\n";
        manifest += "result.lambda_min = " + fmt(res.diagnostics.lambda_min) + "\n";
        manifest += "result.lambda_max = " + fmt(res.diagnostics.lambda_max) + "\n";
        manifest += "result.retained_rank = " + std::to_string(res.diagnostics.retained_rank) + "\n";
        manifest += "result.isometry_defect = " + fmt(res.diagnostics.isometry_defect) + "\n";
        out.manifest = manifest;

        const int n = grid.n_nodes();
        out.add("q_rec", {static_cast<std::uint64_t>(n)}, res.potential.values);
        Eigen::VectorXd mask(n);
        for (int i = 0; i < n; ++i) mask(i) = res.potential.reliability_mask(i) ? 1.0 : 0.0;
        out.add("mask", {static_cast<std::uint64_t>(n)}, mask);
        out.add("eigenvalues", {static_cast<std::uint64_t>(res.eigenvalues.size())},
                res.eigenvalues);

        // Isometry defect across partition coarsenings, for the defect plot.
        {
            ConnectingOperator C = connecting_from_response(R);
            const OperatorMatrix C_half = psd_sqrt(C, icfg.spectral_floor, icfg.positivity_tol);
            std::vector<double> rows;
            for (int factor : {4, 2, 1}) {
                const int step = icfg.partition_step * factor;
                if (R.control.n_tau % step != 0) continue;
                const NestIndex nest = make_nest(grid.control_grid(), step);
                const AmplitudeOperator A = amplitude_integral(C, C_half, nest,
                                                               icfg.projection_rank_tol,
                                                               icfg.band_derivative);
                rows.push_back(step * R.control.dt);
                rows.push_back(A.isometry_defect);
            }
            Eigen::VectorXd arr(rows.size());
            for (std::size_t i = 0; i < rows.size(); ++i) arr(i) = rows[i];
            out.add("defect_vs_partition", {rows.size() / 2, 2}, arr);
        }

        {
            Eigen::VectorXd flat(res.sample_wave_rec.size());
            for (int c = 0; c < res.sample_wave_rec.cols(); ++c)
                for (int r = 0; r < res.sample_wave_rec.rows(); ++r)
                    flat(static_cast<Eigen::Index>(c) * res.sample_wave_rec.rows() + r) =
                        res.sample_wave_rec(r, c);
            out.add("wave_rec", {static_cast<std::uint64_t>(res.sample_wave_rec.cols()),
                                 static_cast<std::uint64_t>(res.sample_wave_rec.rows())},
                    std::move(flat));
        }
        if (ds.has("oracle_W")) {
            const NamedArray& Wa = ds.get("oracle_W");
            if (Wa.dims.size() != 2 || static_cast<int>(Wa.dims[0]) != n)
                throw DatasetError("oracle_W dimensions do not match the interior grid");
            Eigen::MatrixXd Wref(n, static_cast<int>(Wa.dims[1]));
            for (int r = 0; r < Wref.rows(); ++r)
                for (int c = 0; c < Wref.cols(); ++c)
                    Wref(r, c) = Wa.data(static_cast<Eigen::Index>(r) * Wref.cols() + c);
            Eigen::VectorXd flat(static_cast<Eigen::Index>(res.controls.size()) * n);
            for (std::size_t c = 0; c < res.controls.size(); ++c)
                flat.segment(static_cast<Eigen::Index>(c) * n, n) =
                    Wref * to_flat(res.controls[c].f);
            out.add("wave_ref", {res.controls.size(), static_cast<std::uint64_t>(n)},
                    std::move(flat));
        }

        std::string summary;
        if (ds.has("q_true_interior")) {
            const Eigen::VectorXd q_true = ds.get("q_true_interior").data;
            out.add("q_true", {static_cast<std::uint64_t>(n)}, q_true);
            const ErrorSummary es =
                error_summary(grid, res.potential.values, res.potential.reliability_mask, q_true);
            if (es.relative_meaningful)
                summary += "relative_l2_error = " + fmt(es.rel_l2) + "\n";
            summary += "absolute_l2_error = " + fmt(es.abs_l2) + "\n";
            summary += "truth_norm = " + fmt(es.truth_norm) + "\n";
        } else {
            summary += "no true potential in dataset; error summary omitted\n";
        }
        summary += "n_reliable = " + std::to_string(res.potential.residual_stats.n_reliable) + "\n";
        summary +=
            "n_masked_margin = " + std::to_string(res.potential.residual_stats.n_masked_margin) + "\n";
        summary += "n_masked_denominator = " +
                   std::to_string(res.potential.residual_stats.n_masked_denominator) + "\n";

        std::string diag;
        diag += "c_symmetry_defect = " + fmt(res.diagnostics.c_symmetry_defect) + "\n";
        diag += "lambda_min = " + fmt(res.diagnostics.lambda_min) + "\n";
        diag += "lambda_max = " + fmt(res.diagnostics.lambda_max) + "\n";
        diag += "retained_rank = " + std::to_string(res.diagnostics.retained_rank) + "\n";
        diag += "isometry_defect = " + fmt(res.diagnostics.isometry_defect) + "\n";
        diag += "range_defect = " + fmt(res.diagnostics.range_defect) + "\n";
        diag += "mean_ls_residual = " + fmt(res.potential.residual_stats.mean_ls_residual) + "\n";
        for (const std::string& note : res.diagnostics.notes) diag += "note: " + note + "\n";

        write_dataset((fs::path(opt.out_dir) / "result.rbc").string(), out);
        atomic_write_text((fs::path(opt.out_dir) / "summary.txt").string(), summary);
        atomic_write_text((fs::path(opt.out_dir) / "diagnostics.txt").string(), diag);
        std::cout << summary;
        return kExitOk;
    } catch (...) {
        return classify_exception();
    }
}

int cmd_check(const CheckOptions& opt) {
    try {
        const DatasetContainer ds = read_dataset(opt.data_path);
        RunConfig cfg;
        const ResponseData R = response_from_dataset(ds, cfg);
        const DomainSpec domain = cfg.make_domain();
        const CharacterizationReport rep = run_characterization(domain, R, cfg.check);

        atomic_write_text(opt.report_path, rep.summary());
        if (opt.json) {
            nlohmann::json j;
            j["overall"] = rep.overall;
            j["checks"] = nlohmann::json::array();
            for (const CheckRecord& r : rep.records) {
                nlohmann::json c;
                c["name"] = r.name;
                c["residual"] = r.residual;
                c["tolerance"] = r.tolerance;
                c["pass"] = r.pass;
                c["hard"] = r.hard;
                c["skipped"] = r.skipped;
                c["notes"] = r.notes;
                j["checks"].push_back(c);
            }
            atomic_write_text(opt.report_path + ".json", j.dump(2) + "\n");
        }
        std::cout << rep.summary();
        return rep.overall ? kExitOk : kExitCheckFailed;
    } catch (...) {
        return classify_exception();
    }
}

int cmd_oracle(const OracleOptions& opt) {
    try {
        const RunConfig cfg = parse_config_file(opt.config_path);
        const DomainSpec domain = cfg.make_domain();
        const InteriorGrid grid = make_interior_grid(domain, cfg.T, cfg.n_tau, cfg.n_gamma);
        const PotentialField q = cfg.make_potential(domain);

        const OperatorMatrix W = reference_control_matrix(grid, q);

        // Dual traces and the duality pairing residual for a few smooth fields.
        std::vector<InteriorField> fields;
        for (int variant = 0; variant < 2; ++variant) {
            InteriorField y = grid.make_interior_field();
            for (int p = 0; p < grid.n_tau; ++p)
                for (int i = 0; i < grid.n_gamma; ++i)
                    y.values(grid.node(p, i)) =
                        variant == 0
                            ? std::cos(0.5 * 3.14159265358979323846 * grid.tau_sample(p) / grid.T)
                            : std::exp(-10.0 * std::pow(grid.tau_sample(p) / grid.T - 0.35, 2));
            fields.push_back(std::move(y));
        }
        const auto controls = default_test_controls(grid.control_grid(), 3);
        double worst = 0.0;
        Eigen::MatrixXd traces(static_cast<int>(fields.size()), grid.control_grid().flat_size());
        for (std::size_t k = 0; k < fields.size(); ++k) {
            const BoundaryTimeField oy = solve_dual(grid, q, fields[k]);
            traces.row(static_cast<int>(k)) = to_flat(oy).transpose();
            for (const SmoothControl& c : controls) {
                const Eigen::VectorXd wf = W.entries * to_flat(c.f);
                InteriorField wfi{wf, grid.cell_volume};
                const double lhs = inner_product(wfi, fields[k]);
                const double rhs = inner_product(c.f, oy);
                worst = std::max(worst,
                                 std::abs(lhs - rhs) / (norm(wfi) * norm(fields[k]) + 1e-300));
            }
        }

        DatasetContainer ds;
        ds.manifest = config_echo(cfg) + "provenance.tool = wavebc-oracle\n";
        Eigen::VectorXd flat(W.entries.size());
        for (int r = 0; r < W.entries.rows(); ++r)
            for (int c = 0; c < W.entries.cols(); ++c)
                flat(static_cast<Eigen::Index>(r) * W.entries.cols() + c) = W.entries(r, c);
        ds.add("oracle_W", {static_cast<std::uint64_t>(W.entries.rows()),
                            static_cast<std::uint64_t>(W.entries.cols())},
               std::move(flat));
        Eigen::VectorXd tflat(traces.size());
        for (int r = 0; r < traces.rows(); ++r)
            for (int c = 0; c < traces.cols(); ++c)
                tflat(static_cast<Eigen::Index>(r) * traces.cols() + c) = traces(r, c);
        ds.add("dual_traces", {static_cast<std::uint64_t>(traces.rows()),
                               static_cast<std::uint64_t>(traces.cols())},
               std::move(tflat));
        ds.add("duality_residual", {1}, Eigen::VectorXd::Constant(1, worst));
        const InteriorField qi = restrict_potential_to_grid(grid, q);
        ds.add("q_true_interior", {static_cast<std::uint64_t>(grid.n_nodes())}, qi.values);
        write_dataset(opt.out_path, ds);
        std::cout << "duality_residual = " << fmt(worst) << "\n";
        return kExitOk;
    } catch (...) {
        return classify_exception();
    }
}

int cmd_plot(const PlotOptions& opt) {
    try {
        const DatasetContainer ds = read_dataset((fs::path(opt.result_dir) / "result.rbc").string());
        std::string cfg_text;
        {
            std::istringstream in(ds.manifest);
            std::string line;
            while (std::getline(in, line))
                if (line.rfind("result.", 0) != 0 && line.rfind("provenance.", 0) != 0)
                    cfg_text += line + "\n";
        }
        const RunConfig cfg = parse_config_text(cfg_text);
        const DomainSpec domain = cfg.make_domain();
        const InteriorGrid grid = make_interior_grid(domain, cfg.T, cfg.n_tau, cfg.n_gamma);
        fs::create_directories(opt.out_dir);
        const auto out = [&](const char* name) { return (fs::path(opt.out_dir) / name).string(); };

        const Eigen::VectorXd& q_rec = ds.get("q_rec").data;
        const Eigen::VectorXd& mask = ds.get("mask").data;
        const bool has_truth = ds.has("q_true");

        // Potential profile: per-depth (angle-averaged on the disc).
        {
            std::vector<CsvColumn> cols(has_truth ? 4 : 3);
            cols[0].name = "x";
            cols[1].name = "q_rec";
            cols[2].name = "mask";
            if (has_truth) cols[3].name = "q_true";
            for (int p = 0; p < grid.n_tau; ++p) {
                for (int i = 0; i < grid.n_gamma; ++i) {
                    const int id = grid.node(p, i);
                    cols[0].values.push_back(grid.tau_sample(p));
                    cols[1].values.push_back(q_rec(id));
                    cols[2].values.push_back(mask(id));
                    if (has_truth) cols[3].values.push_back(ds.get("q_true").data(id));
                }
            }
            write_csv(out("q_profile.csv"), cols);
            LineSeries rec{"q_rec", {}, {}};
            LineSeries tru{"q_true", {}, {}};
            for (int p = 0; p < grid.n_tau; ++p) {
                double acc = 0, acc_t = 0, wsum = 0;
                for (int i = 0; i < grid.n_gamma; ++i) {
                    const int id = grid.node(p, i);
                    if (mask(id) < 0.5) continue;
                    acc += q_rec(id);
                    if (has_truth) acc_t += ds.get("q_true").data(id);
                    wsum += 1.0;
                }
                if (wsum == 0) continue;
                rec.x.push_back(grid.tau_sample(p));
                rec.y.push_back(acc / wsum);
                if (has_truth) {
                    tru.x.push_back(grid.tau_sample(p));
                    tru.y.push_back(acc_t / wsum);
                }
            }
            std::vector<LineSeries> series{rec};
            if (has_truth) series.push_back(tru);
            write_svg_lines(out("q_profile.svg"), "recovered potential vs depth", series);
        }
        if (domain.kind == DomainKind::disc)
            write_svg_polar_heatmap(out("q_heatmap.svg"), "recovered potential", grid, q_rec);

        {
            const Eigen::VectorXd& ev = ds.get("eigenvalues").data;
            LineSeries s{"eigenvalues of C (descending)", {}, {}};
            std::vector<CsvColumn> cols(2);
            cols[0].name = "index";
            cols[1].name = "eigenvalue";
            for (int i = 0; i < ev.size(); ++i) {
                const double v = ev(ev.size() - 1 - i);
                s.x.push_back(i);
                s.y.push_back(std::max(v, 0.0));
                cols[0].values.push_back(i);
                cols[1].values.push_back(v);
            }
            write_csv(out("eigen_decay.csv"), cols);
            write_svg_lines(out("eigen_decay.svg"), "spectrum of the connecting operator", {s}, true);
        }

        {
            const NamedArray& d = ds.get("defect_vs_partition");
            LineSeries s{"isometry defect", {}, {}};
            std::vector<CsvColumn> cols(2);
            cols[0].name = "partition_step";
            cols[1].name = "defect";
            for (std::uint64_t r = 0; r < d.dims[0]; ++r) {
                cols[0].values.push_back(d.data(2 * r));
                cols[1].values.push_back(d.data(2 * r + 1));
                s.x.push_back(d.data(2 * r));
                s.y.push_back(d.data(2 * r + 1));
            }
            write_csv(out("defect_vs_partition.csv"), cols);
            write_svg_lines(out("defect_vs_partition.svg"), "isometry defect vs partition step", {s});
        }

        {
            const NamedArray& wr = ds.get("wave_rec");
            const bool has_ref = ds.has("wave_ref");
            std::vector<LineSeries> series;
            std::vector<CsvColumn> cols;
            CsvColumn xc{"tau", {}};
            for (int p = 0; p < grid.n_tau; ++p) xc.values.push_back(grid.tau_sample(p));
            cols.push_back(xc);
            const std::uint64_t n_nodes = wr.dims[1];
            const std::uint64_t c0 = 0;  // first test control
            LineSeries rec{"W_rec f", {}, {}};
            CsvColumn recc{"wave_rec", {}};
            for (int p = 0; p < grid.n_tau; ++p) {
                const double v = wr.data(c0 * n_nodes + grid.node(p, 0));
                rec.x.push_back(grid.tau_sample(p));
                rec.y.push_back(v);
                recc.values.push_back(v);
            }
            series.push_back(rec);
            cols.push_back(recc);
            if (has_ref) {
                const NamedArray& wf = ds.get("wave_ref");
                LineSeries ref{"W_ref f", {}, {}};
                CsvColumn refc{"wave_ref", {}};
                for (int p = 0; p < grid.n_tau; ++p) {
                    const double v = wf.data(c0 * n_nodes + grid.node(p, 0));
                    ref.x.push_back(grid.tau_sample(p));
                    ref.y.push_back(v);
                    refc.values.push_back(v);
                }
                series.push_back(ref);
                cols.push_back(refc);
            }
            write_csv(out("wave_snapshot.csv"), cols);
            write_svg_lines(out("wave_snapshot.svg"), "wave snapshot at t = T (first control)",
                            series);
        }
        std::cout << "wrote figures to " << opt.out_dir << "\n";
        return kExitOk;
    } catch (...) {
        return classify_exception();
    }
}

}  // namespace wavebc
