#include "CLI11.hpp"

#include "wavebc/commands.hpp"

int main(int argc, char** argv) {
    CLI::App app{"wavebc: wave-equation boundary control toolkit"};
    app.require_subcommand(1);

    wavebc::SimulateOptions sim;
    double sim_noise = -1.0;
    std::uint64_t sim_seed = 0;
    bool sim_has_seed = false;
    auto* simulate = app.add_subcommand("simulate", "synthesize a response dataset");
    simulate->add_option("--config", sim.config_path, "run configuration file")->required();
    simulate->add_option("--out", sim.out_path, "output dataset path")->required();
    simulate->add_option("--noise", sim_noise, "relative kernel noise level");
    simulate->add_flag("--nonlocal", sim.nonlocal, "use the nonlocal source fixture");
    auto* seed_opt = simulate->add_option("--seed", sim_seed, "noise seed");
    simulate->add_flag("--deterministic", sim.deterministic, "deterministic mode");
    simulate->callback([&] {
        if (sim_noise >= 0.0) sim.noise = sim_noise;
        if (seed_opt->count() > 0 || sim_has_seed) sim.seed = sim_seed;
    });

    wavebc::InvertOptions inv;
    double inv_floor = -1.0;
    int inv_partition = -1;
    auto* invert = app.add_subcommand("invert", "recover the potential from a dataset");
    invert->add_option("--data", inv.data_path, "input dataset")->required();
    invert->add_option("--out", inv.out_dir, "output directory")->required();
    invert->add_option("--spectral-floor", inv_floor, "relative eigenvalue cutoff");
    invert->add_option("--partition", inv_partition, "partition step (control samples)");
    invert->callback([&] {
        if (inv_floor > 0.0) inv.spectral_floor = inv_floor;
        if (inv_partition > 0) inv.partition_step = inv_partition;
    });

    wavebc::CheckOptions chk;
    auto* check = app.add_subcommand("check", "run the admissibility characterization");
    check->add_option("--data", chk.data_path, "input dataset")->required();
    check->add_option("--out", chk.report_path, "report path")->required();
    check->add_flag("--json", chk.json, "also emit a structured report");

    wavebc::OracleOptions orc;
    auto* oracle = app.add_subcommand("oracle", "forward-solver reference bundle");
    oracle->add_option("--config", orc.config_path, "run configuration file")->required();
    oracle->add_option("--out", orc.out_path, "output bundle path")->required();
    oracle->add_flag("--deterministic", orc.deterministic, "deterministic mode");

    wavebc::PlotOptions plt;
    auto* plot = app.add_subcommand("plot", "emit CSV series and SVG figures");
    plot->add_option("--data", plt.result_dir, "result bundle directory")->required();
    plot->add_option("--out", plt.out_dir, "figure output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : wavebc::kExitUsage;
    }

    if (simulate->parsed()) return wavebc::cmd_simulate(sim);
    if (invert->parsed()) return wavebc::cmd_invert(inv);
    if (check->parsed()) return wavebc::cmd_check(chk);
    if (oracle->parsed()) return wavebc::cmd_oracle(orc);
    if (plot->parsed()) return wavebc::cmd_plot(plt);
    return wavebc::kExitUsage;
}
