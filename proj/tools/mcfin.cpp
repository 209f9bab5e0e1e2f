// mcfin: run experiment configs and throughput benchmarks.
//
//   mcfin run <config> [--seed S] [--threads T] [--out FILE] [--set key=value]...
//   mcfin bench <config> [--threads T] [--out FILE] [--set key=value]...
//
// Exit status: 0 on success, 2 for an invalid config, 1 for a simulation error.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "mcfin/cli.hpp"
#include "mcfin/parallel.hpp"

namespace {

struct Options {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> threads;
    std::optional<std::string> out;
    std::vector<std::string> overrides;
};

std::vector<std::string> overrides_of(const Options& o) {
    auto all = o.overrides;
    if (o.seed) all.push_back("seed=" + std::to_string(*o.seed));
    if (o.threads) all.push_back("threads=" + std::to_string(*o.threads));
    if (o.out) all.push_back("out=" + *o.out);
    return all;
}

template <class Write>
void emit(const std::optional<std::string>& path, Write&& write) {
    if (!path || *path == "-") {
        write(std::cout);
        return;
    }
    std::ofstream out(*path);
    if (!out) throw std::runtime_error("cannot open output file '" + *path + "'");
    write(out);
    if (!out) throw std::runtime_error("failed writing '" + *path + "'");
}

int run_command(const Options& o, bool bench) {
    mcfin::ExperimentConfig config;
    try {
        config = mcfin::load_config(o.config, overrides_of(o));
    } catch (const mcfin::ConfigError& e) {
        std::cerr << "mcfin: invalid config: " << e.what() << '\n';
        return 2;
    }
    if (config.threads != 0) mcfin::set_default_threads(config.threads);
    try {
        if (bench || config.kind == mcfin::ExperimentKind::Bench) {
            const auto rows = mcfin::run_bench(config);
            emit(config.out, [&](std::ostream& out) { mcfin::write_bench_csv(rows, out); });
            if (config.out) mcfin::write_bench_csv(rows, std::cerr);
            return 0;
        }
        const auto rows = mcfin::run_experiment(config);
        emit(config.out, [&](std::ostream& out) { mcfin::write_result_csv(rows, out); });
        mcfin::write_summary(rows, std::cerr);
    } catch (const mcfin::ConfigError& e) {
        std::cerr << "mcfin: invalid config: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "mcfin: simulation failed: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

void add_common(CLI::App* cmd, Options& o) {
    cmd->add_option("config", o.config, "experiment config file")->required();
    cmd->add_option("--threads", o.threads, "worker threads (default: hardware parallelism)");
    cmd->add_option("--out", o.out, "CSV output file (default: stdout)");
    cmd->add_option("--set", o.overrides, "override a config field, key=value");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Precision-parameterized Monte Carlo experiments"};
    app.require_subcommand(1);
    Options o;
    auto* run = app.add_subcommand("run", "run an experiment and write result rows as CSV");
    add_common(run, o);
    run->add_option("--seed", o.seed, "base seed");
    auto* bench = app.add_subcommand("bench", "median wall time and paths/second per (mode, N, H)");
    add_common(bench, o);
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }
    return run_command(o, bench->parsed());
}
