#pragma once

// Experiment runner behind the mcfin command line: config parsing, one
// runner per experiment kind, CSV result rows and throughput reports.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mcfin/numerics.hpp"
#include "mcfin/sde.hpp"

namespace mcfin {

/// Invalid or missing configuration; field() names the offending key.
class ConfigError : public std::invalid_argument {
public:
    ConfigError(std::string field, const std::string& what)
        : std::invalid_argument(field + ": " + what), field_(std::move(field)) {}
    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

enum class ExperimentKind {
    Vanilla,
    Barrier,
    Basket,
    Delta,
    VarCvar,
    Lsm,
    QmcVsMc,
    BiasSlope,
    Mlmc,
    Bench,
};

std::string to_string(ExperimentKind kind);
ExperimentKind parse_experiment_kind(const std::string& text);

/// Flat key = value text, '#' starts a comment, lists are comma separated.
/// Every field is validated by parse_config before anything runs.
struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::Vanilla;
    std::string name;                 // experiment id column; defaults to the kind
    ExperimentKind workload = ExperimentKind::Vanilla;  // what `bench` times
    std::vector<PrecisionMode> modes{PrecisionMode::Double};
    Scheme scheme = Scheme::Euler;
    std::vector<std::size_t> paths;   // N, one or more
    std::vector<std::size_t> steps;   // H, one or more
    std::size_t repetitions = 1;
    std::uint64_t seed = 0;
    unsigned threads = 0;
    unsigned substeps = 1;
    bool couple_steps = false;  // substeps = max(H) / H, one Brownian path for all H
    std::optional<std::string> out;

    // Model.
    double spot = 100.0;
    double rate = 0.0;
    double sigma = 0.0;
    double dividend = 0.0;
    double correlation = 0.0;   // lsm: pairwise correlation of the two assets
    double maturity = 1.0;
    std::size_t assets = 1;
    double vol_scale = 0.2;     // synthetic basket
    std::uint64_t model_seed = 0;  // synthetic correlation key

    // Instruments.
    double strike = 0.0;
    double barrier = 0.0;
    bool bridge = true;
    std::vector<double> strikes_pct;

    // Kind specific.
    double alpha = 0.95;
    double bump = 0.01;
    std::size_t shifts = 16;
    std::size_t coarse_ratio = 20;
    std::size_t bench_repeats = 5;
    std::size_t reference_points = 1u << 20;
};

/// Parses and validates. `overrides` (key=value) are applied after the file.
ExperimentConfig parse_config(std::istream& in, const std::vector<std::string>& overrides = {});
ExperimentConfig load_config(const std::string& path, const std::vector<std::string>& overrides = {});

struct ResultRow {
    std::string experiment;
    std::size_t repetition = 0;
    PrecisionMode mode = PrecisionMode::Double;
    std::size_t n = 0;
    std::size_t h = 0;
    double estimate = 0.0;
    std::optional<double> std_error;
    std::optional<double> analytic;
    double wall_time_ms = 0.0;
};

inline constexpr const char* kResultHeader =
    "experiment,repetition,mode,N,H,estimate,std_error,analytic,wall_time_ms";

void write_result_csv(const std::vector<ResultRow>& rows, std::ostream& out);

/// Runs the repetition x precision grid of the configured experiment.
std::vector<ResultRow> run_experiment(const ExperimentConfig& config);

/// Mean estimate and std error per (experiment, mode, N, H) cell.
void write_summary(const std::vector<ResultRow>& rows, std::ostream& out);

struct BenchRow {
    PrecisionMode mode = PrecisionMode::Double;
    std::size_t n = 0;
    std::size_t h = 0;
    double median_ms = 0.0;
    double paths_per_second = 0.0;
};

inline constexpr const char* kBenchHeader = "mode,N,H,median_ms,paths_per_sec";

/// Median-of-k wall time of config.workload per (mode, N, H) cell.
std::vector<BenchRow> run_bench(const ExperimentConfig& config);
void write_bench_csv(const std::vector<BenchRow>& rows, std::ostream& out);

}  // namespace mcfin
