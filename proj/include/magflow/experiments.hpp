#pragma once

#include "magflow/flow.hpp"
#include "magflow/magnitude.hpp"
#include "magflow/moea.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace magflow {

struct ExperimentSpec {
    std::string pipeline = "benchmark"; // toy-triangle | toy-dodecagon | benchmark | discrete
    std::string problem = "wfg2";
    GAConfig ga;
    FlowConfig flow;
    std::filesystem::path out;
    std::uint64_t seed = 1;

    // toy initialization
    std::size_t toy_samples = 1000;
    double toy_radius = 1.25;
    double toy_delta = 0.1;
    bool profiles = true;

    std::size_t reference_points = 1000;

    void validate() const;
};

/// Population 100 and 5000 evaluations.
GAConfig desk_preset();
/// Population 250 and 10^4 evaluations.
GAConfig full_preset();

struct ProfileRow {
    std::size_t step;
    bool nondominated;
    double t;
    double magnitude; // NaN where the solve failed
};

struct ToyResult {
    Population initial;
    FlowTrace trace;
    std::vector<ProfileRow> profiles; // every step on the step-0 grid
};

/// Uniform sample in the disk, delta-dominance filter, then the flow.
ToyResult run_toy(const ExperimentSpec& spec);

struct BenchmarkResult {
    GAResult ga;
    std::size_t dropped = 0; // duplicate or failed objective points removed before the flow
    FlowTrace trace;
    std::vector<QuotientRow> quotients;
    Matrix reference;
};

/// Rows with finite objectives, in bounds, and first of their objective value: the flow needs
/// distinct points.
std::vector<std::size_t> flow_ready_rows(const ObjectiveProblem& f, const Population& pop);
Population select_population(const Population& pop, const std::vector<std::size_t>& keep);

/// NSGA-II seed population, deduplicated, followed by the flow with IGD tracking.
BenchmarkResult run_benchmark(const ExperimentSpec& spec);

/// step_XXX.csv (x1..xM,y1..ym,dom) per snapshot and trace.csv.
void emit_csv(const FlowTrace& trace, const std::filesystem::path& dir);
void emit_quotients(const std::vector<QuotientRow>& rows, const std::filesystem::path& dir);
void emit_profiles(const std::vector<ProfileRow>& rows, const std::filesystem::path& dir);
/// config.json with every resolved setting.
void emit_config(const ExperimentSpec& spec, const std::filesystem::path& dir);

std::vector<std::string> population_header(std::size_t solution_dim, std::size_t objective_dim);
Matrix population_table(const Population& pop);
/// Inverse of population_table; recomputes dominance counts and marks every row feasible.
Population population_from_table(const Matrix& table, std::size_t solution_dim);

} // namespace magflow
