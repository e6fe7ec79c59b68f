#include "magflow/experiments.hpp"

#include "magflow/errors.hpp"
#include "magflow/io.hpp"
#include "magflow/problems.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numbers>
#include <set>
#include <stdexcept>

namespace magflow {

namespace {

const char* policy_name(ScalePolicy p) { return p == ScalePolicy::Fixed ? "fixed" : "positive_cutoff"; }
const char* jacobian_name(JacobianMode j) { return j == JacobianMode::Recycled ? "recycled" : "fresh"; }
const char* driver_name(FlowDriver d) {
    switch (d) {
    case FlowDriver::MultiObjective: return "multi_objective";
    case FlowDriver::Spread: return "spread";
    case FlowDriver::Weighting: break;
    }
    return "weighting";
}

bool is_toy(const std::string& p) { return p == "toy-triangle" || p == "toy-dodecagon"; }

void append_profile(std::vector<ProfileRow>& rows, std::size_t step, bool nondominated, const Matrix& ys,
                    double t_min, double t_max, std::size_t count) {
    if (ys.rows() < 2) return;
    const MagnitudeProfile prof = magnitude_profile(distance_matrix(PointSet(ys)), t_min, t_max, count);
    std::size_t s = 0;
    std::size_t g = 0;
    // Merge samples and gaps back into grid order.
    while (s < prof.samples.size() || g < prof.gaps.size()) {
        if (g >= prof.gaps.size() || (s < prof.samples.size() && prof.samples[s].t < prof.gaps[g])) {
            rows.push_back({step, nondominated, prof.samples[s].t, prof.samples[s].magnitude});
            ++s;
        } else {
            rows.push_back({step, nondominated, prof.gaps[g], std::numeric_limits<double>::quiet_NaN()});
            ++g;
        }
    }
}

Matrix nondominated_rows(const Population& pop) {
    const auto nd = pop.nondominated();
    Matrix out(static_cast<Eigen::Index>(nd.size()), pop.ys.cols());
    for (std::size_t r = 0; r < nd.size(); ++r) out.row(static_cast<Eigen::Index>(r)) = pop.ys.row(static_cast<Eigen::Index>(nd[r]));
    return out;
}

} // namespace

Population select_population(const Population& pop, const std::vector<std::size_t>& keep) {
    Population out;
    out.xs.resize(static_cast<Eigen::Index>(keep.size()), pop.xs.cols());
    out.ys.resize(static_cast<Eigen::Index>(keep.size()), pop.ys.cols());
    for (std::size_t r = 0; r < keep.size(); ++r) {
        out.xs.row(static_cast<Eigen::Index>(r)) = pop.xs.row(static_cast<Eigen::Index>(keep[r]));
        out.ys.row(static_cast<Eigen::Index>(r)) = pop.ys.row(static_cast<Eigen::Index>(keep[r]));
    }
    out.feasible.assign(keep.size(), true);
    out.refresh_dominance();
    return out;
}

void ExperimentSpec::validate() const {
    if (!is_toy(pipeline) && pipeline != "benchmark" && pipeline != "discrete") {
        throw std::invalid_argument("unknown pipeline: " + pipeline);
    }
    if (pipeline == "benchmark") {
        const auto& names = problem_names();
        if (std::find(names.begin(), names.end(), problem) == names.end()) {
            throw std::invalid_argument("unknown problem: " + problem);
        }
        ga.validate();
    }
    flow.validate();
    if (toy_samples < 2 || !(toy_radius > 0.0) || !(toy_delta >= 0.0)) {
        throw std::invalid_argument("invalid toy settings");
    }
}

GAConfig desk_preset() {
    GAConfig cfg;
    cfg.population = 100;
    cfg.max_evaluations = 5000;
    return cfg;
}

GAConfig full_preset() {
    GAConfig cfg;
    cfg.population = 250;
    cfg.max_evaluations = 10000;
    return cfg;
}

ToyResult run_toy(const ExperimentSpec& spec) {
    spec.validate();
    if (!is_toy(spec.pipeline)) throw std::invalid_argument("run_toy: not a toy pipeline");
    const ObjectiveProblem f = polygon_problem(spec.pipeline == "toy-triangle" ? 3 : 12);
    Rng rng(spec.seed, "toy");
    Rng disk = rng.split("disk");

    Matrix xs(static_cast<Eigen::Index>(spec.toy_samples), 2);
    for (Eigen::Index j = 0; j < xs.rows(); ++j) {
        const double r = spec.toy_radius * std::sqrt(disk.uniform());
        const double a = 2.0 * std::numbers::pi * disk.uniform();
        xs(j, 0) = r * std::cos(a);
        xs(j, 1) = r * std::sin(a);
    }
    const Population sample = Population::evaluate(f, xs);
    ToyResult res;
    res.initial = select_population(sample, delta_dominance_filter(sample.ys, spec.toy_delta));
    res.trace = run_flow(f, res.initial, spec.flow);

    if (spec.profiles) {
        const Matrix& y0 = res.trace.snapshots.front().ys;
        const ScaleReport sr = scale_report(distance_matrix(PointSet(y0)));
        const double t_min = sr.t_plus > 0.0 ? sr.t_plus / 10.0 : sr.t_d / 100.0;
        const double t_max = 10.0 * sr.t_d;
        for (std::size_t s = 0; s < res.trace.snapshots.size(); ++s) {
            const Population& pop = res.trace.snapshots[s];
            append_profile(res.profiles, s, false, pop.ys, t_min, t_max, 64);
            append_profile(res.profiles, s, true, nondominated_rows(pop), t_min, t_max, 64);
        }
    }
    return res;
}

std::vector<std::size_t> flow_ready_rows(const ObjectiveProblem& f, const Population& pop) {
    std::set<std::vector<double>> seen;
    std::vector<std::size_t> keep;
    for (std::size_t j = 0; j < pop.size(); ++j) {
        const Vector y = pop.ys.row(static_cast<Eigen::Index>(j)).transpose();
        if (!y.allFinite() || !f.bounds().contains(pop.xs.row(static_cast<Eigen::Index>(j)).transpose())) continue;
        if (seen.insert(std::vector<double>(y.data(), y.data() + y.size())).second) keep.push_back(j);
    }
    return keep;
}

BenchmarkResult run_benchmark(const ExperimentSpec& spec) {
    spec.validate();
    const ObjectiveProblem f = make_problem(spec.problem);
    GAConfig ga = spec.ga;
    ga.seed = spec.seed;
    BenchmarkResult res;
    res.ga = nsga2_run(f, ga);

    const Population& pop = res.ga.population;
    const std::vector<std::size_t> keep = flow_ready_rows(f, pop);
    res.dropped = pop.size() - keep.size();
    res.reference = f.pareto_front(spec.reference_points, spec.seed);
    res.trace = run_flow(f, select_population(pop, keep), spec.flow, &res.reference);
    res.quotients = diversity_quotients(res.trace);
    return res;
}

std::vector<std::string> population_header(std::size_t solution_dim, std::size_t objective_dim) {
    auto h = numbered("x", solution_dim);
    const auto y = numbered("y", objective_dim);
    h.insert(h.end(), y.begin(), y.end());
    h.emplace_back("dom");
    return h;
}

Matrix population_table(const Population& pop) {
    Matrix t(pop.xs.rows(), pop.xs.cols() + pop.ys.cols() + 1);
    t << pop.xs, pop.ys, Vector::Zero(pop.xs.rows());
    for (std::size_t j = 0; j < pop.dom.size(); ++j) t(static_cast<Eigen::Index>(j), t.cols() - 1) = pop.dom[j];
    return t;
}

Population population_from_table(const Matrix& table, std::size_t solution_dim) {
    const auto M = static_cast<Eigen::Index>(solution_dim);
    if (table.cols() < M + 2) throw std::invalid_argument("population_from_table: too few columns");
    Population pop;
    pop.xs = table.leftCols(M);
    pop.ys = table.middleCols(M, table.cols() - M - 1);
    pop.feasible.assign(static_cast<std::size_t>(table.rows()), true);
    pop.refresh_dominance();
    return pop;
}

void emit_csv(const FlowTrace& trace, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    for (std::size_t s = 0; s < trace.snapshots.size(); ++s) {
        const Population& pop = trace.snapshots[s];
        char name[32];
        std::snprintf(name, sizeof name, "step_%03zu.csv", s);
        write_csv(dir / name, population_table(pop),
                  population_header(static_cast<std::size_t>(pop.xs.cols()), static_cast<std::size_t>(pop.ys.cols())));
    }
    std::ofstream out(dir / "trace.csv");
    if (!out) throw Error("cannot write " + (dir / "trace.csv").string());
    out << "step,t_plus,ds,mag_feasible,mag_nondom,n_nondom,igd,evals\n";
    for (const TraceRow& r : trace.rows) {
        out << r.step << ',' << format_double(r.t_plus) << ',' << format_double(r.ds) << ','
            << format_double(r.mag_feasible) << ',' << format_double(r.mag_nondom) << ',' << r.n_nondom << ','
            << format_double(r.igd) << ',' << r.evals << '\n';
    }
}

void emit_quotients(const std::vector<QuotientRow>& rows, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    std::ofstream out(dir / "quotients.csv");
    if (!out) throw Error("cannot write quotients.csv");
    out << "step,q_feasible,q_nondom,nondom_fraction\n";
    for (const QuotientRow& q : rows) {
        out << q.step << ',' << format_double(q.q_feasible) << ',' << format_double(q.q_nondom) << ','
            << format_double(q.nondom_fraction) << '\n';
    }
}

void emit_profiles(const std::vector<ProfileRow>& rows, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    std::ofstream out(dir / "profiles.csv");
    if (!out) throw Error("cannot write profiles.csv");
    out << "step,subset,t,magnitude\n";
    for (const ProfileRow& p : rows) {
        out << p.step << ',' << (p.nondominated ? "nondominated" : "feasible") << ',' << format_double(p.t) << ','
            << format_double(p.magnitude) << '\n';
    }
}

void emit_config(const ExperimentSpec& spec, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    nlohmann::ordered_json j;
    j["pipeline"] = spec.pipeline;
    j["seed"] = spec.seed;
    if (spec.pipeline == "benchmark") {
        j["problem"] = spec.problem;
        j["ga"] = {{"population", spec.ga.population},
                   {"max_evaluations", spec.ga.max_evaluations},
                   {"crossover_eta", spec.ga.crossover_eta},
                   {"crossover_probability", spec.ga.crossover_probability},
                   {"mutation_eta", spec.ga.mutation_eta},
                   {"mutation_rate", spec.ga.mutation_rate > 0.0 ? spec.ga.mutation_rate
                                                                 : 1.0 / static_cast<double>(make_problem(spec.problem).solution_dim())}};
        j["reference_points"] = spec.reference_points;
    }
    if (is_toy(spec.pipeline)) {
        j["toy"] = {{"samples", spec.toy_samples}, {"radius", spec.toy_radius}, {"delta", spec.toy_delta}};
    }
    const FlowConfig& fc = spec.flow;
    j["flow"] = {{"steps", fc.steps},
                 {"scale_policy", policy_name(fc.scale_policy)},
                 {"fixed_scale", fc.fixed_scale},
                 {"speed_factor", fc.speed_factor_enabled},
                 {"lambda_w", fc.lambda_w},
                 {"lambda_f", fc.lambda_f},
                 {"jacobian", jacobian_name(fc.jacobian_mode)},
                 {"driver", driver_name(fc.driver)},
                 {"positivity_tolerance", kPositivityTolerance},
                 {"max_condition", kMaxCondition},
                 {"pullback_rcond", 1e-10}};
    std::ofstream out(dir / "config.json");
    if (!out) throw Error("cannot write config.json");
    out << j.dump(2) << '\n';
}

} // namespace magflow
