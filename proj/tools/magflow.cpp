// magflow: magnitude, scale and weighting-flow experiments from the command line.

#include "magflow/discrete.hpp"
#include "magflow/errors.hpp"
#include "magflow/experiments.hpp"
#include "magflow/flow.hpp"
#include "magflow/io.hpp"
#include "magflow/magnitude.hpp"
#include "magflow/moea.hpp"
#include "magflow/problems.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <string>

namespace fs = std::filesystem;
using namespace magflow;

namespace {

struct Globals {
    std::uint64_t seed = 1;
    std::string out;
    bool paper_scale = false;
};

// Writes to --out when given, stdout otherwise.
void emit_table(const Globals& g, const Matrix& values, const std::vector<std::string>& header) {
    if (g.out.empty()) {
        write_csv(std::cout, values, header);
    } else {
        if (fs::path(g.out).has_parent_path()) fs::create_directories(fs::path(g.out).parent_path());
        write_csv(fs::path(g.out), values, header);
    }
}

fs::path require_dir(const Globals& g) {
    if (g.out.empty()) throw std::invalid_argument("--out DIR is required");
    fs::create_directories(g.out);
    return g.out;
}

double parse_beta(const std::string& s) {
    if (s == "inf" || s == "infinity") return kInfiniteBeta;
    std::size_t used = 0;
    const double b = std::stod(s, &used);
    if (used != s.size() || !(b > 0.0)) throw std::invalid_argument("--beta must be positive or inf");
    return b;
}

GAConfig preset(const Globals& g) { return g.paper_scale ? full_preset() : desk_preset(); }

void print_benchmark_summary(std::uint64_t seed, const BenchmarkResult& r) {
    const auto& q = r.quotients.back();
    const auto& first = r.trace.rows.front();
    const auto& last = r.trace.rows.back();
    std::cout << "seed " << seed << ": n=" << r.trace.snapshots.front().size() << " q_feasible=" << q.q_feasible
              << " q_nondom=" << q.q_nondom << " nondom_fraction=" << q.nondom_fraction << " igd " << first.igd
              << " -> " << last.igd << " flow_evals=" << last.evals << '\n';
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"magflow: magnitude, diversity scales and the weighting gradient flow"};
    app.require_subcommand(1);
    app.fallthrough();
    Globals g;
    app.add_option("--seed", g.seed, "Random seed");
    app.add_option("--out", g.out, "Output file or directory");
    auto* desk = app.add_flag("--desk", "Desk-scale GA preset: population 100, 5000 evaluations (default)");
    app.add_flag("--paper-scale", g.paper_scale, "GA preset: population 250, 10^4 evaluations")->excludes(desk);

    // mag
    auto* mag = app.add_subcommand("mag", "Magnitude of a point set at one scale or over a profile");
    std::string mag_points;
    std::optional<double> mag_t;
    bool mag_profile = false;
    std::size_t mag_count = 64;
    mag->add_option("--points", mag_points, "CSV of points (rows)")->required()->check(CLI::ExistingFile);
    auto* mag_t_opt = mag->add_option("--t", mag_t, "Scale");
    mag->add_flag("--profile", mag_profile, "Log-spaced profile over [t_plus/10, 10 t_d]")->excludes(mag_t_opt);
    mag->add_option("--count", mag_count, "Profile samples")->check(CLI::PositiveNumber);

    // scales
    auto* scales = app.add_subcommand("scales", "Diagonal and positive cutoffs");
    std::string scales_points;
    scales->add_option("--points", scales_points, "CSV of points (rows)")->required()->check(CLI::ExistingFile);

    // problem
    auto* problem = app.add_subcommand("problem", "Random (x, f(x)) rows of a named problem");
    std::string problem_name;
    std::size_t problem_sample = 10;
    problem->add_option("--name", problem_name, "Problem name")->required()->check(CLI::IsMember(problem_names()));
    problem->add_option("--sample", problem_sample, "Number of rows");

    // seed
    auto* seed_cmd = app.add_subcommand("seed", "NSGA-II population");
    std::string seed_problem;
    std::optional<std::size_t> seed_pop;
    std::optional<std::size_t> seed_evals;
    seed_cmd->add_option("--problem", seed_problem, "Problem name")->required()->check(CLI::IsMember(problem_names()));
    seed_cmd->add_option("--pop", seed_pop, "Population size");
    seed_cmd->add_option("--evals", seed_evals, "Evaluation budget");

    // flow
    auto* flow = app.add_subcommand("flow", "Weighting gradient flow on a population");
    std::string flow_points;
    std::string flow_problem;
    FlowConfig flow_cfg;
    bool flow_recycle = false;
    bool flow_spread = false;
    std::optional<double> flow_lw;
    std::optional<double> flow_lf;
    flow->add_option("--points", flow_points, "CSV whose first M columns are solution points")->required()->check(CLI::ExistingFile);
    flow->add_option("--problem", flow_problem, "Problem name")->required()->check(CLI::IsMember(problem_names()));
    flow->add_option("--steps", flow_cfg.steps, "Number of steps");
    flow->add_flag("--recycle", flow_recycle, "Recycle Jacobians from earlier evaluations");
    auto* spread_flag = flow->add_flag("--spread", flow_spread, "Use the spread vector in place of the weighting");
    flow->add_option("--lambda-w", flow_lw, "Weighting term coefficient")->excludes(spread_flag);
    flow->add_option("--lambda-f", flow_lf, "Objective descent coefficient")->excludes(spread_flag);
    flow->add_flag("!--no-speed-factor", flow_cfg.speed_factor_enabled, "Disable dominance speed factors");

    // discrete
    auto* discrete = app.add_subcommand("discrete", "Metropolis-Hastings magnitude ascent or stochastic flow");
    std::string disc_mode = "mh";
    std::string disc_beta = "inf";
    std::size_t disc_steps = 200;
    std::size_t disc_side = 30;
    std::size_t disc_points = 100;
    std::string disc_input;
    double disc_effort = 0.0;
    discrete->add_option("--mode", disc_mode, "mh or flow")->check(CLI::IsMember({"mh", "flow"}));
    discrete->add_option("--steps", disc_steps, "Number of steps");
    discrete->add_option("--beta", disc_beta, "Inverse temperature, or inf");
    discrete->add_option("--side", disc_side, "Lattice side length of the ground set");
    discrete->add_option("--n", disc_points, "Points sampled from the lattice");
    discrete->add_option("--points", disc_input, "Starting points (flow mode) instead of a lattice sample")->check(CLI::ExistingFile);
    discrete->add_option("--effort", disc_effort, "Total candidate budget C per step (flow mode, default 10 n)");

    // toy
    auto* toy = app.add_subcommand("toy", "Polygon toy: disk sample, delta filter, flow");
    std::string toy_shape = "triangle";
    ExperimentSpec toy_spec;
    bool toy_no_profiles = false;
    toy->add_option("--shape", toy_shape, "triangle or dodecagon")->check(CLI::IsMember({"triangle", "dodecagon"}));
    toy->add_option("--steps", toy_spec.flow.steps, "Number of steps");
    toy->add_option("--samples", toy_spec.toy_samples, "Initial disk sample size");
    toy->add_option("--delta", toy_spec.toy_delta, "Delta-dominance filter");
    toy->add_flag("--no-profiles", toy_no_profiles, "Skip per-step magnitude profiles");

    // benchmark
    auto* bench = app.add_subcommand("benchmark", "NSGA-II followed by the flow, one run per seed");
    ExperimentSpec bench_spec;
    std::size_t bench_seeds = 1;
    bool bench_recycle = false;
    bench->add_option("--problem", bench_spec.problem, "Problem name")->check(CLI::IsMember(problem_names()));
    bench->add_option("--steps", bench_spec.flow.steps, "Number of flow steps");
    bench->add_option("--seeds", bench_seeds, "Consecutive seeds starting at --seed")->check(CLI::PositiveNumber);
    bench->add_flag("--recycle", bench_recycle, "Recycle Jacobians from earlier evaluations");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*mag) {
            const PointSet ps = read_points(mag_points);
            const DistanceMatrix d = distance_matrix(ps);
            if (mag_t) {
                Matrix row(1, 2);
                row << *mag_t, magnitude_at(d, *mag_t);
                emit_table(g, row, {"t", "magnitude"});
            } else {
                MagnitudeProfile prof;
                if (mag_profile && mag_count != 64) {
                    const ScaleReport sr = scale_report(d);
                    prof = magnitude_profile(d, sr.t_plus > 0 ? sr.t_plus / 10 : sr.t_d / 100, 10 * sr.t_d, mag_count);
                } else {
                    prof = magnitude_profile(d);
                }
                Matrix rows(static_cast<Eigen::Index>(prof.samples.size()), 2);
                for (std::size_t i = 0; i < prof.samples.size(); ++i) {
                    rows(static_cast<Eigen::Index>(i), 0) = prof.samples[i].t;
                    rows(static_cast<Eigen::Index>(i), 1) = prof.samples[i].magnitude;
                }
                for (double t : prof.gaps) std::cerr << "warning: solve failed at t = " << t << '\n';
                emit_table(g, rows, {"t", "magnitude"});
            }
        } else if (*scales) {
            const ScaleReport sr = scale_report(distance_matrix(read_points(scales_points)));
            Matrix row(1, 4);
            row << sr.t_d, sr.t_plus, sr.lower_bound, sr.upper_bound;
            emit_table(g, row, {"t_d", "t_plus", "lower_bound", "upper_bound"});
        } else if (*problem) {
            const ObjectiveProblem f = make_problem(problem_name);
            Rng rng(g.seed, "problem/" + problem_name);
            Matrix xs(static_cast<Eigen::Index>(problem_sample), static_cast<Eigen::Index>(f.solution_dim()));
            for (Eigen::Index j = 0; j < xs.rows(); ++j) xs.row(j) = f.random_solution(rng).transpose();
            const Population pop = Population::evaluate(f, xs);
            Matrix table(xs.rows(), xs.cols() + pop.ys.cols());
            table << pop.xs, pop.ys;
            auto header = numbered("x", f.solution_dim());
            const auto yh = numbered("y", f.objective_dim());
            header.insert(header.end(), yh.begin(), yh.end());
            emit_table(g, table, header);
        } else if (*seed_cmd) {
            const ObjectiveProblem f = make_problem(seed_problem);
            GAConfig cfg = preset(g);
            if (seed_pop) cfg.population = *seed_pop;
            if (seed_evals) cfg.max_evaluations = *seed_evals;
            cfg.seed = g.seed;
            const GAResult res = nsga2_run(f, cfg);
            emit_table(g, population_table(res.population), population_header(f.solution_dim(), f.objective_dim()));
            std::cerr << "evaluations " << res.evaluations << ", generations " << res.generations << '\n';
        } else if (*flow) {
            const ObjectiveProblem f = make_problem(flow_problem);
            const Matrix table = read_csv(flow_points).values;
            const auto M = static_cast<Eigen::Index>(f.solution_dim());
            if (table.cols() < M) throw std::invalid_argument("points file has fewer than M columns");
            const Population all = Population::evaluate(f, table.leftCols(M));
            const auto keep = flow_ready_rows(f, all);
            if (keep.size() < all.size()) {
                std::cerr << "dropped " << all.size() - keep.size() << " duplicate or failed points\n";
            }
            const Population pop = select_population(all, keep);
            if (flow_recycle) flow_cfg.jacobian_mode = JacobianMode::Recycled;
            if (flow_spread) {
                flow_cfg.driver = FlowDriver::Spread;
            } else if (flow_lw || flow_lf) {
                flow_cfg.driver = FlowDriver::MultiObjective;
                flow_cfg.lambda_w = flow_lw.value_or(1.0);
                flow_cfg.lambda_f = flow_lf.value_or(0.0);
            }
            const fs::path dir = require_dir(g);
            const FlowTrace trace = run_flow(f, pop, flow_cfg);
            emit_csv(trace, dir);
            ExperimentSpec spec;
            spec.pipeline = "benchmark";
            spec.problem = flow_problem;
            spec.flow = flow_cfg;
            spec.seed = g.seed;
            emit_config(spec, dir);
        } else if (*discrete) {
            const fs::path dir = require_dir(g);
            MHConfig mh;
            mh.beta = parse_beta(disc_beta);
            mh.steps = disc_steps;
            mh.seed = g.seed;
            std::ofstream trace_out(dir / "magnitude_trace.csv");
            trace_out << "step,magnitude,accepted\n";
            Matrix final_points;
            if (disc_mode == "mh") {
                const LatticeGroundSet ground(disc_side);
                Matrix initial;
                if (!disc_input.empty()) {
                    initial = read_csv(disc_input).values;
                } else {
                    Rng rng(g.seed, "lattice");
                    Rng init = rng.split("initial");
                    initial = ground.sample(disc_points, init);
                }
                const MagnitudeTrace tr = magnitude_ascent(initial, ground, mh);
                for (std::size_t s = 0; s < tr.magnitude.size(); ++s) {
                    trace_out << s << ',' << format_double(tr.magnitude[s]) << ',' << tr.accepted[s] << '\n';
                }
                final_points = tr.final_points;
            } else {
                Matrix pts;
                if (!disc_input.empty()) {
                    pts = read_csv(disc_input).values;
                } else {
                    Rng rng(g.seed, "lattice");
                    Rng init = rng.split("initial");
                    pts = LatticeGroundSet(disc_side).sample(disc_points, init);
                }
                const double lo = pts.minCoeff() - 1.0;
                const double hi = pts.maxCoeff() + 1.0;
                const ObjectiveProblem f = identity_problem(static_cast<std::size_t>(pts.cols()), lo, hi);
                Population pop = Population::evaluate(f, pts);
                const double t = scale_report(distance_matrix(PointSet(pop.ys))).t_plus;
                const PerturbationModel model = PerturbationModel::calibrate(pop, t);
                Rng rng(g.seed, "stochastic_flow");
                const double c = disc_effort > 0.0 ? disc_effort : 10.0 * static_cast<double>(pop.size());
                trace_out << 0 << ',' << format_double(magnitude_at(distance_matrix(PointSet(pop.ys)), t)) << ",0\n";
                for (std::size_t s = 1; s <= disc_steps; ++s) {
                    const PointSet ys(pop.ys);
                    const ScaledSimilarity z = similarity(distance_matrix(ys), t);
                    const GradientField grad = weighting_gradient(ys, z, solve_weighting(z).w);
                    const Vector norms = grad.vectors.rowwise().norm();
                    const auto cand = effort(std::span<const double>(norms.data(), static_cast<std::size_t>(norms.size())), c);
                    StochasticStepReport rep;
                    pop = stochastic_flow_step(f, pop, model, cand, t, rng, &rep);
                    const double mu = magnitude_at(distance_matrix(PointSet(pop.ys)), t);
                    trace_out << s << ',' << format_double(mu) << ',' << (pop.size() - rep.unchanged) << '\n';
                }
                final_points = pop.xs;
            }
            write_csv(dir / "final_points.csv", final_points, numbered("x", static_cast<std::size_t>(final_points.cols())));
        } else if (*toy) {
            toy_spec.pipeline = toy_shape == "triangle" ? "toy-triangle" : "toy-dodecagon";
            toy_spec.seed = g.seed;
            toy_spec.profiles = !toy_no_profiles;
            const fs::path dir = require_dir(g);
            const ToyResult res = run_toy(toy_spec);
            emit_csv(res.trace, dir);
            emit_config(toy_spec, dir);
            if (toy_spec.profiles) emit_profiles(res.profiles, dir);
            emit_quotients(diversity_quotients(res.trace), dir);
            for (const TraceRow& r : res.trace.rows) {
                std::cout << "step " << r.step << ": n=" << res.trace.snapshots[r.step].size() << " t_plus=" << r.t_plus
                          << " mag=" << r.mag_feasible << " nondominated=" << r.n_nondom << '\n';
            }
        } else if (*bench) {
            bench_spec.pipeline = "benchmark";
            bench_spec.ga = preset(g);
            if (bench_recycle) bench_spec.flow.jacobian_mode = JacobianMode::Recycled;
            const fs::path dir = require_dir(g);
            for (std::size_t i = 0; i < bench_seeds; ++i) {
                bench_spec.seed = g.seed + i;
                const fs::path sub = bench_seeds > 1 ? dir / ("seed_" + std::to_string(bench_spec.seed)) : dir;
                const BenchmarkResult res = run_benchmark(bench_spec);
                emit_csv(res.trace, sub);
                emit_quotients(res.quotients, sub);
                emit_config(bench_spec, sub);
                print_benchmark_summary(bench_spec.seed, res);
            }
        }
    } catch (const std::exception& e) {
        std::cerr << "magflow: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
