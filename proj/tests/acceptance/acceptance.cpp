// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include "scm/cli_io.hpp"
#include "scm/diagnostics.hpp"
#include "scm/oracle.hpp"
#include "scm/scm_solver.hpp"
#include "test_support.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iterator>
#include <sstream>
#include <string>

using namespace scm;
using namespace scm::testing;
namespace diag = scm::diagnostics;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* format, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, format, args...);
    return buf;
}

// Shared instance of criteria 4, 6, 7 and 8: minimal norm point of three
// random halfspaces in R^5 that contain a unit ball.
struct MinNormInstance {
    OperatorStack stack;
    oracle::Polyhedron P;
    Vector center;
    Vector x_star;
    double oracle_gap = 0.0;
};

MinNormInstance min_norm_instance() {
    std::mt19937_64 gen(derive_seed(2024, "min_norm_instance"));
    const Eigen::Index dim = 5;
    const Vector center = normal_vector(dim, gen, 2.0) + Vector::Constant(dim, 1.0);
    auto P = polyhedron_around_ball(dim, 3, center, 1.0, gen);
    auto exact = oracle::project_polyhedron_exact(P, Vector::Zero(dim));
    if (!exact) throw InternalError("criterion 4 instance is empty");
    const Vector reference = oracle::solve_vip_reference(
        MonotoneMap::identity(dim), oracle::exact_projector(oracle::ConstraintSet{dim, P, std::nullopt}),
        normal_vector(dim, gen, 5.0));
    MinNormInstance inst{halfspace_stack(P), P, center, exact->point, (exact->point - reference).norm()};
    return inst;
}

ScmConfig criterion4_config() {
    ScmConfig cfg;  // beta_n = 1/n, lambda_n = 0.5, mu auto
    cfg.max_iters = 100000;
    cfg.residual_tol = 0.0;  // run the full budget
    cfg.trace_every = 1;
    return cfg;
}

ScmConfig criterion6_config(std::uint64_t seed) {
    ScmConfig cfg = criterion4_config();
    cfg.seed = seed;
    cfg.error.kind = PowerRandomError{0.1, 1.5, seed};
    return cfg;
}

double relative_distance(const Vector& x, const Vector& x_star) {
    return (x - x_star).norm() / (1.0 + x_star.norm());
}

// Criterion 1 -------------------------------------------------------------

Outcome operator_certification() {
    const auto start = Clock::now();
    std::mt19937_64 gen(derive_seed(1, "operator_certification"));
    double worst = 0.0;
    int checks = 0;
    int failures = 0;
    std::string failed;
    for (Eigen::Index dim : {2, 10, 64}) {
        Matrix B = random_matrix(dim, dim, gen);
        Matrix K = random_matrix(dim, dim, gen);
        // Monotone with a nontrivial kernel: symmetric part B B^T and a skew
        // part, both living on the range of the first half of B's columns.
        const Eigen::Index rank = std::max<Eigen::Index>(1, dim / 2);
        const Matrix Bk = B.leftCols(rank);
        const Matrix S = Bk * K.topLeftCorner(rank, rank) * Bk.transpose();
        const Matrix A = Bk * Bk.transpose() + 0.5 * (S - S.transpose());
        const std::vector<FneOperator> ops{
            FneOperator::halfspace(normal_vector(dim, gen), uniform(gen, -3.0, 3.0)),
            FneOperator::ball(normal_vector(dim, gen, 2.0), uniform(gen, 1.0, 20.0)),
            FneOperator::box(-uniform(gen, 1.0, 5.0) * Vector::Ones(dim) - normal_vector(dim, gen).cwiseAbs(),
                             uniform(gen, 1.0, 5.0) * Vector::Ones(dim) + normal_vector(dim, gen).cwiseAbs()),
            FneOperator::hyperplane(normal_vector(dim, gen), uniform(gen, -3.0, 3.0)),
            FneOperator::soft_threshold(uniform(gen, 0.5, 5.0), dim),
            FneOperator::linear_resolvent(A / A.norm() * 3.0, uniform(gen, 0.2, 2.0)),
        };
        for (const auto& op : ops) {
            diag::SampleOptions opts;
            opts.samples = 1000;
            opts.seed = derive_seed(derive_seed(1, std::string(op.type_name())), static_cast<std::uint64_t>(dim));
            std::vector<diag::CheckReport> reports{diag::check_fne(op, opts), diag::check_nonexpansive(op, opts),
                                                   diag::check_cutter(op, opts)};
            if (op.is_projection()) reports.push_back(diag::check_idempotent(op, opts));
            for (const auto& r : reports) {
                ++checks;
                worst = std::max(worst, r.worst_violation);
                if (!r.pass) {
                    ++failures;
                    failed += " " + r.name + "/" + std::string(op.type_name()) + "/d" + std::to_string(dim);
                }
            }
        }
    }
    const double elapsed = seconds_since(start);
    return {failures == 0 && worst <= 1e-10 && elapsed < 5.0,
            fmt("%d checks, worst violation %.3e (tol 1e-10), %.2f s (limit 5 s)%s", checks, worst, elapsed,
                failed.c_str())};
}

// Criterion 2 -------------------------------------------------------------

Outcome contraction() {
    const auto start = Clock::now();
    std::mt19937_64 gen(derive_seed(2, "contraction"));
    double worst = 0.0;
    int failures = 0;
    for (int map = 0; map < 20; ++map) {
        const Eigen::Index dim = 1 + map % 10;
        const Matrix Q = random_orthogonal(dim, gen);
        Vector spectrum(dim);
        for (Eigen::Index j = 0; j < dim; ++j) spectrum(j) = uniform(gen, 0.1, 5.0);
        const Matrix K = random_matrix(dim, dim, gen);
        const Matrix A = Q * spectrum.asDiagonal() * Q.transpose() + uniform(gen, 0.0, 2.0) * (K - K.transpose());
        const auto F = MonotoneMap::affine(A, normal_vector(dim, gen));
        for (int k = 0; k < 10; ++k) {
            const double mu = uniform(gen, 0.001, 0.999) * F.mu_upper();
            const double beta = uniform(gen, 0.001, 1.0);
            diag::SampleOptions opts;
            opts.samples = 1000;
            opts.seed = derive_seed(2, static_cast<std::uint64_t>(map), static_cast<std::uint64_t>(k));
            const auto r = diag::check_contraction(F, mu, beta, opts);
            worst = std::max(worst, r.worst_violation);
            failures += r.pass ? 0 : 1;
        }
    }
    const double elapsed = seconds_since(start);
    return {failures == 0 && worst <= 1e-10 && elapsed < 10.0,
            fmt("200 (map, mu, beta) triples x 1000 pairs, worst violation %.3e (tol 1e-10), %.2f s (limit 10 s)",
                worst, elapsed)};
}

// Criterion 3 -------------------------------------------------------------

Outcome composition_bound() {
    std::mt19937_64 gen(derive_seed(3, "composition_bound"));
    double worst = 0.0;
    int failures = 0;
    int boundary_pairs = 0;
    for (int s = 0; s < 100; ++s) {
        const Eigen::Index dim = 2 + s % 7;
        const std::size_t m = 1 + static_cast<std::size_t>(s % 6);
        const Vector c = normal_vector(dim, gen, 3.0);
        const double rho = 0.5;  // B(c, rho) lies in every set
        std::vector<FneOperator> ops;
        for (std::size_t i = 0; i < m; ++i) {
            switch (static_cast<int>(uniform(gen, 0.0, 3.0))) {
                case 0: {
                    const Vector a = unit_vector(dim, gen);
                    ops.push_back(FneOperator::halfspace(a, a.dot(c) + rho + uniform(gen, 0.0, 1.0)));
                    break;
                }
                case 1: {
                    const Vector offset = unit_vector(dim, gen) * uniform(gen, 0.0, 1.0);
                    ops.push_back(FneOperator::ball(c + offset, offset.norm() + rho + uniform(gen, 0.0, 1.0)));
                    break;
                }
                default: {
                    Vector lo(dim);
                    Vector hi(dim);
                    for (Eigen::Index j = 0; j < dim; ++j) {
                        lo(j) = c(j) - rho - uniform(gen, 0.0, 1.0);
                        hi(j) = c(j) + rho + uniform(gen, 0.0, 1.0);
                    }
                    ops.push_back(FneOperator::box(lo, hi));
                }
            }
        }
        const OperatorStack stack(std::move(ops));
        if (fixed_point_residual(stack, c) != 0.0) throw InternalError("criterion 3 stack has no verified point");

        for (int pair = 0; pair < 100; ++pair) {
            Vector z;
            if (pair % 2 == 1) {
                // Last point of a ray from c that is still in every set.
                z = push_to_boundary(stack, c, unit_vector(dim, gen), 20.0);
                ++boundary_pairs;
            } else {
                const double r = rho * std::pow(uniform(gen, 0.0, 1.0), 1.0 / static_cast<double>(dim));
                z = c + r * unit_vector(dim, gen);
            }
            const Vector x = c + normal_vector(dim, gen, 10.0);
            const auto report = diag::check_composition_bound(stack, x, z);
            worst = std::max(worst, report.worst_violation);
            failures += report.pass ? 0 : 1;
        }
    }
    return {failures == 0 && worst <= 1e-10,
            fmt("100 stacks x 100 pairs (%d with z on the boundary), worst violation %.3e (tol 1e-10)",
                boundary_pairs, worst)};
}

// Criteria 4, 7 and 8 -------------------------------------------------------

Outcome convergence_error_free(const MinNormInstance& inst, diag::CheckReport& fejer, std::string& trace_text) {
    const auto start = Clock::now();
    const ScmConfig cfg = criterion4_config();
    // Fejer inequality against two common fixed points: the interior centre
    // (residual exactly zero) and the solution itself.
    diag::FejerMonitor monitor_center(inst.stack, inst.center, 1e-10);
    diag::FejerMonitor monitor_solution(inst.stack, inst.x_star, 1e-10);
    SolveOptions options;
    options.known_solution = inst.x_star;
    options.observer = [&](const StepOutput& step) {
        monitor_center.observe(step);
        monitor_solution.observe(step);
    };
    const auto result = solve(inst.stack, MonotoneMap::identity(5), Vector::Zero(5), cfg, options);
    const double elapsed = seconds_since(start);
    const auto a = monitor_center.report();
    const auto b = monitor_solution.report();
    fejer = a.worst_violation >= b.worst_violation ? a : b;
    fejer.pass = a.pass && b.pass;
    trace_text = io::trace_to_jsonl(result.trace);

    const double rel = relative_distance(result.x_final, inst.x_star);
    const bool oracles_agree = inst.oracle_gap <= 1e-9;
    return {rel <= 1e-3 && oracles_agree && result.iters == 100000 && elapsed < 5.0,
            fmt("N = %lld, relative distance %.3e (tol 1e-3), oracle gap %.1e, %.2f s (limit 5 s)",
                static_cast<long long>(result.iters), rel, inst.oracle_gap, elapsed)};
}

// Criterion 5 -------------------------------------------------------------

Outcome convergence_affine() {
    std::mt19937_64 gen(derive_seed(5, "convergence_affine"));
    const Eigen::Index dim = 4;
    const Matrix Q = random_orthogonal(dim, gen);
    Vector spectrum(dim);
    spectrum << 1.0, 1.3, 1.7, 2.0;
    const Matrix A = Q * spectrum.asDiagonal() * Q.transpose();

    const Vector c = normal_vector(dim, gen);
    const double radius = 2.0;
    oracle::ConstraintSet C{dim, {}, oracle::Ball{c, radius}};
    std::vector<FneOperator> ops{FneOperator::ball(c, radius)};
    // Two halfspaces that cut the ball but keep its centre with margin.
    for (int i = 0; i < 2; ++i) {
        const Vector a = unit_vector(dim, gen);
        const double b = a.dot(c) + 0.5;
        C.polyhedron.halfspaces.push_back({a, b});
        ops.push_back(FneOperator::halfspace(a, b));
    }
    const OperatorStack stack(std::move(ops));
    // Unconstrained zero of F placed well outside the set.
    const Vector unconstrained = c + 6.0 * unit_vector(dim, gen);
    const auto F = MonotoneMap::affine(A, -A * unconstrained);

    const Vector x_ref = oracle::solve_vip_reference(F, oracle::exact_projector(C), c);
    const auto cert = oracle::project_exact(C, x_ref - F.mu_auto() * eval(F, x_ref));
    ScmConfig cfg = criterion4_config();
    cfg.trace_every = 1000;
    SolveOptions options;
    options.known_solution = x_ref;
    const auto result = solve(stack, F, Vector::Zero(dim), cfg, options);

    const double rel = relative_distance(result.x_final, x_ref);
    const auto samples = oracle::sample_feasible_points(C, c, radius, 200, derive_seed(5, "samples"));
    const double residual = oracle::vip_residual(F, result.x_final, samples);
    const int active = static_cast<int>(cert->active_set.size()) + (cert->ball_active ? 1 : 0);
    return {rel <= 1e-3 && residual <= 1e-3,
            fmt("eta %.12g kappa %.12g, %d active constraints, relative distance %.3e (tol 1e-3), "
                "vip residual %.3e over 200 samples (tol 1e-3)",
                F.eta(), F.kappa(), active, rel, residual)};
}

// Criterion 6 -------------------------------------------------------------

Outcome error_robustness(const MinNormInstance& inst, std::vector<std::string>& traces) {
    double worst_rel = 0.0;
    double worst_accounting = 0.0;
    const double c = 0.1;
    const double q = 1.5;
    CompensatedSum analytic_series;
    for (int n = 1; n <= 100000; ++n) analytic_series.add(std::pow(static_cast<double>(n), -q));
    const double analytic = static_cast<double>(inst.stack.size()) * c * analytic_series.value();

    for (std::uint64_t seed : {11u, 12u, 13u, 14u, 15u}) {
        const ScmConfig cfg = criterion6_config(seed);
        SolveOptions options;
        options.known_solution = inst.x_star;
        const auto result = solve(inst.stack, MonotoneMap::identity(5), Vector::Zero(5), cfg, options);
        CompensatedSum observed;
        for (const auto& r : result.trace) observed.add(r.error_norm_total);
        worst_accounting = std::max(worst_accounting, std::abs(observed.value() - analytic));
        worst_rel = std::max(worst_rel, relative_distance(result.x_final, inst.x_star));
        traces.push_back(io::trace_to_jsonl(result.trace));
    }
    return {worst_rel <= 1e-2 && worst_accounting <= 1e-12,
            fmt("5 seeds, worst relative distance %.3e (tol 1e-2), accounting gap %.3e (tol 1e-12)", worst_rel,
                worst_accounting)};
}

// Criterion 8 -------------------------------------------------------------

std::string write_and_read(const std::filesystem::path& path, const std::string& text) {
    io::write_atomic(path, text);
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Outcome determinism(const MinNormInstance& inst, const std::string& trace4, const std::vector<std::string>& traces6) {
    const auto dir = std::filesystem::temp_directory_path() / ("scm_acceptance_" + std::to_string(::getpid()));
    std::filesystem::create_directories(dir);
    bool identical = true;
    std::size_t bytes = 0;

    diag::CheckReport unused;
    std::string rerun4;
    (void)convergence_error_free(inst, unused, rerun4);
    const std::string a = write_and_read(dir / "c4_first.jsonl", trace4);
    const std::string b = write_and_read(dir / "c4_second.jsonl", rerun4);
    identical = identical && !a.empty() && a == b;
    bytes += a.size();

    for (std::size_t k = 0; k < traces6.size(); ++k) {
        const std::uint64_t seed = 11 + k;
        const auto result = solve(inst.stack, MonotoneMap::identity(5), Vector::Zero(5), criterion6_config(seed),
                                  SolveOptions{inst.x_star, {}});
        const std::string first = write_and_read(dir / ("c6_first_" + std::to_string(seed) + ".jsonl"), traces6[k]);
        const std::string second = write_and_read(dir / ("c6_second_" + std::to_string(seed) + ".jsonl"),
                                                  io::trace_to_jsonl(result.trace));
        identical = identical && !first.empty() && first == second;
        bytes += first.size();
    }
    // Distinct seeds must give distinct traces, otherwise the comparison is vacuous.
    const bool seeds_differ = traces6.size() == 5 && traces6[0] != traces6[1];
    std::filesystem::remove_all(dir);
    return {identical && seeds_differ,
            fmt("6 trace files (%zu bytes) identical on rerun, seeds produce distinct traces: %s", bytes,
                seeds_differ ? "yes" : "no")};
}

// Criterion 9 -------------------------------------------------------------

Outcome oracle_self_consistency() {
    std::mt19937_64 gen(derive_seed(9, "oracle_self_consistency"));
    double worst_euclid = 0.0;
    double worst_metric = 0.0;
    double worst_optimality = 0.0;
    int nontrivial = 0;
    for (int instance = 0; instance < 50; ++instance) {
        const Eigen::Index dim = 2 + instance % 7;
        const std::size_t m = 1 + static_cast<std::size_t>(instance % 10);
        const Vector center = normal_vector(dim, gen, 3.0);
        const auto P = polyhedron_around_ball(dim, m, center, 1.0, gen);
        const oracle::ConstraintSet C{dim, P, std::nullopt};
        const Vector y = center + normal_vector(dim, gen, 6.0);

        // Euclidean projection: enumeration versus projected iteration with
        // F = closest_point(y), started away from the answer.
        const auto exact = oracle::project_polyhedron_exact(P, y);
        if (!exact) throw InternalError("criterion 9 instance is empty");
        nontrivial += exact->active_set.empty() ? 0 : 1;
        const Vector iterate = oracle::solve_vip_reference(MonotoneMap::closest_point(y), oracle::exact_projector(C),
                                                           center + normal_vector(dim, gen, 6.0));
        worst_euclid = std::max(worst_euclid, (exact->point - iterate).norm());
        const Vector origin = Vector::Zero(dim);
        const Vector from_origin = oracle::solve_vip_reference(MonotoneMap::identity(dim), oracle::exact_projector(C),
                                                               center + normal_vector(dim, gen, 6.0));
        worst_euclid = std::max(worst_euclid, (oracle::project_polyhedron_exact(P, origin)->point - from_origin).norm());

        // Projection in the metric of an SPD matrix M = L L^T: the VIP with
        // F(x) = M (x - y) is solved by iteration, and by enumeration after
        // the change of variables u = L^T x.
        const Matrix Q = random_orthogonal(dim, gen);
        Vector spectrum(dim);
        for (Eigen::Index j = 0; j < dim; ++j) spectrum(j) = uniform(gen, 1.0, 3.0);
        const Matrix M = Q * spectrum.asDiagonal() * Q.transpose();
        const Eigen::LLT<Matrix> llt(M);
        const Matrix L = llt.matrixL();
        oracle::Polyhedron transformed;
        for (const auto& h : P.halfspaces) {
            transformed.halfspaces.push_back({L.triangularView<Eigen::Lower>().solve(h.a), h.b});
        }
        const auto u = oracle::project_polyhedron_exact(transformed, L.transpose() * y);
        const Vector x_enum = L.transpose().triangularView<Eigen::Upper>().solve(u->point);
        const auto F = MonotoneMap::affine(M, -M * y);
        const Vector x_iter = oracle::solve_vip_reference(F, oracle::exact_projector(C), center);
        worst_metric = std::max(worst_metric, (x_enum - x_iter).norm());

        // Variational characterisation against random feasible points.
        const auto feasible =
            oracle::sample_feasible_points(C, center, 3.0, 100, derive_seed(9, static_cast<std::uint64_t>(instance)));
        for (const auto& v : feasible) {
            worst_optimality = std::max(worst_optimality, (y - exact->point).dot(v - exact->point));
            worst_optimality = std::max(worst_optimality, (y - exact->point).norm() - (y - v).norm());
        }
    }
    return {worst_euclid <= 1e-9 && worst_metric <= 1e-9 && worst_optimality <= 1e-9,
            fmt("50 instances (%d with active constraints), oracle gap %.3e (origin and random points) and %.3e "
                "in a weighted metric "
                "(tol 1e-9), worst optimality violation %.3e over 100 feasible points each (tol 1e-9)",
                nontrivial, worst_euclid, worst_metric, worst_optimality)};
}

}  // namespace

int main() {
    int failures = 0;
    auto report = [&](int id, const char* title, const std::function<Outcome()>& run) {
        Outcome o;
        try {
            o = run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        std::printf("criterion %d %-28s %s  %s\n", id, title, o.pass ? "PASS" : "FAIL", o.detail.c_str());
        std::fflush(stdout);
        failures += o.pass ? 0 : 1;
    };

    report(1, "operator certification", operator_certification);
    report(2, "contraction", contraction);
    report(3, "composition bound", composition_bound);

    std::optional<MinNormInstance> inst;
    diag::CheckReport fejer;
    std::string trace4;
    std::vector<std::string> traces6;
    report(4, "convergence, error free", [&] {
        inst = min_norm_instance();
        return convergence_error_free(*inst, fejer, trace4);
    });
    report(5, "convergence, affine map", convergence_affine);
    report(6, "error robustness", [&] {
        if (!inst) inst = min_norm_instance();
        return error_robustness(*inst, traces6);
    });
    report(7, "fejer trace", [&] {
        if (trace4.empty()) return Outcome{false, "criterion 4 run unavailable"};
        return Outcome{fejer.pass && fejer.worst_violation <= 1e-10,
                       fmt("%lld iterations, worst violation %.3e (tol 1e-10)", static_cast<long long>(fejer.samples),
                           fejer.worst_violation)};
    });
    report(8, "determinism", [&] {
        if (!inst || trace4.empty() || traces6.size() != 5) return Outcome{false, "criteria 4 and 6 runs unavailable"};
        return determinism(*inst, trace4, traces6);
    });
    report(9, "oracle self-consistency", oracle_self_consistency);

    std::printf("%d of 9 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
