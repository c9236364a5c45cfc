#include "scm/cli_io.hpp"

#include "scm/oracle.hpp"

#include <cstdlib>
#include <fstream>
#include <ostream>
#include <sstream>

namespace scm::io {
namespace {

[[noreturn]] void fail(const std::string& field, const std::string& what) {
    throw InputError(field + ": " + what);
}

const Json& require(const Json& j, const char* key, const std::string& path) {
    if (!j.is_object()) fail(path, "expected an object");
    auto it = j.find(key);
    if (it == j.end()) fail(path + "." + key, "missing required field");
    return *it;
}

std::string as_string(const Json& j, const std::string& field) {
    if (!j.is_string()) fail(field, "expected a string");
    return j.get<std::string>();
}

double as_double(const Json& j, const std::string& field) {
    if (!j.is_number()) fail(field, "expected a number");
    return j.get<double>();
}

std::int64_t as_int(const Json& j, const std::string& field) {
    if (!j.is_number_integer()) fail(field, "expected an integer");
    return j.get<std::int64_t>();
}

Vector as_vector(const Json& j, const std::string& field) {
    if (!j.is_array()) fail(field, "expected an array of numbers");
    Vector v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = as_double(j[i], field + "[" + std::to_string(i) + "]");
    return v;
}

Vector as_vector(const Json& j, const std::string& field, Eigen::Index dim) {
    Vector v = as_vector(j, field);
    if (v.size() != dim) fail(field, "expected " + std::to_string(dim) + " entries, got " + std::to_string(v.size()));
    return v;
}

Matrix as_matrix(const Json& j, const std::string& field, Eigen::Index dim) {
    if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != dim) {
        fail(field, "expected " + std::to_string(dim) + " rows");
    }
    Matrix M(dim, dim);
    for (Eigen::Index r = 0; r < dim; ++r) {
        M.row(r) = as_vector(j[static_cast<std::size_t>(r)], field + "[" + std::to_string(r) + "]", dim).transpose();
    }
    return M;
}

Json vector_json(const Vector& v) {
    Json out = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
    return out;
}

Json matrix_json(const Matrix& M) {
    Json out = Json::array();
    for (Eigen::Index r = 0; r < M.rows(); ++r) out.push_back(vector_json(M.row(r).transpose()));
    return out;
}

void check_schema_version(const Json& j, const std::string& path) {
    if (auto it = j.find("schema_version"); it != j.end()) {
        if (as_int(*it, path + ".schema_version") != kSchemaVersion) {
            fail(path + ".schema_version", "unsupported version (expected " + std::to_string(kSchemaVersion) + ")");
        }
    }
}

// Runs a factory and prefixes any validation error with the field path.
template <class Fn>
auto with_field(const std::string& field, Fn&& fn) {
    try {
        return fn();
    } catch (const InputError&) {
        throw;
    } catch (const Error& e) {
        fail(field, e.what());
    }
}

FneOperator parse_operator(const Json& j, const std::string& path, Eigen::Index dim) {
    const std::string type = as_string(require(j, "type", path), path + ".type");
    return with_field(path, [&]() -> FneOperator {
        if (type == "halfspace" || type == "hyperplane") {
            Vector a = as_vector(require(j, "a", path), path + ".a", dim);
            const double b = as_double(require(j, "b", path), path + ".b");
            return type == "halfspace" ? FneOperator::halfspace(std::move(a), b)
                                       : FneOperator::hyperplane(std::move(a), b);
        }
        if (type == "ball") {
            return FneOperator::ball(as_vector(require(j, "center", path), path + ".center", dim),
                                     as_double(require(j, "radius", path), path + ".radius"));
        }
        if (type == "box") {
            return FneOperator::box(as_vector(require(j, "lo", path), path + ".lo", dim),
                                    as_vector(require(j, "hi", path), path + ".hi", dim));
        }
        if (type == "soft_threshold") {
            return FneOperator::soft_threshold(as_double(require(j, "t", path), path + ".t"), dim);
        }
        if (type == "linear_resolvent") {
            return FneOperator::linear_resolvent(as_matrix(require(j, "A", path), path + ".A", dim),
                                                 as_double(require(j, "r", path), path + ".r"));
        }
        if (type == "fixture_doubling") return FneOperator::fixture(NonFneFixture::Kind::Doubling, dim);
        if (type == "fixture_sawtooth") return FneOperator::fixture(NonFneFixture::Kind::Sawtooth, dim);
        fail(path + ".type", "unknown operator type '" + type + "'");
    });
}

Json operator_json(const FneOperator& op) {
    Json j;
    j["type"] = std::string(op.type_name());
    if (const auto* h = op.get_if<HalfspaceProjection>()) {
        j["a"] = vector_json(h->a);
        j["b"] = h->b;
    } else if (const auto* h = op.get_if<HyperplaneProjection>()) {
        j["a"] = vector_json(h->a);
        j["b"] = h->b;
    } else if (const auto* s = op.get_if<BallProjection>()) {
        j["center"] = vector_json(s->center);
        j["radius"] = s->radius;
    } else if (const auto* b = op.get_if<BoxProjection>()) {
        j["lo"] = vector_json(b->lo);
        j["hi"] = vector_json(b->hi);
    } else if (const auto* s = op.get_if<SoftThreshold>()) {
        j["t"] = s->t;
    } else if (const auto* r = op.get_if<LinearResolvent>()) {
        j["A"] = matrix_json(r->A);
        j["r"] = r->r;
    }
    return j;
}

MonotoneMap parse_map(const Json& j, const std::string& path, Eigen::Index dim) {
    const std::string type = as_string(require(j, "type", path), path + ".type");
    return with_field(path, [&]() -> MonotoneMap {
        if (type == "identity") return MonotoneMap::identity(dim);
        if (type == "closest_point") return MonotoneMap::closest_point(as_vector(require(j, "a", path), path + ".a", dim));
        if (type == "affine") {
            std::optional<double> eta;
            std::optional<double> kappa;
            if (j.contains("eta")) eta = as_double(j["eta"], path + ".eta");
            if (j.contains("kappa")) kappa = as_double(j["kappa"], path + ".kappa");
            return MonotoneMap::affine(as_matrix(require(j, "A", path), path + ".A", dim),
                                       as_vector(require(j, "b", path), path + ".b", dim), eta, kappa);
        }
        fail(path + ".type", "unknown map type '" + type + "'");
    });
}

Json map_json(const MonotoneMap& F) {
    Json j;
    if (std::holds_alternative<IdentityMap>(F.kind())) {
        j["type"] = "identity";
    } else if (const auto* cp = std::get_if<ClosestPointMap>(&F.kind())) {
        j["type"] = "closest_point";
        j["a"] = vector_json(cp->a);
    } else {
        const auto& aff = std::get<AffineMap>(F.kind());
        j["type"] = "affine";
        j["A"] = matrix_json(aff.A);
        j["b"] = vector_json(aff.b);
        j["eta"] = F.eta();
        j["kappa"] = F.kappa();
    }
    return j;
}

Json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError(path.string() + ": cannot open file");
    try {
        return Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw InputError(path.string() + ": invalid JSON (" + e.what() + ")");
    }
}

std::uint64_t default_seed() {
    if (const char* env = std::getenv(kSeedEnvVar)) {
        try {
            return std::stoull(env);
        } catch (const std::exception&) {
            throw InputError(std::string(kSeedEnvVar) + ": expected a nonnegative integer");
        }
    }
    return 0;
}

}  // namespace

Problem parse_problem(const Json& j) {
    const std::string root = "problem";
    if (!j.is_object()) fail(root, "expected an object");
    check_schema_version(j, root);
    const std::int64_t dim = as_int(require(j, "dim", root), root + ".dim");
    if (dim < 1) fail(root + ".dim", "must be >= 1");

    const Json& ops_j = require(j, "operators", root);
    if (!ops_j.is_array()) fail(root + ".operators", "expected an array");
    if (ops_j.empty()) fail(root + ".operators", "at least one operator is required");
    std::vector<FneOperator> ops;
    for (std::size_t i = 0; i < ops_j.size(); ++i) {
        ops.push_back(parse_operator(ops_j[i], root + ".operators[" + std::to_string(i) + "]", dim));
    }

    MonotoneMap F = parse_map(require(j, "F", root), root + ".F", dim);
    std::optional<Vector> known;
    if (auto it = j.find("known_solution"); it != j.end() && !it->is_null()) {
        known = as_vector(*it, root + ".known_solution", dim);
        with_field(root + ".known_solution", [&] {
            require_finite(*known, "known_solution");
            return 0;
        });
    }
    return Problem{OperatorStack(std::move(ops)), std::move(F), std::move(known)};
}

Json to_json(const Problem& problem) {
    Json j;
    j["schema_version"] = kSchemaVersion;
    j["dim"] = problem.dim();
    j["operators"] = Json::array();
    for (const auto& op : problem.stack.ops()) j["operators"].push_back(operator_json(op));
    j["F"] = map_json(problem.F);
    if (problem.known_solution) j["known_solution"] = vector_json(*problem.known_solution);
    return j;
}

Problem load_problem(const std::filesystem::path& path) { return parse_problem(read_json_file(path)); }

ScmConfig parse_config(const Json& j, bool allow_nonsummable_errors) {
    const std::string root = "config";
    if (!j.is_object()) fail(root, "expected an object");
    check_schema_version(j, root);
    ScmConfig cfg;
    cfg.allow_nonsummable_errors = allow_nonsummable_errors;
    cfg.seed = default_seed();
    if (auto it = j.find("seed"); it != j.end()) {
        const std::int64_t seed = as_int(*it, root + ".seed");
        if (seed < 0) fail(root + ".seed", "must be >= 0");
        cfg.seed = static_cast<std::uint64_t>(seed);
    }

    if (auto it = j.find("mu"); it != j.end()) {
        if (it->is_string()) {
            if (it->get<std::string>() != "auto") fail(root + ".mu", "expected a number or \"auto\"");
        } else {
            cfg.mu = as_double(*it, root + ".mu");
        }
    }

    if (auto it = j.find("beta"); it != j.end()) {
        const std::string path = root + ".beta";
        const std::string type = as_string(require(*it, "type", path), path + ".type");
        if (type == "power") {
            PowerBeta p;
            if (it->contains("beta0")) p.beta0 = as_double((*it)["beta0"], path + ".beta0");
            if (it->contains("p")) p.p = as_double((*it)["p"], path + ".p");
            cfg.beta.kind = p;
        } else if (type == "explicit") {
            const Vector v = as_vector(require(*it, "values", path), path + ".values");
            cfg.beta.kind = ExplicitBeta{std::vector<double>(v.begin(), v.end())};
        } else {
            fail(path + ".type", "expected \"power\" or \"explicit\"");
        }
        with_field(path, [&] {
            cfg.beta.validate();
            return 0;
        });
    }

    if (auto it = j.find("lambda"); it != j.end()) {
        const std::string path = root + ".lambda";
        const std::string type = as_string(require(*it, "type", path), path + ".type");
        if (type == "constant") {
            cfg.lambda.kind = ConstantLambda{as_double(require(*it, "value", path), path + ".value")};
        } else if (type == "explicit") {
            const Vector v = as_vector(require(*it, "values", path), path + ".values");
            cfg.lambda.kind = ExplicitLambda{std::vector<double>(v.begin(), v.end())};
        } else {
            fail(path + ".type", "expected \"constant\" or \"explicit\"");
        }
    }
    cfg.lambda.epsilon = cfg.lambda.widest_epsilon();
    if (auto it = j.find("epsilon"); it != j.end()) cfg.lambda.epsilon = as_double(*it, root + ".epsilon");
    with_field(root + ".lambda", [&] {
        cfg.lambda.validate();
        return 0;
    });

    if (auto it = j.find("error"); it != j.end()) {
        const std::string path = root + ".error";
        const std::string type = as_string(require(*it, "type", path), path + ".type");
        if (type == "none") {
            cfg.error.kind = NoError{};
        } else if (type == "power_random") {
            PowerRandomError e;
            e.c = as_double(require(*it, "c", path), path + ".c");
            e.q = as_double(require(*it, "q", path), path + ".q");
            e.seed = cfg.seed;
            if (it->contains("seed")) {
                const std::int64_t s = as_int((*it)["seed"], path + ".seed");
                if (s < 0) fail(path + ".seed", "must be >= 0");
                e.seed = static_cast<std::uint64_t>(s);
            }
            cfg.error.kind = e;
        } else if (type == "power_fixed") {
            PowerFixedError e;
            e.c = as_double(require(*it, "c", path), path + ".c");
            e.q = as_double(require(*it, "q", path), path + ".q");
            e.direction = as_vector(require(*it, "direction", path), path + ".direction");
            cfg.error.kind = e;
        } else {
            fail(path + ".type", "expected \"none\", \"power_random\" or \"power_fixed\"");
        }
        with_field(path, [&] {
            cfg.error.validate(allow_nonsummable_errors);
            return 0;
        });
    }

    if (auto it = j.find("max_iters"); it != j.end()) cfg.max_iters = as_int(*it, root + ".max_iters");
    if (auto it = j.find("residual_tol"); it != j.end()) cfg.residual_tol = as_double(*it, root + ".residual_tol");
    if (auto it = j.find("trace_every"); it != j.end()) cfg.trace_every = as_int(*it, root + ".trace_every");
    with_field(root, [&] {
        cfg.validate();
        return 0;
    });
    return cfg;
}

Json to_json(const ScmConfig& cfg) {
    Json j;
    j["schema_version"] = kSchemaVersion;
    if (cfg.mu) {
        j["mu"] = *cfg.mu;
    } else {
        j["mu"] = "auto";
    }
    if (const auto* p = std::get_if<PowerBeta>(&cfg.beta.kind)) {
        j["beta"] = {{"type", "power"}, {"beta0", p->beta0}, {"p", p->p}};
    } else {
        j["beta"] = {{"type", "explicit"}, {"values", std::get<ExplicitBeta>(cfg.beta.kind).values}};
    }
    if (const auto* c = std::get_if<ConstantLambda>(&cfg.lambda.kind)) {
        j["lambda"] = {{"type", "constant"}, {"value", c->value}};
    } else {
        j["lambda"] = {{"type", "explicit"}, {"values", std::get<ExplicitLambda>(cfg.lambda.kind).values}};
    }
    j["epsilon"] = cfg.lambda.epsilon;
    if (const auto* r = std::get_if<PowerRandomError>(&cfg.error.kind)) {
        j["error"] = {{"type", "power_random"}, {"c", r->c}, {"q", r->q}, {"seed", r->seed}};
    } else if (const auto* f = std::get_if<PowerFixedError>(&cfg.error.kind)) {
        j["error"] = {{"type", "power_fixed"}, {"c", f->c}, {"q", f->q}, {"direction", vector_json(f->direction)}};
    } else {
        j["error"] = {{"type", "none"}};
    }
    j["max_iters"] = cfg.max_iters;
    j["residual_tol"] = cfg.residual_tol;
    j["trace_every"] = cfg.trace_every;
    j["seed"] = cfg.seed;
    return j;
}

ScmConfig load_config(const std::filesystem::path& path, bool allow_nonsummable_errors) {
    return parse_config(read_json_file(path), allow_nonsummable_errors);
}

Json to_json(const IterationRecord& record) {
    Json j;
    j["n"] = record.n;
    j["beta_n"] = record.beta_n;
    j["lambda_n"] = record.lambda_n;
    j["fixed_point_residual"] = record.fixed_point_residual;
    j["step_norm"] = record.step_norm;
    j["error_norm_total"] = record.error_norm_total;
    if (record.dist_to_known) j["dist_to_known"] = *record.dist_to_known;
    return j;
}

IterationRecord parse_iteration_record(const Json& j) {
    const std::string root = "record";
    IterationRecord r;
    r.n = as_int(require(j, "n", root), root + ".n");
    r.beta_n = as_double(require(j, "beta_n", root), root + ".beta_n");
    r.lambda_n = as_double(require(j, "lambda_n", root), root + ".lambda_n");
    r.fixed_point_residual = as_double(require(j, "fixed_point_residual", root), root + ".fixed_point_residual");
    r.step_norm = as_double(require(j, "step_norm", root), root + ".step_norm");
    r.error_norm_total = as_double(require(j, "error_norm_total", root), root + ".error_norm_total");
    if (auto it = j.find("dist_to_known"); it != j.end()) r.dist_to_known = as_double(*it, root + ".dist_to_known");
    return r;
}

std::string trace_to_jsonl(const std::vector<IterationRecord>& trace) {
    std::string out;
    for (const auto& record : trace) {
        out += to_json(record).dump();
        out += '\n';
    }
    return out;
}

Json to_json(const diagnostics::CheckReport& report) {
    return {{"name", report.name},
            {"samples", report.samples},
            {"worst_violation", report.worst_violation},
            {"tolerance", report.tolerance},
            {"pass", report.pass}};
}

Json summary_json(const SolveResult& result, const Problem& problem) {
    Json j;
    j["schema_version"] = kSchemaVersion;
    j["x_final"] = vector_json(result.x_final);
    j["status"] = to_string(result.status);
    j["iters"] = result.iters;
    j["final_residual"] = fixed_point_residual(problem.stack, result.x_final);
    if (problem.known_solution) j["dist_to_known"] = (result.x_final - *problem.known_solution).norm();
    return j;
}

void write_atomic(const std::filesystem::path& path, const std::string& content) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw InputError(path.string() + ": cannot open for writing");
        out << content;
        out.flush();
        if (!out) throw InputError(path.string() + ": write failed");
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp);
        throw InputError(path.string() + ": cannot rename temporary file (" + ec.message() + ")");
    }
}

int cli_solve(const SolveCommand& cmd, std::ostream& log) {
    try {
        const Problem problem = load_problem(cmd.problem);
        const ScmConfig cfg = load_config(cmd.config, cmd.unsafe_error);
        for (std::size_t i = 0; i < problem.stack.size(); ++i) {
            if (!problem.stack[i].is_certified_fne()) {
                throw InputError("problem.operators[" + std::to_string(i) + "]: operator '" +
                                 std::string(problem.stack[i].type_name()) + "' is not firmly nonexpansive");
            }
        }
        try {
            resolve_mu(cfg, problem.F);
        } catch (const Error& e) {
            throw InputError(std::string("config.mu: ") + e.what());
        }

        SolveOptions opts;
        opts.known_solution = problem.known_solution;
        const SolveResult result = solve(problem.stack, problem.F, Vector::Zero(problem.dim()), cfg, opts);
        if (!cmd.trace.empty()) write_atomic(cmd.trace, trace_to_jsonl(result.trace));
        if (!cmd.summary.empty()) write_atomic(cmd.summary, summary_json(result, problem).dump(2) + "\n");
        log << "status " << to_string(result.status) << " after " << result.iters << " iterations\n";
        return result.status == SolveStatus::ResidualMet ? kExitSuccess : kExitIterationBudget;
    } catch (const Error& e) {
        log << "error: " << e.what() << "\n";
        return kExitInputError;
    }
}

int cli_oracle(const std::filesystem::path& problem_path, const std::filesystem::path& out, std::ostream& log) {
    try {
        const Problem problem = load_problem(problem_path);
        const auto C = oracle::constraint_set_from_stack(problem.stack);
        if (!C) {
            throw InputError("problem.operators: the oracle supports only halfspace, hyperplane, box and at most "
                             "one ball projection");
        }
        const Vector origin = Vector::Zero(problem.dim());
        if (!oracle::project_exact(*C, origin)) {
            write_atomic(out, Json{{"schema_version", kSchemaVersion}, {"status", "infeasible"}}.dump(2) + "\n");
            log << "constraint set is empty\n";
            return kExitInfeasible;
        }
        const Vector x = oracle::solve_vip_reference(problem.F, oracle::exact_projector(*C), origin);
        const auto cert = oracle::project_exact(*C, x - problem.F.mu_auto() * eval(problem.F, x));

        Json j;
        j["schema_version"] = kSchemaVersion;
        j["status"] = "solved";
        j["x"] = vector_json(x);
        Json active = Json::array();
        for (auto i : cert->active_set) active.push_back(i);
        j["active_set"] = active;
        j["multipliers"] = vector_json(cert->multipliers);
        if (C->ball) {
            j["ball_active"] = cert->ball_active;
            j["ball_multiplier"] = cert->ball_multiplier;
        }
        if (problem.known_solution) j["dist_to_known"] = (x - *problem.known_solution).norm();
        write_atomic(out, j.dump(2) + "\n");
        return kExitSuccess;
    } catch (const Error& e) {
        log << "error: " << e.what() << "\n";
        return kExitInputError;
    }
}

int cli_verify(const std::filesystem::path& problem_path, const std::filesystem::path& config_path,
               const std::filesystem::path& report_path, std::ostream& log) {
    std::vector<diagnostics::CheckReport> reports;
    try {
        const Problem problem = load_problem(problem_path);
        const ScmConfig cfg = load_config(config_path);
        reports = diagnostics::run_full_suite(problem, cfg);
        Json out = Json::array();
        for (const auto& r : reports) out.push_back(to_json(r));
        write_atomic(report_path, out.dump(2) + "\n");
    } catch (const Error& e) {
        log << "error: " << e.what() << "\n";
        return kExitInputError;
    }
    bool ok = true;
    for (const auto& r : reports) {
        if (!r.pass) {
            ok = false;
            log << "FAIL " << r.name << " worst_violation=" << r.worst_violation << " tolerance=" << r.tolerance
                << "\n";
        }
    }
    return ok ? kExitSuccess : kExitVerificationFailed;
}

}  // namespace scm::io
