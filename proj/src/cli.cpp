#include "boxflow/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "boxflow/errors.hpp"
#include "boxflow/problems.hpp"
#include "boxflow/solver.hpp"

namespace boxflow::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos)
        return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream is(s);
    while (std::getline(is, item, sep))
        out.push_back(trim(item));
    return out;
}

double to_double(const std::string& s, const std::string& what) {
    double v = 0.0;
    const auto t = trim(s);
    const char* end = t.data() + t.size();
    auto [ptr, ec] = std::from_chars(t.data(), end, v);
    if (t.empty() || ec != std::errc() || ptr != end)
        throw ArgumentError(what + ": '" + s + "' is not a number");
    return v;
}

std::vector<double> to_doubles(const std::string& s, const std::string& what) {
    std::vector<double> out;
    for (const auto& item : split(s, ','))
        out.push_back(to_double(item, what));
    return out;
}

Vec to_vec(const std::vector<double>& v) {
    return Eigen::Map<const Vec>(v.data(), static_cast<Index>(v.size()));
}

std::vector<double> to_std(const Vec& v) {
    return {v.data(), v.data() + v.size()};
}

std::mt19937_64 run_rng(std::uint64_t seed, std::uint64_t run) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(run), static_cast<std::uint32_t>(run >> 32)};
    return std::mt19937_64(seq);
}

} // namespace

GainMatrix parse_gain(const std::string& spec, Index n) {
    const auto s = trim(spec);
    if (s.rfind("diag:", 0) == 0) {
        const auto d = to_doubles(s.substr(5), "--gain");
        if (static_cast<Index>(d.size()) != n)
            throw ArgumentError("--gain: expected " + std::to_string(n) + " diagonal entries");
        return GainMatrix::diagonal(to_vec(d));
    }
    if (s.rfind("dense:", 0) == 0) {
        const auto rows = split(s.substr(6), ';');
        if (static_cast<Index>(rows.size()) != n)
            throw ArgumentError("--gain: expected " + std::to_string(n) + " rows");
        Mat m(n, n);
        for (Index i = 0; i < n; ++i) {
            const auto r = to_doubles(rows[static_cast<std::size_t>(i)], "--gain");
            if (static_cast<Index>(r.size()) != n)
                throw ArgumentError("--gain: every row needs " + std::to_string(n) + " entries");
            for (Index j = 0; j < n; ++j)
                m(i, j) = r[static_cast<std::size_t>(j)];
        }
        return GainMatrix::dense(m);
    }
    const double scale = to_double(s, "--gain");
    if (!(scale > 0.0))
        throw ArgumentError("--gain: scale must be positive");
    return GainMatrix::identity(n, scale);
}

Vec parse_init(const std::string& spec, const BoxProblem& problem, std::uint64_t seed,
               std::uint64_t run) {
    const auto s = trim(spec);
    const Index n = problem.dim();
    if (s.rfind("const:", 0) == 0)
        return Vec::Constant(n, to_double(s.substr(6), "--init"));
    if (s == "uniform" || s.rfind("uniform:", 0) == 0) {
        Vec lo = problem.lower();
        Vec hi = problem.upper();
        if (s != "uniform") {
            const auto r = to_doubles(s.substr(8), "--init");
            if (r.size() != 2 || !(r[1] > r[0]))
                throw ArgumentError("--init: uniform range must be 'lo,hi' with hi > lo");
            lo.setConstant(r[0]);
            hi.setConstant(r[1]);
        }
        if (!lo.allFinite() || !hi.allFinite())
            throw ArgumentError("--init: uniform sampling over an unbounded box needs a range");
        auto rng = run_rng(seed, run);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        Vec out(n);
        for (Index i = 0; i < n; ++i)
            out[i] = lo[i] + (hi[i] - lo[i]) * u(rng);
        return out;
    }
    const auto v = to_doubles(s, "--init");
    if (static_cast<Index>(v.size()) != n)
        throw ArgumentError("--init: expected " + std::to_string(n) + " values");
    return to_vec(v);
}

Method parse_method(const std::string& name) {
    if (name == "unconstrained-like")
        return Method::UnconstrainedLike;
    if (name == "general-dynamic")
        return Method::GeneralDynamic;
    if (name == "pgd")
        return Method::ProjectedGradientBaseline;
    throw ArgumentError("unknown method '" + name + "'");
}

IntegratorKind parse_integrator(const std::string& name) {
    if (name == "rk45")
        return IntegratorKind::ExplicitRK45;
    if (name == "stiff")
        return IntegratorKind::StiffImplicit;
    throw ArgumentError("unknown integrator '" + name + "'");
}

std::map<std::string, std::string> read_config(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw ArgumentError("cannot read config file '" + path + "'");
    std::map<std::string, std::string> keys;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        line = trim(line.substr(0, line.find('#')));
        if (line.empty())
            continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ArgumentError(path + ":" + std::to_string(lineno) + ": expected 'key = value'");
        keys[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return keys;
}

pde::IdentConfig ident_config_from_keys(const std::map<std::string, std::string>& keys) {
    static const std::vector<std::string> required{
        "material.rho", "material.cp", "material.L",  "grid.nx",     "grid.dt", "grid.t_end",
        "nodes.count",  "nodes.t_min", "nodes.t_max", "noise.sigma", "seed"};
    static const std::vector<std::string> optional{
        "truth.values", "sensors.positions", "sensors.weights", "ident.gain",
        "ident.horizon", "ident.init", "ident.rtol", "ident.atol", "ident.failure_tol",
        "bc.t_init", "bc.left_start", "bc.left_rate", "bc.left_final", "bc.right"};
    for (const auto& k : required)
        if (!keys.count(k))
            throw ArgumentError("missing config key '" + k + "'");
    for (const auto& [k, v] : keys)
        if (std::find(required.begin(), required.end(), k) == required.end() &&
            std::find(optional.begin(), optional.end(), k) == optional.end())
            throw ArgumentError("unknown config key '" + k + "'");

    auto num = [&](const std::string& k) { return to_double(keys.at(k), k); };
    auto num_or = [&](const std::string& k, double d) { return keys.count(k) ? num(k) : d; };

    pde::IdentConfig cfg;
    cfg.material = {num("material.rho"), num("material.cp"), num("material.L")};
    const double nx = num("grid.nx");
    if (nx != std::floor(nx) || nx < 3)
        throw ArgumentError("grid.nx must be an integer >= 3");
    cfg.grid = {static_cast<Index>(nx), num("grid.dt"), num("grid.t_end")};
    const double count = num("nodes.count");
    if (count != std::floor(count) || count < 2)
        throw ArgumentError("nodes.count must be an integer >= 2");
    const auto n = static_cast<Index>(count);
    cfg.nodes = pde::equispaced_nodes(n, num("nodes.t_min"), num("nodes.t_max"));
    cfg.noise_sigma = num("noise.sigma");
    const double seed = num("seed");
    if (seed < 0 || seed != std::floor(seed))
        throw ArgumentError("seed must be a nonnegative integer");
    cfg.seed = static_cast<std::uint64_t>(seed);

    if (keys.count("truth.values"))
        cfg.truth_values = to_vec(to_doubles(keys.at("truth.values"), "truth.values"));
    else if (n != cfg.truth_values.size())
        throw ArgumentError("missing config key 'truth.values' (required when nodes.count != 5)");
    cfg.theta0 = Vec::Constant(n, 2.0);
    if (keys.count("ident.init"))
        cfg.theta0 = to_vec(to_doubles(keys.at("ident.init"), "ident.init"));
    if (keys.count("sensors.positions"))
        cfg.positions = to_doubles(keys.at("sensors.positions"), "sensors.positions");
    if (keys.count("sensors.weights"))
        cfg.weights = to_doubles(keys.at("sensors.weights"), "sensors.weights");
    cfg.gain = num_or("ident.gain", cfg.gain);
    cfg.horizon = num_or("ident.horizon", cfg.horizon);
    cfg.rel_tol = num_or("ident.rtol", cfg.rel_tol);
    cfg.abs_tol = num_or("ident.atol", cfg.abs_tol);
    cfg.bc.t_init = num_or("bc.t_init", cfg.bc.t_init);
    cfg.bc.left_start = num_or("bc.left_start", cfg.bc.left_start);
    cfg.bc.left_rate = num_or("bc.left_rate", cfg.bc.left_rate);
    cfg.bc.left_final = num_or("bc.left_final", cfg.bc.left_final);
    cfg.bc.right = num_or("bc.right", cfg.bc.right);
    cfg.validate();
    return cfg;
}

namespace {

std::string fmt(double v) {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

json set_json(const ActiveBoundSet& s) {
    return {{"lower", s.lower}, {"upper", s.upper}};
}

json report_to_json(const SolveReport& rep) {
    const auto& k = rep.kkt;
    return {
        {"problem", rep.problem},
        {"method", to_string(rep.method)},
        {"converged", rep.converged},
        {"initial_point_clamped", rep.initial_point_clamped},
        {"final_theta", to_std(rep.final_theta)},
        {"final_f", rep.final_f},
        {"final_tau", rep.final_tau},
        {"kkt",
         {{"residual", to_std(k.residual)},
          {"residual_norm", k.residual_norm},
          {"multipliers", to_std(k.multipliers)},
          {"active", set_json(k.active)},
          {"degenerate", set_json(k.degenerate)},
          {"strict_complementarity", k.strict_complementarity},
          {"multipliers_nonnegative", k.multipliers_nonnegative}}},
        {"stats",
         {{"rhs_evals", rep.stats.rhs_evals},
          {"qp_solves", rep.stats.qp_solves},
          {"newton_iters", rep.stats.newton_iters},
          {"jacobian_evals", rep.stats.jacobian_evals},
          {"accepted_steps", rep.stats.accepted_steps},
          {"rejected_steps", rep.stats.rejected_steps},
          {"objective_evals", rep.stats.objective_evals},
          {"gradient_evals", rep.stats.gradient_evals},
          {"wall_time", rep.stats.wall_time},
          {"max_bound_violation", rep.stats.max_bound_violation}}},
        {"samples", rep.samples.size()},
    };
}

} // namespace

void write_trajectory_csv(std::ostream& os, const SolveReport& rep) {
    os << "# boxflow trajectory v1\n";
    os << "tau";
    for (Index i = 0; i < rep.final_theta.size(); ++i)
        os << ",theta_" << i + 1;
    os << ",f,residual\n";
    for (const auto& s : rep.samples) {
        os << fmt(s.tau);
        for (Index i = 0; i < s.theta.size(); ++i)
            os << ',' << fmt(s.theta[i]);
        os << ',' << fmt(s.f) << ',' << fmt(s.residual) << '\n';
    }
}

std::string report_json(const SolveReport& rep, int indent) {
    return report_to_json(rep).dump(indent);
}

namespace {

struct Common {
    std::string problem = "example1";
    std::string method = "unconstrained-like";
    std::string integrator;
    std::string gain;
    std::string init;
    std::string limiter = "softened";
    double rtol = 1e-3;
    double atol = 1e-6;
    double horizon = 0.0;
    double stationarity_tol = 1e-8;
    double sample_interval = 0.0;
    bool fixed_horizon = false;
    bool allow_dense = false;
    std::uint64_t seed = 0;
    std::size_t runs = 1;
    std::string out_dir;
    std::string format = "csv";
    std::string methods;
    std::string config;
};

void add_common(CLI::App* app, Common& c) {
    app->add_option("--problem", c.problem, "example1 | example2[:lower] | genwood:<n>");
    app->add_option("--method", c.method, "unconstrained-like | general-dynamic | pgd");
    app->add_option("--integrator", c.integrator, "rk45 | stiff (default: per problem)");
    app->add_option("--gain", c.gain, "<scale> | diag:a,b,... | dense:a,b;c,d");
    app->add_option("--init", c.init, "a,b,... | const:c | uniform[:lo,hi]");
    app->add_option("--limiter", c.limiter, "softened | exact")
        ->check(CLI::IsMember({"softened", "exact"}));
    app->add_option("--rtol", c.rtol, "relative tolerance");
    app->add_option("--atol", c.atol, "absolute tolerance");
    app->add_option("--horizon", c.horizon, "virtual-time horizon (default: per problem)");
    app->add_option("--stationarity-tol", c.stationarity_tol, "early-stop KKT residual");
    app->add_option("--sample-interval", c.sample_interval, "record samples on this tau grid");
    app->add_flag("--fixed-horizon", c.fixed_horizon, "integrate the full horizon");
    app->add_flag("--allow-dense-gain", c.allow_dense,
                  "let a dense gain through the unconstrained-like flow");
    app->add_option("--seed", c.seed, "seed for random initial points");
    app->add_option("--runs", c.runs, "number of runs")->check(CLI::PositiveNumber);
    app->add_option("--out-dir", c.out_dir, "directory for output files");
    app->add_option("--format", c.format, "stdout format")->check(CLI::IsMember({"csv", "json"}));
}

struct Setup {
    ProblemSpec spec;
    GainMatrix gain;
    SolveOptions opts;
};

Setup make_setup(const Common& c, const std::string& method) {
    auto spec = make_problem(c.problem);
    const Index n = spec.problem.dim();
    GainMatrix gain = c.gain.empty() ? spec.default_gain : parse_gain(c.gain, n);
    SolveOptions o;
    o.method = parse_method(method);
    o.integrator = c.integrator.empty() ? spec.default_integrator : parse_integrator(c.integrator);
    o.limiter = c.limiter == "exact" ? LimiterMode::exact() : LimiterMode::softened();
    o.rel_tol = c.rtol;
    o.abs_tol = c.atol;
    o.horizon = c.horizon > 0.0 ? c.horizon : spec.default_horizon;
    o.stationarity_tol = c.stationarity_tol;
    o.sample_interval = c.sample_interval;
    o.stop_at_stationarity = !c.fixed_horizon;
    o.allow_dense_limited = c.allow_dense;
    o.seed = c.seed;
    o.validate();
    return {std::move(spec), std::move(gain), o};
}

Vec initial_point(const Common& c, const Setup& s, std::uint64_t run) {
    if (c.init.empty() || c.init == "default")
        return s.spec.default_init;
    return parse_init(c.init, s.spec.problem, c.seed, run);
}

fs::path ensure_dir(const std::string& dir) {
    fs::path p(dir);
    fs::create_directories(p);
    return p;
}

void write_file(const fs::path& path, const std::function<void(std::ostream&)>& body) {
    std::ofstream os(path);
    if (!os)
        throw ArgumentError("cannot write '" + path.string() + "'");
    body(os);
}

int cmd_solve(const Common& c, std::ostream& out, std::ostream& err) {
    const auto s = make_setup(c, c.method);
    const Vec theta0 = initial_point(c, s, 0);

    SolveReport rep;
    int code = kExitOk;
    try {
        rep = solve_to_stationarity(s.spec.problem, s.gain, s.opts, theta0);
        if (!rep.converged) {
            err << "solve: stationarity not reached (KKT residual " << rep.kkt.residual_norm
                << ")\n";
            code = kExitSolverFailure;
        }
    } catch (const SolveError& e) {
        err << e.what() << '\n';
        rep = e.partial();
        code = kExitSolverFailure;
    }
    if (rep.initial_point_clamped)
        err << "warning: initial point was outside the box and has been clamped\n";

    if (!c.out_dir.empty()) {
        const auto dir = ensure_dir(c.out_dir);
        write_file(dir / "trajectory.csv", [&](std::ostream& os) { write_trajectory_csv(os, rep); });
        write_file(dir / "report.json", [&](std::ostream& os) { os << report_json(rep) << '\n'; });
    }
    if (c.format == "json")
        out << report_json(rep) << '\n';
    else
        write_trajectory_csv(out, rep);
    return code;
}

struct BenchRow {
    std::string method;
    std::size_t runs = 0;
    std::size_t successes = 0;
    double mean_time = 0.0;
    double median_time = 0.0;
    double mean_rhs = 0.0;
    double mean_qp = 0.0;
};

int cmd_bench(const Common& c, std::ostream& out, std::ostream& err) {
    const auto methods =
        split(c.methods.empty() ? "unconstrained-like,general-dynamic,pgd" : c.methods, ',');
    std::vector<Setup> setups;
    for (const auto& m : methods)
        setups.push_back(make_setup(c, m));
    const std::string init_spec = c.init.empty() ? "uniform" : c.init;

    std::vector<BenchRow> rows(methods.size());
    std::vector<std::vector<double>> times(methods.size());
    for (std::size_t run = 0; run < c.runs; ++run) {
        const Vec theta0 = init_spec == "default"
                               ? setups.front().spec.default_init
                               : parse_init(init_spec, setups.front().spec.problem, c.seed, run);
        for (std::size_t m = 0; m < methods.size(); ++m) {
            auto& row = rows[m];
            ++row.runs;
            SolveReport rep;
            try {
                rep = solve_to_stationarity(setups[m].spec.problem, setups[m].gain, setups[m].opts,
                                            theta0);
                if (rep.converged)
                    ++row.successes;
            } catch (const SolveError& e) {
                err << methods[m] << " run " << run << ": " << e.what() << '\n';
                rep = e.partial();
            }
            times[m].push_back(rep.stats.wall_time);
            row.mean_rhs += static_cast<double>(rep.stats.rhs_evals);
            row.mean_qp += static_cast<double>(rep.stats.qp_solves);
        }
    }
    for (std::size_t m = 0; m < methods.size(); ++m) {
        auto& row = rows[m];
        row.method = methods[m];
        const double r = static_cast<double>(row.runs);
        row.mean_rhs /= r;
        row.mean_qp /= r;
        auto& t = times[m];
        row.mean_time = std::accumulate(t.begin(), t.end(), 0.0) / r;
        std::sort(t.begin(), t.end());
        const std::size_t h = t.size() / 2;
        row.median_time = t.size() % 2 ? t[h] : 0.5 * (t[h - 1] + t[h]);
    }

    auto emit_csv = [&](std::ostream& os) {
        os << "# boxflow bench v1\n";
        os << "method,runs,successes,mean_wall_time,median_wall_time,mean_rhs_evals,mean_qp_solves\n";
        for (const auto& r : rows)
            os << r.method << ',' << r.runs << ',' << r.successes << ',' << fmt(r.mean_time) << ','
               << fmt(r.median_time) << ',' << fmt(r.mean_rhs) << ',' << fmt(r.mean_qp) << '\n';
    };
    auto emit_json = [&](std::ostream& os) {
        json j = json::array();
        for (const auto& r : rows)
            j.push_back({{"method", r.method},
                         {"runs", r.runs},
                         {"successes", r.successes},
                         {"mean_wall_time", r.mean_time},
                         {"median_wall_time", r.median_time},
                         {"mean_rhs_evals", r.mean_rhs},
                         {"mean_qp_solves", r.mean_qp}});
        os << j.dump(2) << '\n';
    };
    if (!c.out_dir.empty()) {
        const auto dir = ensure_dir(c.out_dir);
        write_file(dir / "bench.csv", emit_csv);
        write_file(dir / "bench.json", emit_json);
    }
    if (c.format == "json")
        emit_json(out);
    else
        emit_csv(out);
    return kExitOk;
}

int cmd_compare(const Common& c, std::ostream& out, std::ostream& err) {
    const auto methods =
        split(c.methods.empty() ? "unconstrained-like,general-dynamic" : c.methods, ',');
    if (methods.size() != 2)
        throw ArgumentError("--methods: compare needs exactly two methods");
    Common cc = c;
    cc.fixed_horizon = true;
    auto sa = make_setup(cc, methods[0]);
    auto sb = make_setup(cc, methods[1]);
    if (cc.sample_interval <= 0.0) {
        sa.opts.sample_interval = sa.opts.horizon / 1000.0;
        sb.opts.sample_interval = sb.opts.horizon / 1000.0;
    }
    const Vec theta0 = initial_point(c, sa, 0);

    SolveReport a, b;
    try {
        a = solve_to_stationarity(sa.spec.problem, sa.gain, sa.opts, theta0);
        b = solve_to_stationarity(sb.spec.problem, sb.gain, sb.opts, theta0);
    } catch (const SolveError& e) {
        err << e.what() << '\n';
        return kExitSolverFailure;
    }
    const auto cmp = compare_trajectories(a, b);

    json j = {{"problem", sa.spec.id},
              {"method_a", methods[0]},
              {"method_b", methods[1]},
              {"points", cmp.points},
              {"max_difference", cmp.max_difference},
              {"final_difference", cmp.final_difference},
              {"final_theta_a", to_std(a.final_theta)},
              {"final_theta_b", to_std(b.final_theta)}};
    if (!c.out_dir.empty()) {
        const auto dir = ensure_dir(c.out_dir);
        write_file(dir / "compare.json", [&](std::ostream& os) { os << j.dump(2) << '\n'; });
        write_file(dir / "trajectory_a.csv", [&](std::ostream& os) { write_trajectory_csv(os, a); });
        write_file(dir / "trajectory_b.csv", [&](std::ostream& os) { write_trajectory_csv(os, b); });
    }
    if (c.format == "json") {
        out << j.dump(2) << '\n';
    } else {
        out << "# boxflow compare v1\n";
        out << "method_a,method_b,points,max_difference,final_difference\n";
        out << methods[0] << ',' << methods[1] << ',' << cmp.points << ','
            << fmt(cmp.max_difference) << ',' << fmt(cmp.final_difference) << '\n';
    }
    return kExitOk;
}

json ident_json(const pde::IdentResult& r) {
    json events = json::array();
    for (const auto& e : r.bound_events)
        events.push_back({{"index", e.index},
                          {"tau", e.tau},
                          {"kind", e.kind == pde::BoundEvent::Kind::Touch ? "touch" : "depart"}});
    json j = report_to_json(r.report);
    j["recovered_values"] = to_std(r.recovered_values);
    j["truth_values"] = to_std(r.truth_values);
    j["max_node_error"] = r.max_node_error;
    j["bound_events"] = std::move(events);
    return j;
}

void write_conductivity_csv(std::ostream& os, const pde::IdentConfig& cfg,
                            const pde::IdentResult& r) {
    const pde::ConductivityModel found(cfg.nodes, r.report.final_theta);
    const pde::ConductivityModel truth(cfg.nodes, pde::increments_from_values(cfg.truth_values));
    const double lo = cfg.nodes[0];
    const double hi = cfg.nodes[cfg.nodes.size() - 1];
    os << "# boxflow conductivity v1\n";
    os << "T,k_recovered,k_truth\n";
    constexpr int kPoints = 81;
    for (int i = 0; i < kPoints; ++i) {
        const double T = lo + (hi - lo) * i / (kPoints - 1);
        os << fmt(T) << ',' << fmt(found.eval(T)) << ',' << fmt(truth.eval(T)) << '\n';
    }
}

int cmd_pde_ident(const Common& c, const CLI::App& sub, std::ostream& out, std::ostream& err) {
    if (c.config.empty())
        throw ArgumentError("--config is required");
    const auto keys = read_config(c.config);
    auto cfg = ident_config_from_keys(keys);
    const double failure_tol =
        keys.count("ident.failure_tol") ? to_double(keys.at("ident.failure_tol"), "ident.failure_tol")
                                        : 0.15;
    if (sub.count("--seed"))
        cfg.seed = c.seed;
    if (sub.count("--horizon"))
        cfg.horizon = c.horizon;
    if (sub.count("--rtol"))
        cfg.rel_tol = c.rtol;
    if (sub.count("--atol"))
        cfg.abs_tol = c.atol;
    if (sub.count("--gain")) {
        cfg.gain = to_double(c.gain, "--gain");
        if (!(cfg.gain > 0.0))
            throw ArgumentError("--gain: must be positive");
    }
    cfg.validate();

    const Index n = cfg.nodes.size();
    const BoxProblem box("pde-ident", [](const Vec&) { return 0.0; },
                         [](const Vec& t) { return Vec::Zero(t.size()).eval(); }, Vec::Zero(n),
                         Vec::Constant(n, kInf));
    const bool batch = c.runs > 1;
    const std::string init_spec = !c.init.empty() ? c.init : batch ? "uniform:0,2" : "";

    struct Row {
        Vec init;
        double error = 0.0;
        double time = 0.0;
        bool failed = false;
        std::string note;
    };
    std::vector<Row> rows;
    std::optional<pde::IdentResult> first;
    for (std::size_t run = 0; run < c.runs; ++run) {
        auto rc = cfg;
        if (!init_spec.empty())
            rc.theta0 = parse_init(init_spec, box, cfg.seed, run);
        Row row;
        row.init = rc.theta0;
        try {
            auto res = pde::identify_conductivity(rc);
            row.error = res.max_node_error;
            row.time = res.report.stats.wall_time;
            row.failed = !(row.error <= failure_tol);
            if (row.failed)
                row.note = "node error above tolerance";
            if (!first)
                first = std::move(res);
        } catch (const Error& e) {
            row.failed = true;
            row.error = std::numeric_limits<double>::quiet_NaN();
            row.note = e.what();
            err << "run " << run << ": " << e.what() << '\n';
        }
        rows.push_back(std::move(row));
    }

    std::size_t failures = 0;
    double total_time = 0.0;
    for (const auto& r : rows) {
        failures += r.failed ? 1 : 0;
        total_time += r.time;
    }
    const double mean_time = total_time / static_cast<double>(rows.size());

    if (!c.out_dir.empty()) {
        const auto dir = ensure_dir(c.out_dir);
        if (first) {
            write_file(dir / "conductivity.csv",
                       [&](std::ostream& os) { write_conductivity_csv(os, cfg, *first); });
            write_file(dir / "report.json",
                       [&](std::ostream& os) { os << ident_json(*first).dump(2) << '\n'; });
        }
        if (batch)
            write_file(dir / "batch.csv", [&](std::ostream& os) {
                os << "# boxflow pde-batch v1\nrun";
                for (Index j = 0; j < n; ++j)
                    os << ",init_" << j + 1;
                os << ",max_node_error,wall_time,failed\n";
                for (std::size_t i = 0; i < rows.size(); ++i) {
                    os << i;
                    for (Index j = 0; j < n; ++j)
                        os << ',' << fmt(rows[i].init[j]);
                    os << ',' << fmt(rows[i].error) << ',' << fmt(rows[i].time) << ','
                       << (rows[i].failed ? 1 : 0) << '\n';
                }
            });
    }

    if (c.format == "json") {
        json j = {{"runs", rows.size()}, {"failures", failures}, {"mean_wall_time", mean_time}};
        if (first)
            j["first_run"] = ident_json(*first);
        out << j.dump(2) << '\n';
    } else {
        out << "# boxflow pde-ident v1\n";
        out << "runs,failures,mean_wall_time,first_max_node_error\n";
        out << rows.size() << ',' << failures << ',' << fmt(mean_time) << ','
            << fmt(first ? first->max_node_error : std::numeric_limits<double>::quiet_NaN())
            << '\n';
    }
    return failures == 0 ? kExitOk : kExitSolverFailure;
}

} // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Box-constrained optimization by dynamic optimization equations", "boxflow"};
    app.require_subcommand(1);
    Common c;

    auto* solve = app.add_subcommand("solve", "Solve one problem and emit its trajectory");
    add_common(solve, c);
    auto* bench = app.add_subcommand("bench", "Repeated solves from random initial points");
    add_common(bench, c);
    bench->add_option("--methods", c.methods, "comma-separated method list");
    auto* compare = app.add_subcommand("compare", "Compare the trajectories of two methods");
    add_common(compare, c);
    compare->add_option("--methods", c.methods, "two comma-separated methods");
    auto* pde = app.add_subcommand("pde-ident", "Conductivity identification case study");
    add_common(pde, c);
    pde->add_option("--config", c.config, "key = value configuration file");

    try {
        std::vector<std::string> rev(args.rbegin(), args.rend());
        app.parse(rev);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err) == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (solve->parsed())
            return cmd_solve(c, out, err);
        if (bench->parsed())
            return cmd_bench(c, out, err);
        if (compare->parsed())
            return cmd_compare(c, out, err);
        return cmd_pde_ident(c, *pde, out, err);
    } catch (const ArgumentError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const MethodContractError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kExitSolverFailure;
    } catch (const fs::filesystem_error& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    }
}

} // namespace boxflow::cli
