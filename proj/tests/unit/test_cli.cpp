#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <boxflow/cli.hpp>
#include <boxflow/errors.hpp>
#include <boxflow/problems.hpp>

using namespace boxflow;
using namespace boxflow::cli;

namespace {

struct Run {
    int code;
    std::string out, err;
};

Run run(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

std::filesystem::path scratch(const std::string& name) {
    auto p = std::filesystem::temp_directory_path() / ("boxflow_test_" + name);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

} // namespace

TEST(Parse, Gain) {
    EXPECT_EQ(parse_gain("2", 2).apply(Vec::Ones(2)), Vec::Constant(2, 2.0));
    EXPECT_EQ(parse_gain("diag:0.5,1", 2).diagonal_entries(), (Vec(2) << 0.5, 1).finished());
    EXPECT_FALSE(parse_gain("dense:0.5,0.2;0.2,1", 2).is_diagonal());
    EXPECT_THROW(parse_gain("diag:1", 2), ArgumentError);
    EXPECT_THROW(parse_gain("dense:1,2;2,1", 2), ArgumentError);
    EXPECT_THROW(parse_gain("abc", 2), ArgumentError);
}

TEST(Parse, Init) {
    const auto p = example1();
    EXPECT_EQ(parse_init("5,5", p, 0, 0), (Vec(2) << 5, 5).finished());
    EXPECT_EQ(parse_init("const:1.5", p, 0, 0), Vec::Constant(2, 1.5));
    const Vec u = parse_init("uniform", p, 9, 3);
    EXPECT_TRUE(check_feasible(u, p, 0.0).feasible);
    EXPECT_EQ(parse_init("uniform", p, 9, 3), u);
    EXPECT_NE(parse_init("uniform", p, 9, 4), u);
    const Vec w = parse_init("uniform:2,3", p, 1, 0);
    EXPECT_TRUE((w.array() >= 2).all() && (w.array() <= 3).all());
    EXPECT_THROW(parse_init("1,2,3", p, 0, 0), ArgumentError);
}

TEST(Parse, Names) {
    EXPECT_EQ(parse_method("unconstrained-like"), Method::UnconstrainedLike);
    EXPECT_EQ(parse_method("general-dynamic"), Method::GeneralDynamic);
    EXPECT_EQ(parse_method("pgd"), Method::ProjectedGradientBaseline);
    EXPECT_EQ(parse_integrator("stiff"), IntegratorKind::StiffImplicit);
    EXPECT_EQ(parse_integrator("rk45"), IntegratorKind::ExplicitRK45);
    EXPECT_THROW(parse_method("newton"), ArgumentError);
}

TEST(Solve, FirstExampleCsv) {
    const auto dir = scratch("solve");
    const auto r = run({"solve", "--problem", "example1", "--method", "unconstrained-like", "--gain",
                        "diag:0.5,1", "--init", "5,5", "--horizon", "100", "--out-dir", dir.string()});
    EXPECT_EQ(r.code, kExitOk) << r.err;
    std::istringstream is(r.out);
    std::string line;
    std::getline(is, line);
    EXPECT_EQ(line.rfind("#", 0), 0u);
    std::getline(is, line);
    EXPECT_EQ(line, "tau,theta_1,theta_2,f,residual");
    EXPECT_TRUE(std::filesystem::exists(dir / "trajectory.csv"));
    EXPECT_TRUE(std::filesystem::exists(dir / "report.json"));
}

TEST(Solve, JsonReport) {
    const auto r = run({"solve", "--problem", "example2:0.1", "--init", "0.5,0.5", "--format", "json"});
    EXPECT_EQ(r.code, kExitOk) << r.err;
    EXPECT_NE(r.out.find("\"strict_complementarity\": true"), std::string::npos);
}

TEST(Solve, UsageErrors) {
    EXPECT_EQ(run({"solve", "--problem", "nope"}).code, kExitUsage);
    EXPECT_EQ(run({"solve", "--problem", "example1", "--gain", "dense:0.5,0.2;0.2,1"}).code, kExitUsage);
    EXPECT_EQ(run({"frobnicate"}).code, kExitUsage);
    EXPECT_EQ(run({}).code, kExitUsage);
}

TEST(Bench, DeterministicApartFromTiming) {
    const std::vector<std::string> args{"bench", "--problem", "example1", "--runs", "2", "--seed", "5",
                                        "--format", "json"};
    const auto a = run(args), b = run(args);
    ASSERT_EQ(a.code, kExitOk) << a.err;
    auto strip = [](const std::string& s) {
        std::string out;
        std::istringstream is(s);
        for (std::string line; std::getline(is, line);)
            if (line.find("wall_time") == std::string::npos)
                out += line + '\n';
        return out;
    };
    EXPECT_EQ(strip(a.out), strip(b.out));
    EXPECT_NE(a.out.find("\"successes\": 2"), std::string::npos);
}

TEST(Compare, SelfIsZero) {
    const auto r = run({"compare", "--problem", "example1", "--methods",
                        "unconstrained-like,unconstrained-like", "--init", "5,5", "--format", "json"});
    ASSERT_EQ(r.code, kExitOk) << r.err;
    EXPECT_NE(r.out.find("\"max_difference\": 0.0"), std::string::npos) << r.out;
}

TEST(PdeIdent, MissingKeyIsNamed) {
    const auto dir = scratch("cfg");
    {
        std::ofstream os(dir / "bad.conf");
        os << "material.rho = 1000\nmaterial.cp = 1000\nmaterial.L = 0.01\n"
              "grid.nx = 21\ngrid.dt = 0.5\ngrid.t_end = 50\n"
              "nodes.count = 5\nnodes.t_min = 600\n# nodes.t_max missing\n"
              "noise.sigma = 0\nseed = 0\n";
    }
    const auto r = run({"pde-ident", "--config", (dir / "bad.conf").string()});
    EXPECT_EQ(r.code, kExitUsage);
    EXPECT_NE(r.err.find("nodes.t_max"), std::string::npos) << r.err;
}

TEST(PdeIdent, ConfigKeys) {
    std::map<std::string, std::string> keys{
        {"material.rho", "1000"}, {"material.cp", "1000"}, {"material.L", "0.01"},
        {"grid.nx", "21"},        {"grid.dt", "0.5"},      {"grid.t_end", "50"},
        {"nodes.count", "5"},     {"nodes.t_min", "600"},  {"nodes.t_max", "1000"},
        {"noise.sigma", "6"},     {"seed", "4"}};
    const auto cfg = ident_config_from_keys(keys);
    EXPECT_EQ(cfg.grid.nx, 21);
    EXPECT_EQ(cfg.noise_sigma, 6.0);
    EXPECT_EQ(cfg.seed, 4u);
    keys["bogus"] = "1";
    EXPECT_THROW(ident_config_from_keys(keys), ArgumentError);
}
