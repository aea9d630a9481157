#include <gtest/gtest.h>

#include <sys/wait.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

namespace {

struct Outcome {
    int status;
    std::string out;
};

Outcome run(const std::string& args) {
    std::string cmd = std::string(QFRESH_BIN) + " " + args + " 2>&1";
    FILE* p = popen(cmd.c_str(), "r");
    std::string out;
    char buf[4096];
    while (std::fgets(buf, sizeof buf, p)) out += buf;
    int st = pclose(p);
    return {WIFEXITED(st) ? WEXITSTATUS(st) : -1, out};
}

std::string temp_path(const std::string& name) { return std::string(QFRESH_TMP) + "/" + name; }

int count_lines(const std::string& s) { return static_cast<int>(std::count(s.begin(), s.end(), '\n')); }

}  // namespace

TEST(Cli, MbfSweep) {
    Outcome r = run("mbf --preset fig6a --estimators me,tmap,pmap --mu 0.05:1:0.05");
    ASSERT_EQ(r.status, 0) << r.out;
    EXPECT_EQ(count_lines(r.out), 61);
    EXPECT_EQ(r.out.substr(0, r.out.find('\n')), "mu,estimator,mbf,method,std_error");
}

TEST(Cli, ErlangTwoStagesEqualsExponential) {
    Outcome a = run("mbf --preset fig6a --estimator erle --gamma 2 --lam 0.5 --mu 0.1,0.5,1");
    Outcome b = run("mbf --preset fig6a --estimator expe --lam 1.0 --mu 0.1,0.5,1");
    ASSERT_EQ(a.status, 0);
    std::istringstream ia(a.out), ib(b.out);
    std::string la, lb;
    std::getline(ia, la);
    std::getline(ib, lb);
    while (std::getline(ia, la) && std::getline(ib, lb)) {
        auto third = [](const std::string& s) {
            std::istringstream is(s);
            std::string f;
            for (int k = 0; k < 3; ++k) std::getline(is, f, ',');
            return std::stod(f);
        };
        EXPECT_NEAR(third(la), third(lb), 1e-12);
    }
}

TEST(Cli, ExitCodes) {
    EXPECT_EQ(run("mbf --preset fig6a --mu 0").status, 2);
    EXPECT_EQ(run("mbf --mu 0.3").status, 2);
    EXPECT_EQ(run("mbf --preset nope --mu 0.3").status, 2);
    EXPECT_EQ(run("bogus").status, 2);
    EXPECT_EQ(run("simulate --config /nonexistent.ini").status, 2);
    EXPECT_EQ(run("presets").status, 0);
    EXPECT_EQ(run("--help").status, 0);
    Outcome bad = run("multi --random-bdc 5 --budget 0.02 --rho-l 0.01 --rho-u 1");
    EXPECT_EQ(bad.status, 2);
    EXPECT_NE(bad.out.find("InfeasibleBounds"), std::string::npos) << bad.out;
}

TEST(Cli, SmdpAndPolicyRoundTrip) {
    std::string pol = temp_path("fig9_policy.ini");
    Outcome s = run("smdp --preset fig9 --omega 0.3 --estimator me --policy-out " + pol);
    ASSERT_EQ(s.status, 0) << s.out;
    EXPECT_NE(s.out.find("type = ssp"), std::string::npos);
    Outcome sim = run("simulate --preset fig9 --policy " + pol + " --sojourns 2e5 --reps 4 --seed 3 --validate");
    ASSERT_EQ(sim.status, 0) << sim.out;
    auto value = [&](const std::string& key) {
        auto p = sim.out.find(key + " = ");
        return std::stod(sim.out.substr(p + key.size() + 3));
    };
    EXPECT_LE(std::abs(value("z_omega")), 3.0);
    EXPECT_LE(std::abs(value("z_mbf")), 3.0);
    EXPECT_NEAR(value("closed_omega"), 0.3, 1e-6);
}

TEST(Cli, SimulateIsDeterministic) {
    std::string args = "simulate --preset fig4 --mu 0.5 --estimator tmap --sojourns 1e4 --reps 2 --seed 5";
    Outcome a = run(args), b = run(args);
    ASSERT_EQ(a.status, 0) << a.out;
    EXPECT_EQ(a.out, b.out);
}

TEST(Cli, MultiColumns) {
    Outcome r = run("multi --random-bdc 5 --seed 2024 --budget 1:3:1");
    ASSERT_EQ(r.status, 0) << r.out;
    EXPECT_EQ(count_lines(r.out), 1 + 3 * 6);
    std::ofstream cfg(temp_path("two.ini"));
    cfg << "[multi]\nbudget = 1\nestimator = me\n[source:a]\npreset = fig6a\nweight = 0.5\n"
           "[source:b]\npreset = fig6a\nweight = 0.5\n";
    cfg.close();
    Outcome two = run("multi --config " + temp_path("two.ini"));
    ASSERT_EQ(two.status, 0) << two.out;
    EXPECT_NE(two.out.find("\n1,a,0.5,"), std::string::npos);
}

TEST(Cli, TraceFile) {
    std::string path = temp_path("trace.csv");
    Outcome r = run("simulate --preset fig6a --mu 0.3 --estimator pmap --horizon 500 --reps 1 --trace " + path);
    ASSERT_EQ(r.status, 0) << r.out;
    std::ifstream in(path);
    std::string header;
    std::getline(in, header);
    EXPECT_EQ(header, "time,event,source,estimate,rate");
}
