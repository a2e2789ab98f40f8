#include <gtest/gtest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

struct CliResult {
    int code = -1;
    std::string out;
};

fs::path work_dir() {
    static const fs::path dir = [] {
        fs::path d = fs::path(UNIQCERT_TEST_TMP) / "cli";
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

CliResult run(const std::string& args) {
    static int counter = 0;
    const fs::path log = work_dir() / ("run_" + std::to_string(::getpid()) + "_" + std::to_string(counter++) + ".log");
    const std::string cmd = std::string("\"") + UNIQCERT_CLI_PATH + "\" " + args + " > \"" + log.string() + "\" 2>&1";
    const int status = std::system(cmd.c_str());
    CliResult r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    std::ifstream in(log);
    std::ostringstream s;
    s << in.rdbuf();
    r.out = s.str();
    return r;
}

std::string read(const fs::path& p) {
    std::ifstream in(p);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

std::string generated(const std::string& name, const std::string& args) {
    const fs::path out = work_dir() / (name + ".csv");
    if (!fs::exists(out)) {
        CliResult r = run("generate " + args + " --out " + out.string());
        EXPECT_EQ(r.code, 0) << r.out;
    }
    return out.string();
}

}  // namespace

TEST(Cli, GenerateWritesGridAndManifest) {
    const std::string csv = generated("transport", "--case transport_exp --a 3");
    std::ifstream in(csv);
    std::string line;
    std::size_t lines = 0;
    while (std::getline(in, line)) ++lines;
    EXPECT_EQ(lines, 60002u);
    const std::string manifest = read(csv + ".manifest");
    EXPECT_NE(manifest.find("sha256"), std::string::npos);
    EXPECT_NE(manifest.find("[sfranco]"), std::string::npos);
}

TEST(Cli, CertifyExitCodesFollowTheVerdict) {
    const std::string tr = generated("transport", "--case transport_exp --a 3");
    EXPECT_EQ(run("certify --in " + tr + " --class linear --inputs u,u_x").code, 10);
    EXPECT_EQ(run("certify --in " + tr + " --class smooth --inputs u,u_x").code, 30);
    const std::string lg = generated("growth", "--case linear_growth --a 1 --b 2");
    CliResult r = run("certify --in " + lg + " --class linear --inputs u,u_x");
    EXPECT_EQ(r.code, 0) << r.out;
    EXPECT_NE(r.out.find("UNIQUE"), std::string::npos);
}

TEST(Cli, SfrancoPrintsSeriesAndWritesPlot) {
    const std::string tr = generated("transport", "--case transport_exp --a 3");
    const fs::path out = work_dir() / "series.csv";
    CliResult r = run("sfranco --in " + tr + " --features 'kind=linear; inputs=u,u_x' --max-order 7 --out " + out.string());
    EXPECT_EQ(r.code, 0) << r.out;
    EXPECT_NE(r.out.find("rounded up to 8"), std::string::npos);
    EXPECT_NE(r.out.find("summary: decaying=true"), std::string::npos);
    EXPECT_EQ(read(out).rfind("order,sigma_min\n", 0), 0u);
    EXPECT_TRUE(fs::exists(work_dir() / "series.svg"));
}

TEST(Cli, JrcAndDifferentiate) {
    const std::string rc = generated("reciprocal", "--case reciprocal --counts 80,80");
    CliResult r = run("jrc --in " + rc + " --inputs u,u_x --stride 2 --out " + (work_dir() / "map.csv").string());
    EXPECT_EQ(r.code, 0) << r.out;
    EXPECT_NE(r.out.find("classification=NOWHERE_FULL_RANK"), std::string::npos);
    EXPECT_EQ(run("jrc --in " + rc + " --inputs u,u_x --stride 0 --out " + (work_dir() / "m.csv").string()).code, 64);
    CliResult d = run("differentiate --in " + rc + " --deriv u_tx --order 4 --out " + (work_dir() / "d.csv").string());
    EXPECT_EQ(d.code, 0) << d.out;
    EXPECT_NE(read(work_dir() / "d.csv").find("# label: u_tx"), std::string::npos);
}

TEST(Cli, ErrorsMapToExitCodes) {
    EXPECT_EQ(run("generate --case nonsense --out " + (work_dir() / "x.csv").string()).code, 64);
    EXPECT_EQ(run("frobnicate").code, 64);
    EXPECT_EQ(run("reproduce 9.9.9 --out-dir " + (work_dir() / "r").string()).code, 64);
    const fs::path bad = work_dir() / "bad.csv";
    std::ofstream(bad) << "# axes: t:0:1:2\n# label: u\n0,1\n";
    EXPECT_EQ(run("certify --in " + bad.string() + " --class linear --inputs u").code, 65);
    EXPECT_EQ(run("--version").code, 0);
}

TEST(Cli, ReproduceWritesArtifacts) {
    const fs::path dir = work_dir() / "repro";
    CliResult r = run("reproduce 5.1.1 --out-dir " + dir.string());
    EXPECT_EQ(r.code, 0) << r.out;
    EXPECT_TRUE(fs::exists(dir / "checks.txt"));
    EXPECT_TRUE(fs::exists(dir / "manifest.txt"));
    std::size_t svgs = 0;
    for (const auto& e : fs::directory_iterator(dir)) svgs += e.path().extension() == ".svg";
    EXPECT_GE(svgs, 1u);
}
