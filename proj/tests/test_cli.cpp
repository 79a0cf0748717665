#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "atomarray/experiments.hpp"
#include "atomarray/io.hpp"

using namespace atomarray;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

std::string cli()
{
    const char* p = std::getenv("ATOMARRAY_CLI");
    return p ? p : "";
}

int run(const std::string& args, const fs::path& log)
{
    const int rc = std::system((cli() + " " + args + " > " + log.string() + " 2>&1").c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

} // namespace

TEST_CASE("csv fields")
{
    CHECK(csv_field("plain") == "plain");
    CHECK(csv_field("a,b") == "\"a,b\"");
    CHECK(csv_field("say \"hi\"") == "\"say \"\"hi\"\"\"");
    CHECK(std::stod(format_double(0.1 + 0.2)) == 0.1 + 0.2);
    CHECK(digest("abc") == digest("abc"));
    CHECK(digest("abc").size() == 16);
}

TEST_CASE("config validation")
{
    ExperimentConfig c;
    CHECK_NOTHROW(c.validate());
    c.experiment = "nope";
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c.experiment = "scheme2";
    c.beta = -1.0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c.beta = 0.04;
    c.settle = 10.0;
    c.t_end = 5.0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}

TEST_CASE("validate report")
{
    ExperimentConfig c;
    c.experiment = "scheme1";
    c.n_max = 3;
    ValidationReport v = validate_config(c);
    CHECK(v.basis_size == 1351);
    c.experiment = "scheme2";
    c.n_max = 0;
    v = validate_config(c);
    CHECK(v.rbeta == doctest::Approx(0.00354).epsilon(0.01));
    CHECK(v.warnings.empty());
    c.dt = 1.0;
    CHECK_FALSE(validate_config(c).warnings.empty());
    CHECK(round_down_125(0.0776) == doctest::Approx(0.05));
    CHECK(round_down_125(0.36) == doctest::Approx(0.2));
}

TEST_CASE("command line runs are reproducible")
{
    REQUIRE_FALSE(cli().empty());
    const fs::path dir = fs::temp_directory_path() / "atomarray_cli_test";
    fs::remove_all(dir);
    fs::create_directories(dir);
    const fs::path a = dir / "a", b = dir / "b";
    CHECK(run("run dispersion --kd 1.5707963 --grid 401 --out " + a.string(), dir / "a.log") == 0);
    CHECK(run("run dispersion --kd 1.5707963 --grid 401 --out " + b.string(), dir / "b.log") == 0);
    const std::string csv = slurp(a / "dispersion.csv");
    CHECK(csv == slurp(b / "dispersion.csv"));
    CHECK(csv.find("re_omega_gamma0") != std::string::npos);
    CHECK(slurp(dir / "a.log").find("config_hash") != std::string::npos);

    const fs::path cfg = dir / "run.ini";
    std::ofstream(cfg) << "N = 6\nsamples = 5\nseed = 3\n";
    CHECK(run("--config " + cfg.string() + " run bounds --samples 7 --out " + (dir / "c").string(), dir / "c.log") ==
          0);
    const std::string bounds = slurp(dir / "c" / "bounds.csv");
    CHECK(std::count(bounds.begin(), bounds.end(), '\n') == 4 + 1 + 7);

    CHECK(run("run nothing", dir / "d.log") == 2);
    CHECK(run("run scheme2 --beta -1", dir / "e.log") == 2);
    CHECK(run("validate scheme1 --n-max 3", dir / "f.log") == 0);
    CHECK(slurp(dir / "f.log").find("basis size: 1351") != std::string::npos);
    fs::remove_all(dir);
}
