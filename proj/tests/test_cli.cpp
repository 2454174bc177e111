#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli.hpp"

namespace fs = std::filesystem;
using mfdeg::cli::run;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result call(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("mfdeg_cli_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("degree examples") {
  auto r = call({"degree", "--chi", "2", "--rho1", "1.5", "--rho2", "1.5", "--format", "csv"});
  CHECK(r.code == 0);
  CHECK(r.out == "chi,rho1,rho2,degree\n2,3/2,3/2,-1\n");
  r = call({"degree", "--chi", "2", "--rho1", "1.5", "--rho2", "3.5", "--format", "csv"});
  CHECK(r.out.find(",2\n") != std::string::npos);
  r = call({"degree", "--chi", "0", "--rho1", "0.5", "--rho2", "2.5", "--format", "csv"});
  CHECK(r.out == "chi,rho1,rho2,degree\n0,1/2,5/2,1\n");
  r = call({"degree", "--chi", "2", "--rho1", "1", "--rho2", "0.5", "--format", "csv"});
  CHECK(r.out.find("CRIT") != std::string::npos);
  CHECK(r.err.find("config: ") != std::string::npos);
}

TEST_CASE("exit codes") {
  CHECK(call({"degree", "--rho1", "x/2", "--rho2", "1"}).code == 2);
  CHECK(call({"degree", "--rho1", "2.5", "--rho2", "1"}).code == 2);
  CHECK(call({"solve", "--n", "12"}).code == 2);
  CHECK(call({"bogus"}).code == 2);
  CHECK(call({"bubble", "--check", "mass", "--quadrature", "grid", "--grid-n", "64"}).code == 5);
  const auto r = call({"solve", "--n", "16", "--u0", "60*cos(2*pi*x)"});
  CHECK(r.code == 4);
  CHECK(r.out == "rho1,rho2,residual,max_u,neg_eigs,sigma1,sigma2\n");
  CHECK(call({"solve", "--n", "16", "--h1", "1 + 0.5*cos(2*pi*x)", "--rho1", "6*pi",
              "--max-iter", "1", "--u0", "cos(2*pi*y)"})
            .code == 3);
}

TEST_CASE("trivial solve converges quickly and writes files") {
  const fs::path dir = scratch("solve");
  const auto r = call({"solve", "--n", "16", "--out", dir.string()});
  CHECK(r.code == 0);
  CHECK(fs::exists(dir / "trace.csv"));
  CHECK(fs::exists(dir / "u.bin"));
  CHECK(fs::exists(dir / "config.json"));
  CHECK(slurp(dir / "report.json").find("\"newton_iters\": 0") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("config file values yield to flags") {
  const fs::path dir = scratch("config");
  fs::create_directories(dir);
  {
    std::ofstream f(dir / "cfg.json");
    f << R"({"command": "degree", "chi": 0, "rho1": "0.5", "rho2": [0.5, 2.5], "format": "csv"})";
  }
  auto r = call({"--config", (dir / "cfg.json").string()});
  CHECK(r.code == 0);
  CHECK(r.out == "chi,rho1,rho2,degree\n0,1/2,1/2,1\n0,1/2,5/2,1\n");
  r = call({"degree", "--config", (dir / "cfg.json").string(), "--chi", "2"});
  CHECK(r.out == "chi,rho1,rho2,degree\n2,1/2,1/2,1\n2,1/2,5/2,0\n");
  CHECK(r.err.find("\"chi\":\"2\"") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("bubble and shadow commands") {
  auto r = call({"bubble", "--check", "mass", "--lambdas", "8,10,12"});
  CHECK(r.code == 0);
  CHECK(r.out.rfind("lambda,measured,predicted,residual,fitted_exponent\n", 0) == 0);
  CHECK(std::count(r.out.begin(), r.out.end(), '\n') == 4);

  const fs::path dir = scratch("proj");
  r = call({"bubble", "--check", "projections", "--out", dir.string()});
  CHECK(r.code == 0);
  for (const char* f : {"projection_dq.csv", "projection_dlambda.csv", "projection_vq.csv"})
    CHECK(fs::exists(dir / f));
  fs::remove_all(dir);

  r = call({"shadow", "--n", "16", "--decoupled", "--starts", "0.1,0.9", "--format", "json"});
  CHECK(r.code == 0);
  CHECK(r.out.find("\"morse_sign\": 1") != std::string::npos);
}

TEST_CASE("identical runs give identical CSV") {
  const auto a = call({"bubble", "--check", "bilinear", "--grid-n", "64", "--lambda", "4",
                       "--samples", "3", "--seed", "9"});
  const auto b = call({"bubble", "--check", "bilinear", "--grid-n", "64", "--lambda", "4",
                       "--samples", "3", "--seed", "9"});
  CHECK(a.code == 0);
  CHECK(a.out == b.out);
}
