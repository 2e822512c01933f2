#include <catch2/catch_amalgamated.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "slabprox/io.hpp"

namespace fs = std::filesystem;
using slabprox::json;

namespace {

const std::string kCli = SLABPROX_CLI_PATH;

int run(const std::string& args) {
  const std::string cmd = "\"" + kCli + "\" " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "slabprox_cli_tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string simulate_small(const std::string& name) {
  const fs::path dir = fresh_dir(name);
  REQUIRE(run("simulate --n 20 --d 6 --s 2 --rho 0.4 --v 1.5 --sigma 1 --seed 3 --out \"" +
              dir.string() + "\"") == 0);
  return dir.string();
}

}  // namespace

TEST_CASE("simulate writes a complete scenario", "[cli]") {
  const std::string dir = simulate_small("sim");
  const Eigen::MatrixXd X = slabprox::load_csv_matrix(dir + "/X.csv");
  REQUIRE(X.rows() == 20);
  REQUIRE(X.cols() == 6);
  const Eigen::MatrixXd z = slabprox::load_csv_matrix(dir + "/z.csv");
  REQUIRE(z.rows() == 20);
  REQUIRE(z.cols() == 1);
  const Eigen::MatrixXd truth = slabprox::load_csv_matrix(dir + "/truth.csv");
  REQUIRE(truth.rows() == 6);
  REQUIRE(truth.cols() == 2);
  REQUIRE(truth.col(1).sum() == 2.0);

  const json meta = slabprox::read_json(dir + "/meta.json");
  REQUIRE(meta["n"] == 20);
  REQUIRE(meta["seed"] == 3);
}

TEST_CASE("fit reruns are byte identical", "[cli]") {
  const std::string data = simulate_small("fit_data");
  const std::string common = "fit --x \"" + data + "/X.csv\" --z \"" + data + "/z.csv\" --truth \"" +
                             data + "/truth.csv\" --sweeps 400 --burn-in 100 --thin 2";

  const fs::path a = fresh_dir("fit_a");
  const fs::path b = fresh_dir("fit_b");
  const fs::path c = fresh_dir("fit_c");
  REQUIRE(run(common + " --seed 11 --out \"" + a.string() + "\"") == 0);
  REQUIRE(run(common + " --seed 11 --out \"" + b.string() + "\"") == 0);
  REQUIRE(run(common + " --seed 12 --out \"" + c.string() + "\"") == 0);

  REQUIRE(slurp(a / "trace.jsonl") == slurp(b / "trace.jsonl"));
  REQUIRE(slurp(a / "report.json") == slurp(b / "report.json"));
  REQUIRE(slurp(a / "curves.csv") == slurp(b / "curves.csv"));
  REQUIRE(slurp(a / "trace.jsonl") != slurp(c / "trace.jsonl"));

  const json report = slabprox::read_json((a / "report.json").string());
  REQUIRE(report["config"]["sweeps"] == 400);
  REQUIRE(report["data"]["d"] == 6);
  REQUIRE(report["summary"]["theta_mean"].size() == 6);
  REQUIRE(report["trace_records"] == 200);  // thinned trace covers burn-in too
  REQUIRE(report.contains("f_prox"));
  REQUIRE_FALSE(report["summary"].contains("wall_seconds"));
}

TEST_CASE("fit aggregates replicated chains", "[cli]") {
  const std::string data = simulate_small("fit_reps");
  const fs::path out = fresh_dir("fit_reps_out");
  REQUIRE(run("fit --x \"" + data + "/X.csv\" --z \"" + data + "/z.csv\" --truth \"" + data +
              "/truth.csv\" --sweeps 300 --reps 2 --seed 5 --out \"" + out.string() + "\"") == 0);
  const json report = slabprox::read_json((out / "report.json").string());
  REQUIRE(report["replicates"].size() == 2);
  REQUIRE(report["aggregate"].contains("rel_err_mean"));
  REQUIRE(report["replicates"][0]["seed"] != report["replicates"][1]["seed"]);
}

TEST_CASE("validate reports pass or failure codes", "[cli]") {
  const fs::path out = fresh_dir("val");
  REQUIRE(run("validate --only 3 --out \"" + out.string() + "\"") == 0);
  const json rep = slabprox::read_json((out / "validation.json").string());
  REQUIRE(rep.size() == 1);
  REQUIRE(rep[0]["id"] == 3);
  REQUIRE(rep[0]["pass"] == true);

  REQUIRE(run("validate --only 9 --out \"" + out.string() + "\"") == 1);
}

TEST_CASE("eb writes pilot diagnostics", "[cli]") {
  const fs::path dir = fresh_dir("eb_data");
  REQUIRE(run("simulate --n 40 --d 10 --s 2 --rho 0.3 --v 3 --sigma 1 --seed 9 --out \"" +
              dir.string() + "\"") == 0);
  const fs::path out = fresh_dir("eb_out");
  REQUIRE(run("eb --x \"" + dir.string() + "/X.csv\" --z \"" + dir.string() + "/z.csv\" --out \"" +
              out.string() + "\"") == 0);
  const json eb = slabprox::read_json((out / "eb.json").string());
  REQUIRE(eb["kkt_residual"].get<double>() <= 1e-6);
  REQUIRE(eb["sigma2_hat"].get<double>() > 0.0);
  REQUIRE(eb["beta"].size() == 10);
}

TEST_CASE("configuration errors exit with one", "[cli]") {
  REQUIRE(run("fit --z only.csv") == 1);                     // missing required --x
  REQUIRE(run("fit --x nope.csv --z nope.csv") == 1);        // unreadable inputs
  REQUIRE(run("frobnicate") == 1);                           // unknown subcommand
  REQUIRE(run("") == 1);                                     // subcommand required
}
