// Runs the navslip executable end to end.

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("navslip_cli_test_" + name);
  fs::remove_all(p);
  return p;
}

int run(const std::string& args) {
  const std::string cmd = std::string(NAVSLIP_EXE) + " " + args + " -q 2>/dev/null";
  const int raw = std::system(cmd.c_str());
  return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
}

fs::path write_config(const fs::path& dir, const json& doc) {
  fs::create_directories(dir);
  const fs::path p = dir / "config.in.json";
  std::ofstream(p) << doc.dump(2);
  return p;
}

json read_json(const fs::path& p) {
  std::ifstream in(p);
  return json::parse(in);
}

std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

json small_torus() {
  return {{"format_version", 1},
          {"domain", {{"geometry", "torus"}}},
          {"discretization", {{"modes", 12}}},
          {"physics", {{"viscosity", 0.1}, {"damping", 1.0}, {"exponent", 3.0}}},
          {"time", {{"dt", 0.01}, {"final_time", 0.2}}}};
}

}  // namespace

TEST(Cli, SimulateZeroDataGivesZeroLedger) {
  const fs::path dir = scratch("zero");
  const fs::path cfg = write_config(dir, small_torus());
  ASSERT_EQ(run("simulate " + cfg.string() + " -o " + (dir / "out").string()), 0);
  std::ifstream ledger(dir / "out" / "ledger.csv");
  std::string line;
  std::getline(ledger, line);
  EXPECT_EQ(line, "t,E_l2,E_h1,E_damp,E_bdry,I_h1,I_damp,I_f");
  int rows = 0;
  while (std::getline(ledger, line)) {
    ++rows;
    std::stringstream ss(line);
    std::string cell;
    std::getline(ss, cell, ',');
    while (std::getline(ss, cell, ',')) EXPECT_EQ(std::stod(cell), 0.0) << line;
  }
  EXPECT_EQ(rows, 21);
  const json man = read_json(dir / "out" / "manifest.json");
  for (const char* k : {"version", "config", "basis_hash", "seeds", "wall_time_s", "artifacts"})
    EXPECT_TRUE(man.contains(k)) << k;
  EXPECT_FALSE(fs::exists(dir / "out" / "error.json"));
}

TEST(Cli, VerifyBasisOnShippedSlab) {
  const fs::path dir = scratch("verify");
  ASSERT_EQ(run("verify-basis " + std::string(NAVSLIP_CONFIGS) + "/slab.json -o " + dir.string()), 0);
  const json rep = read_json(dir / "report.json");
  EXPECT_TRUE(rep["pass"].get<bool>());
  EXPECT_LE(rep["checks"]["slip"]["value"].get<double>(), 1e-6);
}

TEST(Cli, EnergyReportOnDissipativeTorus) {
  const fs::path dir = scratch("energy");
  json doc = small_torus();
  doc["initial"] = {{"kind", "random"}, {"seed", 5}};
  const fs::path cfg = write_config(dir, doc);
  ASSERT_EQ(run("energy-report " + cfg.string() + " -o " + (dir / "out").string()), 0);
  const json rep = read_json(dir / "out" / "report.json");
  EXPECT_TRUE(rep["pass"].get<bool>());
  EXPECT_GE(rep["margin"].get<double>(), -rep["tolerance"].get<double>());
  EXPECT_EQ(read_json(dir / "out" / "manifest.json")["seeds"]["initial"], 5);
}

TEST(Cli, InvalidConfigStartsNothing) {
  const fs::path dir = scratch("invalid");
  json doc = small_torus();
  doc["physics"]["exponent"] = 0.5;
  doc["output"] = {{"directory", (dir / "out").string()}};
  const fs::path cfg = write_config(dir, doc);
  EXPECT_EQ(run("simulate " + cfg.string()), 2);
  EXPECT_FALSE(fs::exists(dir / "out"));
  EXPECT_EQ(run("simulate " + (dir / "missing.json").string()), 2);
  EXPECT_EQ(run("frobnicate " + cfg.string()), 2);
}

TEST(Cli, FailedCheckExitsNonzeroWithErrorJson) {
  const fs::path dir = scratch("failcheck");
  json doc = small_torus();
  doc["study"] = {{"gram_tol", 1e-30}};
  const fs::path cfg = write_config(dir, doc);
  EXPECT_EQ(run("verify-basis " + cfg.string() + " -o " + (dir / "out").string()), 1);
  EXPECT_EQ(read_json(dir / "out" / "error.json")["error"]["kind"], "check-failed");
  EXPECT_FALSE(read_json(dir / "out" / "report.json")["pass"].get<bool>());
}

TEST(Cli, SolverFailureIsReported) {
  const fs::path dir = scratch("solverfail");
  json doc = small_torus();
  doc["initial"] = {{"kind", "modes"}, {"modes", json::array({{{"index", 0}, {"amplitude", 50.0}}})}};
  doc["time"] = {{"dt", 0.1}, {"final_time", 0.2}, {"picard_max_iter", 1}, {"picard_tol", 1e-15}};
  const fs::path cfg = write_config(dir, doc);
  EXPECT_EQ(run("simulate " + cfg.string() + " -o " + (dir / "out").string()), 3);
  EXPECT_EQ(read_json(dir / "out" / "error.json")["error"]["kind"], "picard-not-converged");
}

TEST(Cli, SerialRunsAreBitwiseIdentical) {
  const fs::path dir = scratch("repro");
  json doc = small_torus();
  doc["initial"] = {{"kind", "random"}, {"seed", 11}};
  doc["study"] = {{"modes", {4, 8, 12}}};
  const fs::path cfg = write_config(dir, doc);
  for (const std::string sub : {"energy-report", "twin", "converge-space"}) {
    const fs::path out = dir / sub;
    ASSERT_LE(run(sub + " " + cfg.string() + " --serial -o " + out.string()), 1) << sub;
    fs::rename(out, dir / (sub + ".first"));
    ASSERT_LE(run(sub + " " + cfg.string() + " --serial -o " + out.string()), 1) << sub;
    for (const auto& e : fs::directory_iterator(out)) {
      const std::string name = e.path().filename().string();
      if (name == "manifest.json") {
        json a = read_json(e.path()), b = read_json(dir / (sub + ".first") / name);
        a.erase("wall_time_s");
        b.erase("wall_time_s");
        EXPECT_EQ(a, b) << sub;
      } else {
        EXPECT_EQ(read_text(e.path()), read_text(dir / (sub + ".first") / name)) << sub << "/" << name;
      }
    }
  }
}
