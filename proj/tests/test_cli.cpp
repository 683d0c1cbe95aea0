#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "byod/cli.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Outcome {
  int code = 0;
  std::string out;
  std::string err;
};

Outcome invoke(std::vector<std::string> args) {
  std::ostringstream out, err;
  int code = byod::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

// Runs the installed executable through the shell; stderr is discarded.
Outcome exec(const std::string& args) {
  std::string cmd = std::string(BYODSIM_EXE) + " " + args + " 2>/dev/null";
  Outcome o;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return {-1, {}, {}};
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) o.out.append(buf, n);
  int status = pclose(pipe);
  o.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return o;
}

fs::path write_temp(const std::string& name, const std::string& text) {
  auto p = fs::temp_directory_path() / name;
  std::ofstream(p) << text;
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

class ConfigEnv {
 public:
  explicit ConfigEnv(const fs::path& p) { setenv("BYODSIM_CONFIG", p.c_str(), 1); }
  ~ConfigEnv() { unsetenv("BYODSIM_CONFIG"); }
};

}  // namespace

TEST(Cli, CapacityEqualShare) {
  auto r = invoke({"capacity", "--channels", "300,300", "--clients", "50"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NEAR(json::parse(r.out).at("per_client_mbps").get<double>(), 2.475, 1e-9);
}

TEST(Cli, CapacityAirtime) {
  auto r = invoke({"capacity", "--rates", "54,54,6"});
  ASSERT_EQ(r.code, 0) << r.err;
  auto j = json::parse(r.out);
  auto shares = j.at("airtime_share").get<std::vector<double>>();
  ASSERT_EQ(shares.size(), 3u);
  // Per-packet airtime 1/54, 1/54, 1/6.
  double total = 1.0 / 54 + 1.0 / 54 + 1.0 / 6;
  EXPECT_NEAR(shares[2], (1.0 / 6) / total, 1e-12);
}

TEST(Cli, PolicyPreset) {
  auto r = invoke({"policy", "preset", "v2"});
  ASSERT_EQ(r.code, 0) << r.err;
  auto j = json::parse(r.out);
  EXPECT_EQ(j.at("domain_blacklist"), json::array({"youtube.com"}));
  EXPECT_EQ(j.at("redirect_target"), "knust.edu.gh");
  auto sec = invoke({"policy", "preset", "v5", "--companion"});
  ASSERT_EQ(sec.code, 0) << sec.err;
  EXPECT_TRUE(json::parse(sec.out).at("portal_enabled").get<bool>());
  EXPECT_EQ(invoke({"policy", "preset", "v1", "--companion"}).code, 1);
}

TEST(Cli, CategoryFileExtendsBlacklist) {
  auto file = write_temp("byod_cli_categories.txt", "# social\nfacebook.com\n  tiktok.com  # video\n\n");
  auto r = invoke({"policy", "preset", "v2", "--category-file", file.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(json::parse(r.out).at("domain_blacklist"), json::array({"facebook.com", "tiktok.com", "youtube.com"}));
  fs::remove(file);
  EXPECT_EQ(invoke({"policy", "preset", "v2", "--category-file", "/nonexistent/list"}).code, 1);
}

TEST(Cli, ExitCodes) {
  EXPECT_EQ(invoke({}).code, 2);
  EXPECT_EQ(invoke({"frobnicate"}).code, 2);
  EXPECT_EQ(invoke({"capacity", "--clients", "abc"}).code, 2);
  EXPECT_EQ(invoke({"simulate", "--scenario", "x.json"}).code, 2);  // no seed
  EXPECT_EQ(invoke({"policy", "preset", "v9"}).code, 1);
  EXPECT_EQ(invoke({"capacity", "--clients", "0"}).code, 1);
  EXPECT_EQ(invoke({"probe", "discovery", "--clients", "0"}).code, 2);
  auto bad = write_temp("byod_cli_bad_scenario.json", R"({"venue":"Classroom","n_clients":5,"duration":10})");
  auto r = invoke({"simulate", "--scenario", bad.string(), "--seed", "1"});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("InvalidScenario"), std::string::npos);
  fs::remove(bad);
}

TEST(Cli, Probes) {
  auto outsider = json::parse(invoke({"probe", "outsider", "--policy", "v4"}).out);
  EXPECT_EQ(outsider.at("outcome"), "Prevented");
  auto spoof = json::parse(invoke({"probe", "outsider", "--policy", "v4", "--redirect-mode", "IcmpRedirect", "--spoof"}).out);
  EXPECT_EQ(spoof.at("outcome"), "Succeeded");
  EXPECT_EQ(json::parse(invoke({"probe", "discovery", "--clients", "30"}).out).at("discoverable_peers"), 29);
  auto clone = json::parse(invoke({"probe", "clone"}).out);
  EXPECT_EQ(clone.at("outcome"), "Prevented");
  EXPECT_TRUE(clone.at("flagged").get<bool>());
  auto expired = json::parse(invoke({"probe", "clone", "--expired"}).out);
  EXPECT_EQ(expired.at("clone_verdict"), "Expired");
  auto matrix = json::parse(invoke({"probe", "matrix"}).out);
  EXPECT_EQ(matrix.at("OutsiderJoin").at("v1"), "Succeeded");
  EXPECT_EQ(matrix.at("OutsiderJoin").at("proposed"), "Prevented");
  EXPECT_EQ(matrix.at("Eavesdrop").at("proposed"), "Prevented");
}

TEST(Cli, ValidatePrintsViolations) {
  auto clean = invoke({"validate"});
  EXPECT_EQ(clean.code, 0);
  EXPECT_TRUE(clean.out.empty());
  auto topo = write_temp("byod_cli_topology.json", R"({
    "zones": [{"name": "PublicDMZ", "members": [{"address": "172.16.1.99", "role": "Host", "label": "kiosk"}]}],
    "rules": [{"src": "AccessNet", "dst": "Any", "service": "Mgmt", "action": "Allow"}]
  })");
  auto r = invoke({"validate", "--topology", topo.string()});
  EXPECT_EQ(r.code, 0);
  std::istringstream lines(r.out);
  std::vector<std::string> kinds;
  for (std::string line; std::getline(lines, line);) kinds.push_back(json::parse(line).at("kind"));
  EXPECT_EQ(kinds, (std::vector<std::string>{"NonServerInDmz", "MgmtBackdoor", "MissingDefaultDeny"}));
  fs::remove(topo);
}

TEST(Cli, SimulateWritesArtifactsAndAuditQueryIsVerbatim) {
  auto scenario = write_temp("byod_cli_scenario.json",
                             R"({"venue":"Classroom","n_clients":10,"policy":"v4","duration":700})");
  auto audit = fs::temp_directory_path() / "byod_cli_audit.jsonl";
  auto metrics = fs::temp_directory_path() / "byod_cli_metrics.json";
  auto samples = fs::temp_directory_path() / "byod_cli_samples.jsonl";
  auto r = invoke({"simulate", "--scenario", scenario.string(), "--seed", "4", "--out", metrics.string(),
                   "--audit-out", audit.string(), "--samples-out", samples.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(slurp(metrics), r.out);
  EXPECT_EQ(json::parse(r.out).at("login_success"), 20);
  EXPECT_FALSE(slurp(samples).empty());

  auto q = invoke({"audit", "query", "--log", audit.string(), "--event", "LoginOk"});
  ASSERT_EQ(q.code, 0) << q.err;
  std::istringstream all(slurp(audit));
  std::string expected;
  for (std::string line; std::getline(all, line);) {
    if (json::parse(line).at("event") == "LoginOk") expected += line + "\n";
  }
  EXPECT_EQ(q.out, expected);
  EXPECT_EQ(invoke({"audit", "detect", "--log", audit.string()}).code, 0);
  for (const auto& p : {scenario, audit, metrics, samples}) fs::remove(p);
}

TEST(Cli, ConfigFileSuppliesDefaults) {
  auto config = write_temp("byod_cli_config.json", R"({"capacity": {"channels": "150,150", "clients": 10},
                                                       "probe outsider": {"policy": "v4"}})");
  ConfigEnv env(config);
  auto r = invoke({"capacity"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NEAR(json::parse(r.out).at("per_client_mbps").get<double>(), 300 * 0.55 * 0.5 * 0.75 / 10, 1e-9);
  auto flag_wins = invoke({"capacity", "--clients", "5"});
  EXPECT_NEAR(json::parse(flag_wins.out).at("per_client_mbps").get<double>(), 300 * 0.55 * 0.5 * 0.75 / 5, 1e-9);
  EXPECT_EQ(json::parse(invoke({"probe", "outsider"}).out).at("outcome"), "Prevented");
  EXPECT_EQ(json::parse(invoke({"probe", "outsider", "--policy", "v1"}).out).at("outcome"), "Succeeded");
  fs::remove(config);
}

TEST(Cli, ExecutableEndToEnd) {
  auto r = exec("capacity --clients 50");
  EXPECT_EQ(r.code, 0);
  EXPECT_NEAR(json::parse(r.out).at("per_client_mbps").get<double>(), 2.475, 1e-9);
  EXPECT_EQ(exec("--no-such-flag").code, 2);
  EXPECT_EQ(exec("policy preset v9").code, 1);
  EXPECT_EQ(exec("--help").code, 0);
}
