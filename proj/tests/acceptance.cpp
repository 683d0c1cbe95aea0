// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>

#include "acl_oracle.hpp"
#include "byod/access_control.hpp"
#include "byod/capacity_model.hpp"
#include "byod/captive_portal.hpp"
#include "byod/policy_engine.hpp"
#include "byod/segmentation.hpp"
#include "byod/sim_harness.hpp"

using namespace byod;
namespace fs = std::filesystem;

namespace {

constexpr Timestamp kNow = 1700000000;

struct Check {
  bool ok = true;
  std::ostringstream why;

  void expect(bool cond, const std::string& what) {
    if (!cond && ok) why << what;
    ok = ok && cond;
  }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// 1. Capacity headline.
void capacity(Check& c) {
  auto t0 = std::chrono::steady_clock::now();
  auto ap = dual_band_ap("ap");
  DegradationFactors f;
  for (std::size_t n = 42; n <= 61; ++n) {
    double v = per_client_throughput(ap, n, f);
    c.expect(v >= 2.0 && v <= 3.0, "n=" + std::to_string(n) + " gives " + std::to_string(v));
  }
  const double expected = (300.0 + 300.0) * (1 - 0.45) * (1 - 0.50) * (1 - 0.25) / 50.0;
  double fifty = per_client_throughput(ap, 50, f);
  c.expect(std::abs(fifty - 2.475) <= 1e-9 && std::abs(expected - 2.475) <= 1e-9,
           "n=50 gives " + std::to_string(fifty));

  Scenario s;
  s.venue = Venue::LectureHall;
  s.n_clients = 50;
  s.policy = policy_from_tag("v5");
  s.duration = 30;
  auto result = run(s);
  for (const auto& sample : result.samples) {
    for (const auto& [id, mbps] : sample.per_client) {
      c.expect(std::abs(mbps - expected) <= 1e-9, "simulated " + id + " at " + std::to_string(mbps));
    }
  }
  c.expect(!result.samples.empty(), "no throughput samples");
  double elapsed = seconds_since(t0);
  c.expect(elapsed < 1.0, "took " + std::to_string(elapsed) + " s");
}

// 2. V4 session cycle.
void session_cycle(Check& c) {
  auto t0 = std::chrono::steady_clock::now();
  Scenario s;
  s.venue = Venue::Classroom;
  s.n_clients = 10;
  s.policy = policy_from_tag("v4");
  s.duration = 1500;
  s.seed = 42;
  auto result = run(s);
  std::map<std::string, std::vector<Timestamp>> logins;
  std::istringstream lines(result.audit_jsonl);
  for (std::string line; std::getline(lines, line);) {
    auto r = parse_audit_line(line);
    if (r.event == AuditEvent::LoginOk) logins[*r.who].push_back(r.when - s.start);
  }
  c.expect(logins.size() == s.n_clients, "clients with logins: " + std::to_string(logins.size()));
  const Seconds tick = s.browse_interval;
  for (const auto& [who, t] : logins) {
    c.expect(t.size() == 3, who + " logged in " + std::to_string(t.size()) + " times");
    if (t.size() != 3) continue;
    c.expect(t[0] >= 0 && t[0] <= tick, who + " first login at " + std::to_string(t[0]));
    c.expect(t[1] >= 600 && t[1] <= 600 + tick, who + " second login at " + std::to_string(t[1]));
    c.expect(t[2] >= 1200 && t[2] <= 1200 + tick, who + " third login at " + std::to_string(t[2]));
  }
  double elapsed = seconds_since(t0);
  c.expect(elapsed < 1.0, "took " + std::to_string(elapsed) + " s");
}

ClientDevice random_device(std::mt19937_64& rng) {
  auto d = make_client_device(1 + rng() % 100000, WifiTech::N, PostureClass::Compliant, kNow);
  MacAddress::Bytes b;
  for (auto& x : b) x = static_cast<std::uint8_t>(rng());
  d.mac = MacAddress(b);
  d.serial_imei.clear();
  for (int i = 0; i < 15; ++i) d.serial_imei.push_back(static_cast<char>('0' + rng() % 10));
  return d;
}

// 3. Certificate non-transferability.
void non_transferable(Check& c) {
  std::mt19937_64 rng(31337);
  auto key = SecretKey::from_string("acceptance-ca");
  RevocationList none;
  int pairs = 0;
  while (pairs < 1000) {
    auto a = random_device(rng);
    auto b = random_device(rng);
    if (rng() % 3 == 0) b.mac = a.mac;
    else if (rng() % 2 == 0) b.serial_imei = a.serial_imei;
    if (a.mac == b.mac && a.serial_imei == b.serial_imei) continue;
    DeviceRecord rec{a, "owner", PostureStatus::Cleared, {}, kNow, {}};
    auto cert = issue_certificate(rec, key, 3600, kNow);
    c.expect(verify_certificate(cert, b.mac, b.serial_imei, key, none, kNow) != CertVerdict::Valid,
             "transferred to " + b.mac.str());
    c.expect(verify_certificate(cert, a.mac, a.serial_imei, key, none, kNow) == CertVerdict::Valid,
             "owner rejected");
    ++pairs;
  }
  auto owner = random_device(rng);
  DeviceRecord rec{owner, "owner", PostureStatus::Cleared, {}, kNow, {}};
  auto text = serialize_certificate(issue_certificate(rec, key, 3600, kNow));
  int mutated = 0;
  while (mutated < 1000) {
    auto m = text;
    int flips = 1 + static_cast<int>(rng() % 3);
    for (int i = 0; i < flips; ++i) {
      auto pos = rng() % m.size();
      m[pos] = static_cast<char>(m[pos] ^ (1u << (rng() % 8)));
    }
    if (m == text) continue;
    c.expect(verify_serialized_certificate(m, owner.mac, owner.serial_imei, key, none, kNow) != CertVerdict::Valid,
             "mutated certificate accepted: " + m);
    ++mutated;
  }
}

// 4. NAC gating over a randomized fleet.
void nac_gating(Check& c) {
  std::mt19937_64 rng(2013);
  auto policy = proposed_design();
  auto rules = default_posture_rules();
  auto campus = default_campus();
  DhcpServer dhcp(campus);
  Gateway gateway;
  DeviceRegistry registry(1);
  std::size_t violating = 0;
  for (std::size_t i = 0; i < 200; ++i) {
    auto posture = static_cast<PostureClass>(rng() % 4);
    auto d = make_client_device(i + 1, WifiTech::N, posture, kNow);
    if (rng() % 5 == 0) d.antivirus.definitions_date = date_of(kNow) - std::chrono::days(31 + rng() % 400);
    std::string owner = "student-" + std::to_string(i);
    registry.enroll_owner(owner);
    registry.register_device(owner, d, kNow);
    auto result = registry.assess_posture(d.device_id(), rules, kNow);
    bool violates = evaluate_posture(d, rules, kNow).status == PostureStatus::Blocked;
    c.expect(violates == (result.status == PostureStatus::Blocked), "assessment disagrees for " + d.device_id());
    if (!violates) continue;
    ++violating;
    c.expect(nac_gate(*registry.find(d.device_id())) == GateDecision::NetworkOnly, d.device_id() + " not gated");
    c.expect(probe_outsider_join(policy, dhcp, registry, gateway, d, kNow) == ProbeOutcome::Prevented,
             d.device_id() + " got through");

    // Remediation: fresh definitions plus fixes for any other listed deficiency.
    auto fixed = d;
    fixed.antivirus.definitions_date = date_of(kNow);
    for (auto def : result.deficiencies) {
      if (def == Deficiency::DiscontinuedOS) fixed.os = {"Android", "12", date_of(kNow)};
      if (def == Deficiency::BannedDriver) std::erase_if(fixed.drivers, [&](const DriverInfo& x) {
          return rules.banned_drivers.contains(x);
        });
    }
    registry.update_device(owner, fixed, kNow + 60);
    auto again = registry.assess_posture(d.device_id(), rules, kNow + 60);
    c.expect(again.status == PostureStatus::Cleared, d.device_id() + " still blocked after remediation");
    c.expect(nac_gate(*registry.find(d.device_id())) == GateDecision::FullPipeline,
             d.device_id() + " not promoted");
  }
  c.expect(violating > 0, "fleet had no violating devices");
}

// 5. ACL oracle equivalence.
void acl_oracle(Check& c) {
  auto rules = default_ruleset();
  auto j = ruleset_to_json(rules);
  auto zones = default_zones();
  std::map<ZoneName, IpAddress> source;
  std::vector<std::pair<IpAddress, ZoneName>> hosts;
  for (const auto& z : zones) {
    if (!z.members.empty()) source.emplace(z.name, z.members.front().address);
    if (is_dmz(z.name)) {
      for (const auto& m : z.members) hosts.push_back({m.address, z.name});
    }
  }
  std::size_t triples = 0, agree = 0, internet_to_private = 0;
  for (auto sz : {ZoneName::AccessNet, ZoneName::Internet, ZoneName::Management, ZoneName::PublicDMZ}) {
    Endpoint src{source.at(sz), sz};
    for (const auto& [addr, dz] : hosts) {
      Endpoint dst{addr, dz};
      for (auto svc : kConcreteServices) {
        ++triples;
        auto got = permits(rules, src, dst, svc);
        auto want = oracle::decide(j, std::string(to_string(sz)), to_string(src.address),
                                   std::string(to_string(dz)), to_string(addr), std::string(to_string(svc)));
        if (want && *want == to_string(got)) ++agree;
        if (sz == ZoneName::Internet && dz == ZoneName::PrivateDMZ && got == AclAction::Allow) ++internet_to_private;
      }
    }
  }
  c.expect(triples == 224, "enumerated " + std::to_string(triples) + " triples");
  c.expect(agree == triples, std::to_string(triples - agree) + " disagreements");
  c.expect(internet_to_private == 0, std::to_string(internet_to_private) + " Internet->PrivateDMZ allows");
}

// 6. Gateway safety invariant.
void gateway_safety(Check& c) {
  std::mt19937_64 rng(606);
  Directory dir;
  for (int u = 0; u < 6; ++u) dir.add_student("u" + std::to_string(u), "pw" + std::to_string(u));
  auto policy = policy_from_tag("v4");
  std::size_t events = 0;
  for (int seq = 0; seq < 10000 && c.ok; ++seq) {
    Gateway gw;
    Timestamp now = kNow;
    int length = 5 + static_cast<int>(rng() % 30);
    for (int step = 0; step < length; ++step) {
      now += static_cast<Timestamp>(rng() % 300);
      Ipv4Address ip(0x0A090000u + 1 + static_cast<std::uint32_t>(rng() % 8));
      switch (rng() % 3) {
        case 0: {
          auto u = std::to_string(rng() % 7);  // u6 does not exist
          bool right = rng() % 4 != 0;
          dir.set_available(rng() % 10 != 0);
          gw.login(dir, {"u" + u, right ? "pw" + u : "nope", std::nullopt}, {ip, MacAddress(), "ap"},
                   std::nullopt, policy, now);
          dir.set_available(true);
          break;
        }
        case 1: gw.expire_sessions(now); break;
        default: gw.on_disconnect(ip, now); break;
      }
      ++events;
      if (gw.authorized_ips() != gw.active_session_ips()) {
        c.expect(false, "sequence " + std::to_string(seq) + " step " + std::to_string(step));
        break;
      }
    }
  }
  c.expect(events > 10000, "too few events");
}

// 7. Risk-probe matrix.
void probe_matrix(Check& c) {
  c.expect(probe_eavesdrop(policy_from_tag("v1").security_mode, 10) == ProbeOutcome::Succeeded, "eavesdrop on Open");
  c.expect(probe_eavesdrop(proposed_design().security_mode, 10) == ProbeOutcome::Prevented, "eavesdrop on WPA2");
  c.expect(probe_outsider_join(policy_from_tag("v1")) == ProbeOutcome::Succeeded, "outsider on V1");
  c.expect(probe_outsider_join(preset(PolicyVersion::V5).main) == ProbeOutcome::Succeeded, "outsider on V5 main");
  c.expect(probe_outsider_join(policy_from_tag("v4")) == ProbeOutcome::Prevented, "outsider on V4");
  c.expect(probe_outsider_join(proposed_design()) == ProbeOutcome::Prevented, "outsider on proposed");
  for (std::size_t n : {1u, 2u, 25u, 60u}) {
    c.expect(probe_discovery(false, n) == n - 1, "discovery without isolation, n=" + std::to_string(n));
    c.expect(probe_discovery(true, n) == 0, "discovery with isolation, n=" + std::to_string(n));
  }
  AuditLog log;
  DeviceRegistry registry(3, &log);
  auto key = SecretKey::from_string("acceptance-ca");
  auto owner = make_client_device(1, WifiTech::N, PostureClass::Compliant, kNow);
  auto clone = make_client_device(2, WifiTech::N, PostureClass::Compliant, kNow);
  registry.enroll_owner("owner");
  registry.register_device("owner", owner, kNow);
  registry.assess_posture(owner.device_id(), default_posture_rules(), kNow);
  auto cert = registry.issue_certificate(owner.device_id(), key, 3600, kNow);
  auto r = probe_cert_clone(registry, log, key, cert, owner, clone, kNow + 5);
  c.expect(r.outcome == ProbeOutcome::Prevented, "clone accepted");
  c.expect(r.flag && r.flag->kind == SuspicionKind::CertCloneAttempt, "no CertCloneAttempt flag");
  bool logged = false;
  for (const auto& rec : log.records()) {
    logged = logged || (rec.event == AuditEvent::CertVerify && rec.what.mac == clone.mac.str());
  }
  c.expect(logged, "clone attempt not in the audit log");
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// 8. Determinism of the simulate command.
void determinism(Check& c) {
  auto dir = fs::temp_directory_path() / ("byod_acceptance_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  std::ofstream(dir / "scenario.json") << R"({
    "venue": "LectureHall", "n_clients": 60, "policy": "proposed", "duration": 1800,
    "client_mix": {"wifi_tech": {"802.11n": 3, "802.11g": 2, "802.11a": 1},
                   "posture": {"Compliant": 6, "OutdatedAntivirus": 2, "DiscontinuedOS": 1, "BannedDriver": 1}},
    "directory_down_prob": 0.05, "session_length": 1200,
    "probes": ["OutsiderJoin", "Eavesdrop", "Discovery", "CertClone"]
  })";
  std::string outputs[2][2];
  for (int i = 0; i < 2; ++i) {
    auto metrics = dir / ("metrics" + std::to_string(i) + ".json");
    auto audit = dir / ("audit" + std::to_string(i) + ".jsonl");
    std::string cmd = std::string(BYODSIM_EXE) + " simulate --scenario " + (dir / "scenario.json").string() +
                      " --seed 7 --out " + metrics.string() + " --audit-out " + audit.string() + " > /dev/null";
    int status = std::system(cmd.c_str());
    c.expect(status != -1 && WIFEXITED(status) && WEXITSTATUS(status) == 0, "simulate run " + std::to_string(i) + " failed");
    outputs[i][0] = slurp(metrics);
    outputs[i][1] = slurp(audit);
  }
  c.expect(!outputs[0][0].empty() && !outputs[0][1].empty(), "empty output");
  c.expect(outputs[0][0] == outputs[1][0], "metrics differ");
  c.expect(outputs[0][1] == outputs[1][1], "audit logs differ");
  fs::remove_all(dir);
}

// 9. Policy presets.
void presets(Check& c) {
  for (auto v : {PolicyVersion::V1, PolicyVersion::V2, PolicyVersion::V3, PolicyVersion::V4, PolicyVersion::V5}) {
    auto bundle = preset(v);
    nlohmann::json j = bundle.main;
    c.expect(nlohmann::json::parse(j.dump()).get<PolicyConfig>() == bundle.main, bundle.main.name + " round trip");
    if (bundle.companion) {
      nlohmann::json k = *bundle.companion;
      c.expect(nlohmann::json::parse(k.dump()).get<PolicyConfig>() == *bundle.companion,
               bundle.companion->name + " round trip");
    }
  }
  auto v2 = policy_from_tag("v2");
  AccessRequest yt{Ipv4Address::parse("10.9.0.20"), "www.youtube.com", Protocol::HTTPS, kNow, std::nullopt, false};
  auto r1 = evaluate_request(v2, yt);
  c.expect(r1.kind == VerdictKind::Redirect && r1.redirect_target == "knust.edu.gh", "blacklisted domain");
  AccessRequest ftp{Ipv4Address::parse("10.9.0.20"), "ftp.example.org", Protocol::FTP, kNow, std::nullopt, false};
  c.expect(evaluate_request(v2, ftp).kind == VerdictKind::Deny, "FTP under V2");
  c.expect(evaluate_request(policy_from_tag("v1"), yt).kind == VerdictKind::Allow, "V1 allows");
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<void(Check&)> run;
  };
  const Criterion criteria[] = {
      {"capacity headline", capacity},
      {"session cycle", session_cycle},
      {"certificate non-transferability", non_transferable},
      {"NAC gating", nac_gating},
      {"ACL oracle equivalence", acl_oracle},
      {"gateway safety invariant", gateway_safety},
      {"risk-probe matrix", probe_matrix},
      {"determinism", determinism},
      {"policy presets", presets},
  };
  int failures = 0;
  int index = 0;
  for (const auto& criterion : criteria) {
    ++index;
    Check check;
    try {
      criterion.run(check);
    } catch (const std::exception& e) {
      check.expect(false, std::string("exception: ") + e.what());
    }
    std::cout << (check.ok ? "[PASS] " : "[FAIL] ") << index << ". " << criterion.name;
    if (!check.ok) std::cout << ": " << check.why.str();
    std::cout << "\n";
    failures += check.ok ? 0 : 1;
  }
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << "\n";
  return failures == 0 ? 0 : 1;
}
