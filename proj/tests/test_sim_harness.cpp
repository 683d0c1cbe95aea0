#include <gtest/gtest.h>

#include <sstream>

#include "byod/sim_harness.hpp"

using namespace byod;

namespace {

Scenario equal_clients(std::size_t n, const char* policy, Seconds duration) {
  Scenario s;
  s.venue = Venue::LectureHall;
  s.n_clients = n;
  s.policy = policy_from_tag(policy);
  s.duration = duration;
  s.seed = 1;
  return s;
}

std::vector<AuditRecord> parse_jsonl(const std::string& text) {
  std::vector<AuditRecord> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) out.push_back(parse_audit_line(line));
  return out;
}

}  // namespace

TEST(Sim, FiftyEqualClientsGetEqualShare) {
  auto result = run(equal_clients(50, "v5", 60));
  // 600 Mbps raw, 0.55 * 0.5 * 0.75 retained, split 50 ways.
  const double expected = 600.0 * 0.55 * 0.50 * 0.75 / 50.0;
  ASSERT_FALSE(result.samples.empty());
  for (const auto& s : result.samples) {
    ASSERT_EQ(s.per_client.size(), 50u);
    for (const auto& [id, mbps] : s.per_client) EXPECT_NEAR(mbps, expected, 1e-9) << id;
  }
  EXPECT_NEAR(result.metrics.per_client_throughput.mean, 2.475, 1e-9);
  EXPECT_EQ(result.metrics.samples, 6u);
}

TEST(Sim, V4SessionCycle) {
  Scenario s;
  s.venue = Venue::Classroom;
  s.n_clients = 10;
  s.policy = policy_from_tag("v4");
  s.duration = 1500;
  s.seed = 3;
  auto result = run(s);
  auto records = parse_jsonl(result.audit_jsonl);
  std::map<std::string, std::vector<Timestamp>> logins;
  for (const auto& r : records) {
    if (r.event == AuditEvent::LoginOk) logins[*r.who].push_back(r.when - s.start);
  }
  ASSERT_EQ(logins.size(), 10u);
  for (const auto& [who, times] : logins) {
    ASSERT_EQ(times.size(), 3u) << who;
    EXPECT_LT(times[0], s.browse_interval);
    EXPECT_EQ(times[1], times[0] + 600) << who;
    EXPECT_EQ(times[2], times[0] + 1200) << who;
  }
  EXPECT_EQ(result.metrics.login_success, 30u);
  EXPECT_EQ(result.metrics.relogin_events, 20u);
  EXPECT_EQ(result.metrics.redirects, 30u);
}

TEST(Sim, ZeroDurationIsEmpty) {
  auto s = equal_clients(20, "proposed", 0);
  s.probes = {Probe::OutsiderJoin, Probe::Eavesdrop};
  auto result = run(s);
  EXPECT_TRUE(result.audit_jsonl.empty());
  EXPECT_TRUE(result.samples.empty());
  EXPECT_EQ(result.metrics.samples, 0u);
  EXPECT_TRUE(result.metrics.probe_outcomes.empty());
}

TEST(Sim, DeterministicPerSeed) {
  Scenario s = equal_clients(40, "proposed", 900);
  s.client_mix.posture = {{PostureClass::Compliant, 0.7}, {PostureClass::OutdatedAntivirus, 0.2},
                          {PostureClass::BannedDriver, 0.1}};
  s.client_mix.wifi_tech = {{WifiTech::N, 0.5}, {WifiTech::G, 0.3}, {WifiTech::A, 0.2}};
  s.directory_down_prob = 0.1;
  s.session_length = 500;
  s.probes = {Probe::OutsiderJoin, Probe::Eavesdrop, Probe::Discovery, Probe::CertClone};
  auto a = run(s);
  auto b = run(s);
  EXPECT_EQ(to_json(a.metrics).dump(), to_json(b.metrics).dump());
  EXPECT_EQ(a.audit_jsonl, b.audit_jsonl);
  s.seed = 2;
  EXPECT_NE(run(s).audit_jsonl, a.audit_jsonl);
}

TEST(Sim, ThroughputNeverExceedsBound) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    Scenario s;
    s.venue = Venue::PublicVenue;
    s.n_clients = 100 + 37 * seed;
    s.client_mix.wifi_tech = {{WifiTech::B, 1}, {WifiTech::G, 2}, {WifiTech::A, 1}, {WifiTech::N, 3}};
    s.policy = policy_from_tag(seed % 2 ? "v1" : "v4");
    s.network.aps.push_back(dual_band_ap("ap-2"));
    s.network.wan_mbps = 100;
    s.duration = 300;
    s.seed = seed;
    auto result = run(s);
    for (const auto& sample : result.samples) {
      EXPECT_LE(sample.total, sample.bound + 1e-9);
      for (const auto& [id, mbps] : sample.per_client) EXPECT_GE(mbps, 0.0);
    }
  }
}

TEST(Sim, CapLimitsEveryClient) {
  auto s = equal_clients(20, "v1", 60);
  s.policy.bandwidth_cap = 1.5;
  auto result = run(s);
  EXPECT_DOUBLE_EQ(result.metrics.per_client_throughput.max, 1.5);
}

TEST(Sim, PostureBlockedClientsAreGated) {
  auto s = equal_clients(20, "proposed", 120);
  s.client_mix.posture = {{PostureClass::Compliant, 0.5}, {PostureClass::DiscontinuedOS, 0.5}};
  auto result = run(s);
  EXPECT_EQ(result.metrics.blocked_devices, 10u);
  EXPECT_GT(result.metrics.gated_requests, 0u);
  for (const auto& sample : result.samples) EXPECT_LE(sample.per_client.size(), 10u);
}

TEST(Sim, CertificatePerRequest) {
  auto s = equal_clients(20, "proposed", 100);
  auto count_verifies = [](const SimResult& r) {
    std::size_t n = 0;
    for (const auto& rec : parse_jsonl(r.audit_jsonl)) n += rec.event == AuditEvent::CertVerify;
    return n;
  };
  auto once = run(s);
  EXPECT_EQ(count_verifies(once), 20u);
  s.cert_per_request = true;
  auto every = run(s);
  // One check at login plus one per later request (10 browses each).
  EXPECT_EQ(count_verifies(every), 200u);
  EXPECT_EQ(every.metrics.login_success, once.metrics.login_success);
}

TEST(Sim, IncompatibleRadiosCounted) {
  auto s = equal_clients(20, "v1", 60);
  s.network.aps = {dual_band_ap("ap-1")};
  s.network.aps[0].channels.erase(s.network.aps[0].channels.begin());  // 5 GHz only
  s.client_mix.wifi_tech = {{WifiTech::B, 1}, {WifiTech::A, 1}};
  auto result = run(s);
  EXPECT_EQ(result.metrics.association_failures, 10u);
}

TEST(Sim, ProbeMatrixInsideRun) {
  auto s = equal_clients(20, "v1", 60);
  s.probes = {Probe::OutsiderJoin, Probe::Eavesdrop, Probe::Discovery, Probe::CertClone};
  auto open = run(s);
  EXPECT_EQ(open.metrics.probe_outcomes.at(Probe::OutsiderJoin), ProbeOutcome::Succeeded);
  EXPECT_EQ(open.metrics.probe_outcomes.at(Probe::Eavesdrop), ProbeOutcome::Succeeded);
  EXPECT_EQ(open.metrics.discoverable_peers, 19u);
  EXPECT_EQ(open.metrics.probe_outcomes.at(Probe::CertClone), ProbeOutcome::Prevented);

  s.policy = proposed_design();
  s.network.host_isolation = true;
  auto locked = run(s);
  EXPECT_EQ(locked.metrics.probe_outcomes.at(Probe::OutsiderJoin), ProbeOutcome::Prevented);
  EXPECT_EQ(locked.metrics.probe_outcomes.at(Probe::Eavesdrop), ProbeOutcome::Prevented);
  EXPECT_EQ(locked.metrics.discoverable_peers, 0u);
}

TEST(Probes, OutsiderAcrossPresets) {
  EXPECT_EQ(probe_outsider_join(policy_from_tag("v1")), ProbeOutcome::Succeeded);
  EXPECT_EQ(probe_outsider_join(policy_from_tag("v5")), ProbeOutcome::Succeeded);
  EXPECT_EQ(probe_outsider_join(policy_from_tag("v4")), ProbeOutcome::Prevented);
  EXPECT_EQ(probe_outsider_join(proposed_design()), ProbeOutcome::Prevented);
  EXPECT_EQ(probe_outsider_join(policy_from_tag("v3-sec")), ProbeOutcome::Prevented);
  EXPECT_EQ(probe_outsider_join(policy_from_tag("v4"), RedirectMode::DnsHijack), ProbeOutcome::Prevented);
  // Spoofing beats only the ICMP stub.
  EXPECT_EQ(probe_outsider_join(policy_from_tag("v4"), RedirectMode::IcmpRedirect, true), ProbeOutcome::Succeeded);
  EXPECT_EQ(probe_outsider_join(policy_from_tag("v4"), RedirectMode::HttpRedirect, true), ProbeOutcome::Prevented);
}

// Adding a control never turns a Prevented outsider probe into Succeeded.
TEST(Probes, ControlsAreMonotone) {
  for (auto tag : {"v1", "v2", "v3", "v4", "v5", "v3-sec", "v5-sec", "proposed"}) {
    auto base = policy_from_tag(tag);
    auto before = probe_outsider_join(base);
    auto with_portal = base;
    with_portal.portal_enabled = true;
    if (!with_portal.session_timeout) with_portal.session_timeout = 600;
    auto with_nac = base;
    with_nac.nac_enabled = true;
    for (const auto& stronger : {with_portal, with_nac}) {
      if (before == ProbeOutcome::Prevented) {
        EXPECT_EQ(probe_outsider_join(stronger), ProbeOutcome::Prevented) << tag;
      }
    }
    EXPECT_EQ(probe_outsider_join(with_nac), ProbeOutcome::Prevented) << tag;
  }
}

TEST(Probes, EavesdropAndDiscovery) {
  EXPECT_EQ(probe_eavesdrop(SecurityMode::Open, 2), ProbeOutcome::Succeeded);
  EXPECT_EQ(probe_eavesdrop(SecurityMode::Open, 1), ProbeOutcome::Prevented);
  EXPECT_EQ(probe_eavesdrop(SecurityMode::WPA2, 50), ProbeOutcome::Prevented);
  for (std::size_t n = 1; n < 100; n += 7) {
    EXPECT_EQ(probe_discovery(false, n), n - 1);
    EXPECT_EQ(probe_discovery(true, n), 0u);
  }
  EXPECT_THROW(probe_discovery(false, 0), Error);
}

TEST(Probes, CertCloneFlagged) {
  AuditLog log;
  DeviceRegistry reg(3, &log);
  auto key = SecretKey::from_string("k");
  Timestamp now = 1700000000;
  auto owner = make_client_device(1, WifiTech::N, PostureClass::Compliant, now);
  auto clone = make_client_device(2, WifiTech::N, PostureClass::Compliant, now);
  reg.enroll_owner("u");
  reg.register_device("u", owner, now);
  reg.assess_posture(owner.device_id(), default_posture_rules(), now);
  auto cert = reg.issue_certificate(owner.device_id(), key, 3600, now);
  auto r = probe_cert_clone(reg, log, key, cert, owner, clone, now);
  EXPECT_EQ(r.owner_verdict, CertVerdict::Valid);
  EXPECT_EQ(r.clone_verdict, CertVerdict::WrongDevice);
  EXPECT_EQ(r.outcome, ProbeOutcome::Prevented);
  ASSERT_TRUE(r.flag);
  EXPECT_EQ(r.flag->kind, SuspicionKind::CertCloneAttempt);
  EXPECT_EQ(r.flag->evidence.size(), 2u);
}

TEST(Scenario, Validation) {
  Scenario s;
  EXPECT_NO_THROW(s.validate());
  auto expect_invalid = [](const Scenario& bad) {
    try {
      bad.validate();
      ADD_FAILURE() << "accepted";
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::InvalidScenario);
    }
  };
  auto few = s;
  few.n_clients = 9;
  expect_invalid(few);
  auto many = s;
  many.n_clients = 501;
  expect_invalid(many);
  auto neg = s;
  neg.duration = -1;
  expect_invalid(neg);
  auto weights = s;
  weights.client_mix.posture = {{PostureClass::Compliant, 0.0}};
  expect_invalid(weights);
  auto tiny = s;
  tiny.network.dhcp.cidr = Ipv4Cidr::parse("10.9.0.0/29");
  expect_invalid(tiny);
  auto factors = s;
  factors.factors.misc = 1.0;
  expect_invalid(factors);
  auto sec = s;
  sec.policy = policy_from_tag("v4");
  sec.policy.session_timeout.reset();
  expect_invalid(sec);
}

TEST(Scenario, JsonRoundTrip) {
  auto j = nlohmann::json::parse(R"({
    "venue": "LectureHall", "n_clients": 120, "policy": "v5-sec", "duration": 600, "seed": 9,
    "client_mix": {"wifi_tech": {"802.11n": 3, "802.11g": 1}, "posture": {"Compliant": 1}},
    "probes": ["Eavesdrop", "Discovery"], "redirect_mode": "DnsHijack"
  })");
  auto s = scenario_from_json(j);
  EXPECT_EQ(s.venue, Venue::LectureHall);
  EXPECT_EQ(s.policy, policy_from_tag("v5-sec"));
  EXPECT_EQ(s.client_mix.wifi_tech.at(WifiTech::G), 1.0);
  EXPECT_EQ(s.redirect_mode, RedirectMode::DnsHijack);
  auto again = scenario_from_json(to_json(s));
  EXPECT_EQ(to_json(again), to_json(s));
  EXPECT_THROW(scenario_from_json(nlohmann::json::parse(R"({"venue": "Stadium"})")), Error);
  EXPECT_THROW(scenario_from_json(nlohmann::json::parse(R"({"n_clients": "many"})")), Error);
}

TEST(EventQueue, OrdersByTimeThenInsertion) {
  EventQueue q;
  std::vector<int> order;
  q.schedule(5, [&] { order.push_back(2); });
  q.schedule(1, [&] { order.push_back(0); });
  q.schedule(5, [&] { order.push_back(3); });
  q.schedule(1, [&] {
    order.push_back(1);
    q.schedule(5, [&] { order.push_back(4); });
  });
  while (!q.empty()) q.run_next();
  EXPECT_EQ(order, (std::vector<int>{0, 1, 2, 3, 4}));
}
