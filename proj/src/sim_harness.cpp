#include "byod/sim_harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace byod {

using nlohmann::json;

namespace {

constexpr Probe kAllProbes[] = {Probe::OutsiderJoin, Probe::Eavesdrop, Probe::Discovery, Probe::CertClone};
constexpr PostureClass kAllPostures[] = {PostureClass::Compliant, PostureClass::OutdatedAntivirus,
                                         PostureClass::DiscontinuedOS, PostureClass::BannedDriver};
constexpr Venue kAllVenues[] = {Venue::Classroom, Venue::LectureHall, Venue::PublicVenue};

[[noreturn]] void invalid(const std::string& message) { fail(ErrorCode::InvalidScenario, message); }

// Uniform double in [0, 1) from the top 53 bits; portable across standard
// libraries, unlike std::uniform_real_distribution.
double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

template <typename T>
void shuffle(std::vector<T>& items, std::mt19937_64& rng) {
  for (std::size_t i = items.size(); i > 1; --i) std::swap(items[i - 1], items[rng() % i]);
}

// Largest-remainder apportionment of n items by weight; ties go to the
// earlier key.
template <typename K>
std::vector<K> apportion(const std::map<K, double>& weights, std::size_t n) {
  double total = 0;
  for (const auto& [k, w] : weights) total += w;
  std::vector<std::pair<K, double>> remainders;
  std::vector<K> out;
  for (const auto& [k, w] : weights) {
    double exact = static_cast<double>(n) * w / total;
    auto whole = static_cast<std::size_t>(std::floor(exact));
    out.insert(out.end(), whole, k);
    remainders.emplace_back(k, exact - static_cast<double>(whole));
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  for (std::size_t i = 0; out.size() < n; ++i) out.push_back(remainders[i % remainders.size()].first);
  return out;
}

struct Site {
  const char* domain;
  Protocol protocol;
  unsigned weight;
};

constexpr Site kSites[] = {
    {"knust.edu.gh", Protocol::HTTPS, 6},   {"example.com", Protocol::HTTP, 6},
    {"news.example.org", Protocol::HTTPS, 4}, {"youtube.com", Protocol::HTTP, 2},
    {"files.example.net", Protocol::FTP, 1},  {"swarm.example.net", Protocol::P2P, 1},
};

const Site& pick_site(std::mt19937_64& rng) {
  unsigned total = 0;
  for (const auto& s : kSites) total += s.weight;
  auto draw = static_cast<unsigned>(rng() % total);
  for (const auto& s : kSites) {
    if (draw < s.weight) return s;
    draw -= s.weight;
  }
  return kSites[0];
}

}  // namespace

std::string_view to_string(Venue venue) {
  switch (venue) {
    case Venue::Classroom: return "Classroom";
    case Venue::LectureHall: return "LectureHall";
    case Venue::PublicVenue: return "PublicVenue";
  }
  return "Classroom";
}

std::string_view to_string(Probe probe) {
  switch (probe) {
    case Probe::OutsiderJoin: return "OutsiderJoin";
    case Probe::Eavesdrop: return "Eavesdrop";
    case Probe::Discovery: return "Discovery";
    case Probe::CertClone: return "CertClone";
  }
  return "OutsiderJoin";
}

std::string_view to_string(ProbeOutcome outcome) {
  return outcome == ProbeOutcome::Succeeded ? "Succeeded" : "Prevented";
}

std::string_view to_string(PostureClass posture) {
  switch (posture) {
    case PostureClass::Compliant: return "Compliant";
    case PostureClass::OutdatedAntivirus: return "OutdatedAntivirus";
    case PostureClass::DiscontinuedOS: return "DiscontinuedOS";
    case PostureClass::BannedDriver: return "BannedDriver";
  }
  return "Compliant";
}

Venue parse_venue(std::string_view text) {
  for (auto v : kAllVenues) {
    if (text == to_string(v)) return v;
  }
  fail(ErrorCode::ParseError, "unknown venue '" + std::string(text) + "'");
}

Probe parse_probe(std::string_view text) {
  for (auto p : kAllProbes) {
    if (text == to_string(p)) return p;
  }
  fail(ErrorCode::ParseError, "unknown probe '" + std::string(text) + "'");
}

PostureClass parse_posture_class(std::string_view text) {
  for (auto p : kAllPostures) {
    if (text == to_string(p)) return p;
  }
  fail(ErrorCode::ParseError, "unknown posture class '" + std::string(text) + "'");
}

ClientBand venue_band(Venue venue) {
  switch (venue) {
    case Venue::Classroom: return {10, 500};
    case Venue::LectureHall: return {20, 1000};
    case Venue::PublicVenue: return {100, 2000};
  }
  return {10, 500};
}

// ---------------------------------------------------------------------------
// Scenario

void Scenario::validate() const {
  auto band = venue_band(venue);
  if (n_clients < band.min || n_clients > band.max) {
    invalid(std::string(to_string(venue)) + " holds " + std::to_string(band.min) + ".." + std::to_string(band.max) +
            " clients, got " + std::to_string(n_clients));
  }
  if (duration < 0) invalid("negative duration");
  if (browse_interval <= 0) invalid("browse_interval must be positive");
  if (!(directory_down_prob >= 0.0 && directory_down_prob <= 1.0)) invalid("directory_down_prob outside [0, 1]");
  if (session_length && *session_length <= 0) invalid("session_length must be positive");
  auto check_weights = [](const auto& weights, const char* what) {
    double total = 0;
    for (const auto& [k, w] : weights) {
      if (!(w >= 0.0) || std::isinf(w)) invalid(std::string(what) + " weights must be finite and non-negative");
      total += w;
    }
    if (!(total > 0.0)) invalid(std::string(what) + " weights must not all be zero");
  };
  check_weights(client_mix.wifi_tech, "wifi_tech");
  check_weights(client_mix.posture, "posture");
  try {
    factors.validate();
    policy.validate();
    network.validate();
  } catch (const Error& e) {
    invalid(e.what());
  }
  if (network.aps.empty()) invalid("network has no access points");
  // The probes borrow up to three extra addresses.
  if (n_clients + 3 > DhcpServer(network).pool_size()) invalid("DHCP pool too small for the client count");
}

Scenario scenario_from_json(const json& j) {
  Scenario s;
  try {
    if (!j.is_object()) invalid("scenario must be a JSON object");
    s.venue = parse_venue(j.value("venue", "Classroom"));
    s.n_clients = j.value("n_clients", s.n_clients);
    if (j.contains("client_mix")) {
      const auto& mix = j.at("client_mix");
      if (mix.contains("wifi_tech")) {
        s.client_mix.wifi_tech.clear();
        for (const auto& [k, w] : mix.at("wifi_tech").items()) s.client_mix.wifi_tech[parse_wifi_tech(k)] = w.get<double>();
      }
      if (mix.contains("posture")) {
        s.client_mix.posture.clear();
        for (const auto& [k, w] : mix.at("posture").items()) s.client_mix.posture[parse_posture_class(k)] = w.get<double>();
      }
    }
    if (j.contains("policy")) {
      const auto& p = j.at("policy");
      s.policy = p.is_string() ? policy_from_tag(p.get<std::string>()) : p.get<PolicyConfig>();
    }
    if (j.contains("factors")) s.factors = j.at("factors").get<DegradationFactors>();
    s.duration = j.value("duration", s.duration);
    s.seed = j.value("seed", s.seed);
    for (const auto& p : j.value("probes", json::array())) s.probes.insert(parse_probe(p.get<std::string>()));
    if (j.contains("network")) s.network = j.at("network").get<CampusNetwork>();
    if (j.contains("redirect_mode")) s.redirect_mode = parse_redirect_mode(j.at("redirect_mode").get<std::string>());
    s.browse_interval = j.value("browse_interval", s.browse_interval);
    s.start = j.value("start", s.start);
    s.directory_down_prob = j.value("directory_down_prob", s.directory_down_prob);
    if (j.contains("session_length") && !j.at("session_length").is_null()) {
      s.session_length = j.at("session_length").get<Seconds>();
    }
    s.cert_per_request = j.value("cert_per_request", s.cert_per_request);
    s.availability = j.value("availability", s.availability);
  } catch (const json::exception& e) {
    invalid(std::string("scenario: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::InvalidScenario) throw;
    invalid(e.what());
  }
  s.validate();
  return s;
}

json to_json(const Scenario& s) {
  json tech = json::object();
  for (const auto& [k, w] : s.client_mix.wifi_tech) tech[std::string(to_string(k))] = w;
  json posture = json::object();
  for (const auto& [k, w] : s.client_mix.posture) posture[std::string(to_string(k))] = w;
  json probes = json::array();
  for (auto p : s.probes) probes.push_back(to_string(p));
  return {{"venue", to_string(s.venue)},
          {"n_clients", s.n_clients},
          {"client_mix", {{"wifi_tech", tech}, {"posture", posture}}},
          {"policy", s.policy},
          {"factors", s.factors},
          {"duration", s.duration},
          {"seed", s.seed},
          {"probes", probes},
          {"network", s.network},
          {"redirect_mode", to_string(s.redirect_mode)},
          {"browse_interval", s.browse_interval},
          {"start", s.start},
          {"directory_down_prob", s.directory_down_prob},
          {"session_length", s.session_length ? json(*s.session_length) : json(nullptr)},
          {"cert_per_request", s.cert_per_request},
          {"availability", s.availability}};
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) invalid("cannot open scenario " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    invalid(path + ": " + e.what());
  }
  return scenario_from_json(j);
}

json to_json(const Metrics& m) {
  json probes = json::object();
  for (const auto& [p, o] : m.probe_outcomes) probes[std::string(to_string(p))] = to_string(o);
  json out = {{"per_client_throughput",
               {{"mean", m.per_client_throughput.mean},
                {"min", m.per_client_throughput.min},
                {"max", m.per_client_throughput.max}}},
              {"login_success", m.login_success},
              {"login_fail", m.login_fail},
              {"relogin_events", m.relogin_events},
              {"blocked_devices", m.blocked_devices},
              {"redirects", m.redirects},
              {"policy_denies", m.policy_denies},
              {"gated_requests", m.gated_requests},
              {"association_failures", m.association_failures},
              {"samples", m.samples},
              {"probe_outcomes", probes}};
  if (m.discoverable_peers) out["discoverable_peers"] = *m.discoverable_peers;
  return out;
}

// ---------------------------------------------------------------------------
// Event queue

void EventQueue::schedule(Timestamp at, Action action) { queue_.push({at, next_seq_++, std::move(action)}); }

Timestamp EventQueue::run_next() {
  // priority_queue::top is const; move the action out before popping.
  auto event = std::move(const_cast<Event&>(queue_.top()));
  queue_.pop();
  event.action();
  return event.at;
}

// ---------------------------------------------------------------------------
// Devices

ClientDevice make_client_device(std::size_t index, WifiTech tech, PostureClass posture, Timestamp now) {
  ClientDevice d;
  d.name = "client-" + std::to_string(index);
  d.model = "Model-" + std::string(to_string(tech));
  char imei[32];
  std::snprintf(imei, sizeof imei, "35%013zu", index);
  d.serial_imei = imei;
  d.mac = MacAddress({0x02, 0xb0, 0x0d, static_cast<std::uint8_t>((index >> 16) & 0xFF),
                      static_cast<std::uint8_t>((index >> 8) & 0xFF), static_cast<std::uint8_t>(index & 0xFF)});
  d.manufacturer = "Generic";
  Date today = date_of(now);
  d.manufacture_date = today - std::chrono::days(400);
  d.os = posture == PostureClass::DiscontinuedOS ? OsInfo{"Windows XP", "SP3", today - std::chrono::days(5000)}
                                                 : OsInfo{"Android", "12", today - std::chrono::days(300)};
  switch (tech) {
    case WifiTech::B: d.wifi_tech = {WifiTech::B}; break;
    case WifiTech::G: d.wifi_tech = {WifiTech::B, WifiTech::G}; break;
    case WifiTech::A: d.wifi_tech = {WifiTech::A}; break;
    case WifiTech::N: d.wifi_tech = {WifiTech::N}; break;
  }
  d.ip_support = (tech == WifiTech::A || tech == WifiTech::N) ? IpSupport::DualStack : IpSupport::V4Only;
  int av_age = posture == PostureClass::OutdatedAntivirus ? 90 : 3;
  d.antivirus = {"CampusAV", "4.2", today - std::chrono::days(av_age)};
  d.drivers = {{"Intel", "22.1"}};
  if (posture == PostureClass::BannedDriver) d.drivers.push_back({"RogueNet", "1.0"});
  return d;
}

// ---------------------------------------------------------------------------
// Probes

ProbeOutcome probe_outsider_join(const PolicyConfig& policy, DhcpServer& dhcp, const DeviceRegistry& registry,
                                 const Gateway& gateway, const ClientDevice& outsider, Timestamp now,
                                 bool spoof_source) {
  IpAssignment lease;
  try {
    lease = dhcp.assign(outsider, now);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::PoolExhausted) return ProbeOutcome::Prevented;
    throw;
  }
  struct Release {
    DhcpServer& dhcp;
    MacAddress mac;
    ~Release() { dhcp.release(mac); }
  } release{dhcp, outsider.mac};

  if (policy.nac_enabled) {
    const auto* record = registry.find(outsider.device_id());
    if (!record || nac_gate(*record) == GateDecision::NetworkOnly) return ProbeOutcome::Prevented;
  }
  AccessRequest request{lease.v4, "example.com", Protocol::HTTP, now, std::nullopt, spoof_source};
  if (policy.portal_enabled && gateway.intercept(request).kind != InterceptResult::Kind::PassThrough) {
    return ProbeOutcome::Prevented;
  }
  return evaluate_request(policy, request).kind == VerdictKind::Allow ? ProbeOutcome::Succeeded
                                                                      : ProbeOutcome::Prevented;
}

ProbeOutcome probe_outsider_join(const PolicyConfig& policy, RedirectMode mode, bool spoof_source, Timestamp now) {
  auto campus = default_campus();
  DhcpServer dhcp(campus);
  DeviceRegistry registry;
  GatewayConfig config;
  config.redirect_mode = mode;
  Gateway gateway(config);
  auto outsider = make_client_device(9999, WifiTech::N, PostureClass::Compliant, now);
  return probe_outsider_join(policy, dhcp, registry, gateway, outsider, now, spoof_source);
}

ProbeOutcome probe_eavesdrop(SecurityMode mode, std::size_t clients_on_ap) {
  return mode == SecurityMode::Open && clients_on_ap >= 2 ? ProbeOutcome::Succeeded : ProbeOutcome::Prevented;
}

std::size_t probe_discovery(bool host_isolation, std::size_t n_peers) {
  if (n_peers == 0) fail(ErrorCode::InvalidConfig, "discovery needs at least one station");
  return host_isolation ? 0 : n_peers - 1;
}

CloneProbeResult probe_cert_clone(DeviceRegistry& registry, const AuditLog& audit, const SecretKey& key,
                                  const Certificate& cert, const ClientDevice& owner, const ClientDevice& clone,
                                  Timestamp now, const SuspicionThresholds& thresholds) {
  CloneProbeResult result;
  result.owner_verdict = registry.verify_presented(cert, owner, key, now, "probe");
  result.clone_verdict = registry.verify_presented(cert, clone, key, now, "probe");
  result.outcome = result.clone_verdict == CertVerdict::Valid ? ProbeOutcome::Succeeded : ProbeOutcome::Prevented;
  auto records = audit.records();
  for (auto& flag : detect_suspicion(records, thresholds)) {
    if (flag.kind == SuspicionKind::CertCloneAttempt && flag.subject == cert.device_fingerprint) {
      result.flag = std::move(flag);
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// Simulation

namespace {

constexpr Seconds kCertValidity = 180 * kSecondsPerDay;

struct Client {
  ClientDevice device;
  std::string student;
  const AccessPoint* ap = nullptr;
  double phy_rate = 0;
  bool connected = false;
  bool cleared = false;
  std::optional<IpAssignment> lease;
  std::optional<Certificate> cert;
  bool had_session = false;
  Traffic traffic;
};

class Simulation {
 public:
  explicit Simulation(const Scenario& s)
      : s_(s),
        end_(s.start + s.duration),
        rng_(s.seed),
        dhcp_(s.network),
        registry_(3, &audit_),
        gateway_(make_gateway_config(s), &audit_),
        key_(SecretKey::from_string("sim-ca-" + std::to_string(s.seed))),
        rules_(default_posture_rules()) {}

  SimResult run() {
    build_clients();
    for (std::size_t i = 0; i < clients_.size(); ++i) {
      queue_.schedule(s_.start, [this, i] { join(i); });
    }
    queue_.schedule(s_.start + s_.browse_interval / 2, [this] { sample(); });
    while (!queue_.empty() && queue_.next_time() < end_) {
      now_ = queue_.next_time();
      queue_.run_next();
    }
    now_ = end_;
    run_probes();
    finish_stats();
    return {metrics_, audit_.to_jsonl(), samples_};
  }

 private:
  static GatewayConfig make_gateway_config(const Scenario& s) {
    GatewayConfig config;
    config.redirect_mode = s.redirect_mode;
    return config;
  }

  void build_clients() {
    auto techs = apportion(s_.client_mix.wifi_tech, s_.n_clients);
    auto postures = apportion(s_.client_mix.posture, s_.n_clients);
    shuffle(techs, rng_);
    shuffle(postures, rng_);
    char id[32];
    for (std::size_t i = 0; i < s_.n_clients; ++i) {
      Client c;
      c.device = make_client_device(i + 1, techs[i], postures[i], s_.start);
      std::snprintf(id, sizeof id, "s%05zu", i + 1);
      c.student = id;
      c.ap = &s_.network.aps[i % s_.network.aps.size()];
      directory_.add_student(c.student, "pw-" + c.student);
      clients_.push_back(std::move(c));
    }
  }

  void record(AuditEvent event, const Client& c, std::string detail = {},
              std::optional<AccessLevel> level = std::nullopt, std::optional<Traffic> traffic = std::nullopt) {
    AuditEntry e;
    e.when = now_;
    if (c.had_session || event == AuditEvent::Disconnect) e.who = c.student;
    e.what = {c.device.device_id(), c.device.mac.str(), c.lease ? c.lease->v4.str() : std::string()};
    e.where = c.ap->id;
    e.event = event;
    e.access_level = level;
    e.traffic = traffic;
    e.detail = std::move(detail);
    audit_.append(std::move(e));
  }

  bool has_internet(const Client& c) const {
    if (!c.connected || s_.policy.isolated) return false;
    if (s_.policy.nac_enabled && !c.cleared) return false;
    if (s_.policy.portal_enabled && !gateway_.is_authorized(c.lease->v4)) return false;
    return true;
  }

  void join(std::size_t i) {
    auto& c = clients_[i];
    Association assoc;
    try {
      assoc = associate(c.device, *c.ap);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::IncompatibleTech) throw;
      ++metrics_.association_failures;
      return;
    }
    c.phy_rate = device_phy_rate(c.device, *c.ap->channel(assoc.band));
    c.connected = true;
    record(AuditEvent::Connect, c, std::string(to_string(assoc.band)));
    renew(i);

    if (s_.policy.nac_enabled) {
      if (!registry_.has_owner(c.student)) registry_.enroll_owner(c.student);
      registry_.register_device(c.student, c.device, now_);
      auto posture = registry_.assess_posture(c.device.device_id(), rules_, now_);
      c.cleared = posture.status == PostureStatus::Cleared;
      if (c.cleared) {
        c.cert = registry_.issue_certificate(c.device.device_id(), key_, kCertValidity, now_);
      } else {
        ++metrics_.blocked_devices;
      }
    }
    // First request lands somewhere inside the first browse interval.
    auto jitter = static_cast<Seconds>(rng_() % static_cast<std::uint64_t>(s_.browse_interval));
    queue_.schedule(now_ + jitter, [this, i] { browse(i); });
    if (s_.session_length) queue_.schedule(now_ + *s_.session_length, [this, i] { disconnect(i); });
  }

  void renew(std::size_t i) {
    auto& c = clients_[i];
    if (!c.connected) return;
    c.lease = dhcp_.assign(c.device, now_);
    std::string detail;
    if (c.lease->v6) detail = "v6=" + c.lease->v6->str();
    record(AuditEvent::DhcpLease, c, std::move(detail));
    if (s_.policy.nac_enabled && registry_.find(c.device.device_id())) {
      registry_.record_ip(c.device.device_id(), c.lease->v4.str(), now_);
    }
    queue_.schedule(now_ + std::max<Seconds>(1, c.lease->lease_seconds / 2), [this, i] { renew(i); });
  }

  bool try_login(std::size_t i) {
    auto& c = clients_[i];
    AccessRequest probe{c.lease->v4, "example.com", Protocol::HTTP, now_, std::nullopt, false};
    auto intercepted = gateway_.intercept(probe);
    if (intercepted.kind == InterceptResult::Kind::HttpRedirect302 ||
        intercepted.kind == InterceptResult::Kind::DnsAnswer) {
      ++metrics_.redirects;
      record(AuditEvent::Redirect, c,
             intercepted.location.empty() ? intercepted.dns_answer->str() : intercepted.location,
             AccessLevel::NetworkOnly);
    }

    std::optional<CertVerdict> verdict;
    if (s_.policy.nac_enabled && c.cert) {
      verdict = registry_.verify_presented(*c.cert, c.device, key_, now_, c.ap->id, c.lease->v4.str());
    }
    bool directory_down = s_.directory_down_prob > 0 && unit(rng_) < s_.directory_down_prob;
    directory_.set_available(!directory_down);
    Credentials credentials{c.student, "pw-" + c.student, std::nullopt};
    auto result = gateway_.login(directory_, credentials, {c.lease->v4, c.device.mac, c.ap->id}, verdict,
                                 s_.policy, now_);
    directory_.set_available(true);
    if (result.outcome != LoginOutcome::Success) {
      ++metrics_.login_fail;
      return false;
    }
    ++metrics_.login_success;
    if (c.had_session) ++metrics_.relogin_events;
    c.had_session = true;
    queue_.schedule(result.session->expires_at, [this] { gateway_.expire_sessions(now_); });
    return true;
  }

  void browse(std::size_t i) {
    auto& c = clients_[i];
    if (!c.connected) return;
    queue_.schedule(now_ + s_.browse_interval, [this, i] { browse(i); });

    if (s_.policy.nac_enabled && !c.cleared) {
      ++metrics_.gated_requests;
      return;
    }
    if (s_.policy.portal_enabled && !gateway_.is_authorized(c.lease->v4)) {
      if (!try_login(i)) return;
    } else if (s_.policy.nac_enabled && s_.cert_per_request) {
      auto verdict = registry_.verify_presented(*c.cert, c.device, key_, now_, c.ap->id, c.lease->v4.str());
      if (verdict != CertVerdict::Valid) {
        ++metrics_.gated_requests;
        return;
      }
    }

    const auto& site = pick_site(rng_);
    AccessRequest request{c.lease->v4, site.domain, site.protocol, now_, std::nullopt, false};
    auto verdict = evaluate_request(s_.policy, request);
    if (verdict.kind == VerdictKind::Redirect) {
      ++metrics_.redirects;
      record(AuditEvent::Redirect, c, verdict.redirect_target);
    } else if (verdict.kind == VerdictKind::Deny) {
      ++metrics_.policy_denies;
      record(AuditEvent::PolicyDeny, c,
             std::string(to_string(verdict.reason)) + ":" + std::string(to_string(site.protocol)) + ":" +
                 site.domain);
    }
  }

  void disconnect(std::size_t i) {
    auto& c = clients_[i];
    if (!c.connected) return;
    gateway_.on_disconnect(c.lease->v4, now_);
    record(AuditEvent::Disconnect, c, {}, std::nullopt, c.traffic);
    dhcp_.release(c.device.mac);
    c.connected = false;
  }

  void sample() {
    queue_.schedule(now_ + s_.browse_interval, [this] { sample(); });
    Sample out;
    out.at = now_;
    double effective = 0;
    std::vector<std::size_t> who;
    std::vector<double> mbps;
    for (const auto& ap : s_.network.aps) {
      effective += effective_ap_throughput(ap, s_.factors);
      std::vector<ClientLoad> loads;
      std::vector<std::size_t> members;
      for (std::size_t i = 0; i < clients_.size(); ++i) {
        if (clients_[i].ap->id != ap.id || !has_internet(clients_[i])) continue;
        loads.push_back({clients_[i].device.device_id(), clients_[i].phy_rate, 1.0});
        members.push_back(i);
      }
      auto rates = client_throughputs(ap, loads, s_.factors);
      who.insert(who.end(), members.begin(), members.end());
      mbps.insert(mbps.end(), rates.begin(), rates.end());
    }
    double total = 0;
    for (double r : mbps) total += r;
    // The WAN link is shared in proportion to each client's AP-level share.
    if (total > s_.network.wan_mbps) {
      for (double& r : mbps) r *= s_.network.wan_mbps / total;
    }
    out.bound = std::min(effective, s_.network.wan_mbps);
    for (std::size_t k = 0; k < who.size(); ++k) {
      double r = apply_cap(s_.policy, mbps[k]);
      auto& c = clients_[who[k]];
      auto bytes = static_cast<std::uint64_t>(std::llround(r * 125000.0 * static_cast<double>(s_.browse_interval)));
      c.traffic.bytes_down += bytes;
      c.traffic.bytes_up += bytes / 20;
      out.per_client.emplace_back(c.device.device_id(), r);
      out.total += r;
      values_.push_back(r);
    }
    ++metrics_.samples;
    samples_.push_back(std::move(out));
  }

  void run_probes() {
    if (s_.duration == 0 || s_.probes.empty()) return;
    std::size_t next_index = s_.n_clients + 1;
    if (s_.probes.contains(Probe::OutsiderJoin)) {
      auto outsider = make_client_device(next_index++, WifiTech::N, PostureClass::Compliant, now_);
      metrics_.probe_outcomes[Probe::OutsiderJoin] =
          probe_outsider_join(s_.policy, dhcp_, registry_, gateway_, outsider, now_);
    }
    std::size_t connected = 0;
    std::map<std::string, std::size_t> per_ap;
    for (const auto& c : clients_) {
      if (!c.connected) continue;
      ++connected;
      ++per_ap[c.ap->id];
    }
    if (s_.probes.contains(Probe::Eavesdrop)) {
      std::size_t busiest = 0;
      for (const auto& [ap, n] : per_ap) busiest = std::max(busiest, n);
      metrics_.probe_outcomes[Probe::Eavesdrop] = probe_eavesdrop(s_.policy.security_mode, busiest);
    }
    if (s_.probes.contains(Probe::Discovery)) {
      auto peers = probe_discovery(s_.network.host_isolation, std::max<std::size_t>(1, connected));
      metrics_.discoverable_peers = peers;
      metrics_.probe_outcomes[Probe::Discovery] = peers > 0 ? ProbeOutcome::Succeeded : ProbeOutcome::Prevented;
    }
    if (s_.probes.contains(Probe::CertClone)) {
      auto owner = make_client_device(next_index++, WifiTech::N, PostureClass::Compliant, now_);
      auto clone = make_client_device(next_index++, WifiTech::N, PostureClass::Compliant, now_);
      const std::string owner_id = "probe-owner";
      if (!registry_.has_owner(owner_id)) registry_.enroll_owner(owner_id);
      registry_.register_device(owner_id, owner, now_);
      registry_.assess_posture(owner.device_id(), rules_, now_);
      auto cert = registry_.issue_certificate(owner.device_id(), key_, kCertValidity, now_);
      auto result = probe_cert_clone(registry_, audit_, key_, cert, owner, clone, now_);
      metrics_.probe_outcomes[Probe::CertClone] = result.outcome;
    }
  }

  void finish_stats() {
    if (values_.empty()) return;
    auto [lo, hi] = std::minmax_element(values_.begin(), values_.end());
    double sum = 0;
    for (double v : values_) sum += v;
    metrics_.per_client_throughput = {std::clamp(sum / static_cast<double>(values_.size()), *lo, *hi), *lo, *hi};
  }

  const Scenario& s_;
  Timestamp end_;
  Timestamp now_ = 0;
  std::mt19937_64 rng_;
  AuditLog audit_;
  DhcpServer dhcp_;
  DeviceRegistry registry_;
  Gateway gateway_;
  Directory directory_;
  SecretKey key_;
  PostureRules rules_;
  EventQueue queue_;
  std::vector<Client> clients_;
  Metrics metrics_;
  std::vector<Sample> samples_;
  std::vector<double> values_;
};

}  // namespace

SimResult run(const Scenario& scenario) {
  scenario.validate();
  return Simulation(scenario).run();
}

}  // namespace byod
