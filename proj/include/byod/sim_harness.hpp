#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <queue>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "byod/access_control.hpp"
#include "byod/audit_log.hpp"
#include "byod/capacity_model.hpp"
#include "byod/captive_portal.hpp"
#include "byod/net_model.hpp"
#include "byod/policy_engine.hpp"

namespace byod {

enum class Venue { Classroom, LectureHall, PublicVenue };
enum class Probe { OutsiderJoin, Eavesdrop, Discovery, CertClone };
enum class ProbeOutcome { Succeeded, Prevented };
enum class PostureClass { Compliant, OutdatedAntivirus, DiscontinuedOS, BannedDriver };

std::string_view to_string(Venue venue);
std::string_view to_string(Probe probe);
std::string_view to_string(ProbeOutcome outcome);
std::string_view to_string(PostureClass posture);
Venue parse_venue(std::string_view text);
Probe parse_probe(std::string_view text);
PostureClass parse_posture_class(std::string_view text);

struct ClientBand {
  std::size_t min = 0;
  std::size_t max = 0;
};

// Expected attendance per venue type.
ClientBand venue_band(Venue venue);

struct ClientMix {
  std::map<WifiTech, double> wifi_tech{{WifiTech::N, 1.0}};
  std::map<PostureClass, double> posture{{PostureClass::Compliant, 1.0}};
};

struct Scenario {
  Venue venue = Venue::Classroom;
  std::size_t n_clients = 10;
  ClientMix client_mix;
  PolicyConfig policy = policy_from_tag("v1");
  DegradationFactors factors;
  Seconds duration = 0;
  std::uint64_t seed = 0;
  std::set<Probe> probes;
  CampusNetwork network = default_campus();
  RedirectMode redirect_mode = RedirectMode::HttpRedirect;
  Seconds browse_interval = 10;
  Timestamp start = 1700000000;
  double directory_down_prob = 0.0;
  // Time each client stays connected; unset means the whole run.
  std::optional<Seconds> session_length;
  // With NAC, present the certificate on every request rather than once per
  // portal login.
  bool cert_per_request = false;
  std::string availability = "24/7";  // metadata only

  // Throws InvalidScenario.
  void validate() const;
};

// "policy" may be a preset tag or a full policy object.
Scenario scenario_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Scenario& scenario);
Scenario load_scenario(const std::string& path);

struct ThroughputStats {
  double mean = 0;
  double min = 0;
  double max = 0;
};

struct Metrics {
  ThroughputStats per_client_throughput;
  std::uint64_t login_success = 0;
  std::uint64_t login_fail = 0;
  std::uint64_t relogin_events = 0;
  std::uint64_t blocked_devices = 0;
  std::uint64_t redirects = 0;
  std::uint64_t policy_denies = 0;
  std::uint64_t gated_requests = 0;
  std::uint64_t association_failures = 0;
  std::uint64_t samples = 0;
  std::map<Probe, ProbeOutcome> probe_outcomes;
  std::optional<std::size_t> discoverable_peers;
};

nlohmann::json to_json(const Metrics& metrics);

// One throughput snapshot across every client with Internet access.
struct Sample {
  Timestamp at = 0;
  std::vector<std::pair<std::string, double>> per_client;  // device id, Mbps
  double total = 0;
  double bound = 0;  // min(sum of effective AP throughput, WAN)
};

struct SimResult {
  Metrics metrics;
  std::string audit_jsonl;
  std::vector<Sample> samples;
};

// Deterministic: equal scenarios (seed included) give byte-identical output.
SimResult run(const Scenario& scenario);

// Discrete-event queue ordered by (time, insertion order).
class EventQueue {
 public:
  using Action = std::function<void()>;

  void schedule(Timestamp at, Action action);
  bool empty() const { return queue_.empty(); }
  Timestamp next_time() const { return queue_.top().at; }
  // Pops and runs the earliest event; returns its time.
  Timestamp run_next();
  std::size_t size() const { return queue_.size(); }

 private:
  struct Event {
    Timestamp at;
    std::uint64_t seq;
    Action action;
  };
  struct Later {
    bool operator()(const Event& a, const Event& b) const {
      return a.at != b.at ? a.at > b.at : a.seq > b.seq;
    }
  };

  std::priority_queue<Event, std::vector<Event>, Later> queue_;
  std::uint64_t next_seq_ = 0;
};

// ---------------------------------------------------------------------------
// Risk probes

// A device that never registered requests a lease and tries to browse.
// Succeeded iff it reaches an Allow verdict without logging in.
ProbeOutcome probe_outsider_join(const PolicyConfig& policy, DhcpServer& dhcp, const DeviceRegistry& registry,
                                 const Gateway& gateway, const ClientDevice& outsider, Timestamp now,
                                 bool spoof_source = false);

// Same probe against a fresh default campus where nobody has registered or
// logged in.
ProbeOutcome probe_outsider_join(const PolicyConfig& policy, RedirectMode mode = RedirectMode::HttpRedirect,
                                 bool spoof_source = false, Timestamp now = 1700000000);

// Frames on an Open SSID are readable by any other station on the AP.
ProbeOutcome probe_eavesdrop(SecurityMode mode, std::size_t clients_on_ap);

// Peers a station can discover on the local segment.
std::size_t probe_discovery(bool host_isolation, std::size_t n_peers);

struct CloneProbeResult {
  ProbeOutcome outcome = ProbeOutcome::Prevented;
  CertVerdict owner_verdict = CertVerdict::Valid;
  CertVerdict clone_verdict = CertVerdict::Valid;
  std::optional<SuspicionFlag> flag;
};

// The owner presents its certificate, then the clone presents the same one.
// The registry must log into `audit`.
CloneProbeResult probe_cert_clone(DeviceRegistry& registry, const AuditLog& audit, const SecretKey& key,
                                  const Certificate& cert, const ClientDevice& owner,
                                  const ClientDevice& clone, Timestamp now,
                                  const SuspicionThresholds& thresholds = {});

// Synthetic device #index with the given radio and posture profile.
ClientDevice make_client_device(std::size_t index, WifiTech tech, PostureClass posture, Timestamp now);

}  // namespace byod
