#include "byod/cli.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "byod/capacity_model.hpp"
#include "byod/portal_http.hpp"
#include "byod/segmentation.hpp"
#include "byod/sim_harness.hpp"

namespace byod::cli {

using nlohmann::json;

namespace {

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::StorageFailure, "cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    fail(ErrorCode::ParseError, path + ": " + e.what());
  }
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out || !(out << text) || !out.flush()) fail(ErrorCode::StorageFailure, "cannot write " + path);
}

std::vector<double> parse_number_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw CLI::ValidationError("bad number '" + item + "' in list '" + text + "'");
    }
  }
  return out;
}

// Subcommand path of an invocation: "simulate", "audit query", ...
std::string section_of(const std::vector<std::string>& args, std::size_t& depth) {
  depth = 0;
  if (args.empty()) return {};
  static const std::set<std::string> nested = {"audit", "probe", "policy", "portal"};
  depth = 1;
  std::string section = args[0];
  if (nested.contains(args[0]) && args.size() > 1 && !args[1].starts_with("-")) {
    section += " " + args[1];
    depth = 2;
  }
  return section;
}

// Inserts "--key value" for every config entry whose flag the user did not
// pass, so explicit flags always win.
std::vector<std::string> merge_config(std::vector<std::string> args, const json& config) {
  std::size_t depth = 0;
  auto section = section_of(args, depth);
  if (section.empty() || !config.contains(section) || !config.at(section).is_object()) return args;
  auto given = [&](const std::string& flag) {
    for (const auto& a : args) {
      if (a == flag || a.starts_with(flag + "=")) return true;
    }
    return false;
  };
  std::vector<std::string> extra;
  for (const auto& [key, value] : config.at(section).items()) {
    std::string flag = "--" + key;
    if (given(flag)) continue;
    auto push = [&](const json& v) {
      if (v.is_boolean()) {
        if (v.get<bool>()) extra.push_back(flag);
        return;
      }
      extra.push_back(flag);
      extra.push_back(v.is_string() ? v.get<std::string>() : v.dump());
    };
    if (value.is_array()) {
      for (const auto& v : value) push(v);
    } else {
      push(value);
    }
  }
  args.insert(args.begin() + static_cast<long>(depth), extra.begin(), extra.end());
  return args;
}

struct Options {
  // simulate
  std::string scenario_path;
  std::optional<std::uint64_t> seed;
  std::string out_path;
  std::string audit_out;
  std::string samples_out;
  // policy
  std::string preset_tag;
  bool companion = false;
  std::vector<std::string> category_files;
  // capacity
  std::string channels = "300,300";
  std::size_t clients = 0;
  std::string rates;
  double overhead = DegradationFactors{}.overhead;
  double contention = DegradationFactors{}.contention;
  double misc = DegradationFactors{}.misc;
  // probe
  std::string policy_tag = "v1";
  std::string redirect_mode = "HttpRedirect";
  bool spoof = false;
  std::string security = "Open";
  std::size_t probe_clients = 2;
  bool isolation = false;
  bool expired = false;
  // audit
  std::string log_path;
  std::optional<std::string> who, device, where;
  std::optional<Timestamp> from, to;
  std::vector<std::string> events;
  Seconds window = 60;
  std::size_t login_failures = 5;
  // validate
  std::string topology_path;
  // portal
  std::string host = "127.0.0.1";
  int port = 3905;
  std::string directory_path;
  Timestamp start = 1700000000;
};

DegradationFactors factors_of(const Options& o) {
  DegradationFactors f{o.overhead, o.contention, o.misc};
  f.validate();
  return f;
}

void cmd_simulate(const Options& o, std::ostream& out) {
  if (!o.seed) throw CLI::RequiredError("--seed");
  auto j = read_json_file(o.scenario_path);
  if (!j.is_object()) fail(ErrorCode::InvalidScenario, o.scenario_path + ": scenario must be an object");
  j["seed"] = *o.seed;
  auto scenario = scenario_from_json(j);
  auto result = run(scenario);
  auto metrics = to_json(result.metrics).dump(2) + "\n";
  if (!o.out_path.empty()) write_file(o.out_path, metrics);
  if (!o.audit_out.empty()) write_file(o.audit_out, result.audit_jsonl);
  if (!o.samples_out.empty()) {
    std::string lines;
    for (const auto& s : result.samples) {
      json per_client = json::object();
      for (const auto& [id, mbps] : s.per_client) per_client[id] = mbps;
      lines += json{{"at", s.at}, {"total", s.total}, {"bound", s.bound}, {"per_client", per_client}}.dump() + "\n";
    }
    write_file(o.samples_out, lines);
  }
  out << metrics;
}

void cmd_policy_preset(const Options& o, std::ostream& out) {
  PolicyConfig policy;
  if (o.companion) {
    auto bundle = preset(parse_policy_version(o.preset_tag));
    if (!bundle.companion) fail(ErrorCode::NotFound, "preset " + o.preset_tag + " has no companion network");
    policy = *bundle.companion;
  } else {
    policy = policy_from_tag(o.preset_tag);
  }
  for (const auto& f : o.category_files) add_category_file(policy, f);
  policy.validate();
  out << json(policy).dump(2) << "\n";
}

void cmd_capacity(const Options& o, std::ostream& out) {
  AccessPoint ap;
  ap.id = "ap";
  auto raw = parse_number_list(o.channels);
  if (raw.empty() || raw.size() > 2) throw CLI::ValidationError("--channels takes one or two rates");
  ap.channels.push_back({Band::Ghz2_4, raw[0]});
  if (raw.size() == 2) ap.channels.push_back({Band::Ghz5, raw[1]});
  ap.validate();
  auto factors = factors_of(o);
  json result;
  if (!o.rates.empty()) {
    auto rates = parse_number_list(o.rates);
    std::vector<ClientLoad> loads;
    for (std::size_t i = 0; i < rates.size(); ++i) loads.push_back({"c" + std::to_string(i + 1), rates[i], 1.0});
    auto shares = airtime_share(loads);
    auto mbps = client_throughputs(ap, loads, factors);
    result = {{"effective_ap_mbps", effective_ap_throughput(ap, factors)},
              {"airtime_share", shares},
              {"per_client_mbps", mbps}};
  } else {
    result = {{"per_client_mbps", per_client_throughput(ap, o.clients, factors)}};
  }
  out << result.dump() << "\n";
}

json clone_probe(bool expired) {
  constexpr Timestamp now = 1700000000;
  AuditLog audit;
  DeviceRegistry registry(3, &audit);
  auto key = SecretKey::from_string("probe-ca");
  auto owner = make_client_device(1, WifiTech::N, PostureClass::Compliant, now);
  auto clone = make_client_device(2, WifiTech::N, PostureClass::Compliant, now);
  registry.enroll_owner("owner");
  registry.register_device("owner", owner, now);
  registry.assess_posture(owner.device_id(), default_posture_rules(), now);
  Seconds validity = 3600;
  auto cert = registry.issue_certificate(owner.device_id(), key, validity, now);
  auto at = expired ? now + validity + 1 : now + 10;
  auto r = probe_cert_clone(registry, audit, key, cert, owner, clone, at);
  json j = {{"probe", "CertClone"},
            {"outcome", to_string(r.outcome)},
            {"owner_verdict", to_string(r.owner_verdict)},
            {"clone_verdict", to_string(r.clone_verdict)},
            {"flagged", r.flag.has_value()}};
  if (r.flag) j["flag"] = to_json(*r.flag);
  return j;
}

void cmd_probe(const std::string& which, const Options& o, std::ostream& out) {
  json result;
  if (which == "outsider") {
    auto policy = policy_from_tag(o.policy_tag);
    result = {{"probe", "OutsiderJoin"},
              {"policy", o.policy_tag},
              {"outcome", to_string(probe_outsider_join(policy, parse_redirect_mode(o.redirect_mode), o.spoof))}};
  } else if (which == "eavesdrop") {
    auto mode = parse_security_mode(o.security);
    result = {{"probe", "Eavesdrop"},
              {"security", o.security},
              {"outcome", to_string(probe_eavesdrop(mode, o.probe_clients))}};
  } else if (which == "discovery") {
    result = {{"probe", "Discovery"},
              {"host_isolation", o.isolation},
              {"discoverable_peers", probe_discovery(o.isolation, o.probe_clients)}};
  } else if (which == "clone") {
    result = clone_probe(o.expired);
  } else {
    // Every probe against every preset.
    json outsider = json::object(), eavesdrop = json::object();
    for (const char* tag : {"v1", "v2", "v3", "v3-sec", "v4", "v5", "v5-sec", "proposed"}) {
      auto policy = policy_from_tag(tag);
      outsider[tag] = to_string(probe_outsider_join(policy));
      eavesdrop[tag] = to_string(probe_eavesdrop(policy.security_mode, o.probe_clients));
    }
    result = {{"OutsiderJoin", outsider},
              {"Eavesdrop", eavesdrop},
              {"Discovery",
               {{"isolation_off", probe_discovery(false, o.probe_clients)},
                {"isolation_on", probe_discovery(true, o.probe_clients)}}},
              {"CertClone", clone_probe(false)}};
  }
  out << result.dump() << "\n";
}

std::vector<std::pair<std::string, AuditRecord>> read_log_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::StorageFailure, "cannot open " + path);
  std::vector<std::pair<std::string, AuditRecord>> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto record = parse_audit_line(line);
    out.emplace_back(line, std::move(record));
  }
  return out;
}

void cmd_audit_query(const Options& o, std::ostream& out) {
  AuditFilter filter{o.who, o.device, o.where, o.from, o.to, {}};
  for (const auto& e : o.events) filter.events.insert(parse_audit_event(e));
  for (const auto& [line, record] : read_log_lines(o.log_path)) {
    if (filter.matches(record)) out << line << "\n";
  }
}

void cmd_audit_detect(const Options& o, std::ostream& out) {
  std::vector<AuditRecord> records;
  for (auto& [line, record] : read_log_lines(o.log_path)) records.push_back(std::move(record));
  SuspicionThresholds thresholds;
  thresholds.window = o.window;
  thresholds.login_failures = o.login_failures;
  for (const auto& flag : detect_suspicion(records, thresholds)) out << to_json(flag).dump() << "\n";
}

void cmd_validate(const Options& o, std::ostream& out) {
  std::vector<Zone> zones = default_zones();
  Ruleset rules = default_ruleset();
  if (!o.topology_path.empty()) {
    auto j = read_json_file(o.topology_path);
    if (j.contains("zones")) zones = zones_from_json(j.at("zones"));
    if (j.contains("rules")) rules = ruleset_from_json(j.at("rules"));
  }
  for (const auto& v : validate_topology(zones, rules)) out << to_json(v).dump() << "\n";
}

void cmd_portal_serve(const Options& o, std::ostream& err) {
  auto directory = Directory::from_json(read_json_file(o.directory_path));
  auto policy = policy_from_tag(o.policy_tag);
  GatewayConfig config;
  config.redirect_mode = parse_redirect_mode(o.redirect_mode);
  config.portal_port = static_cast<std::uint16_t>(o.port);
  AuditLog audit;
  Gateway gateway(config, &audit);
  auto origin = std::chrono::steady_clock::now();
  PortalContext ctx;
  ctx.gateway = &gateway;
  ctx.directory = &directory;
  ctx.policy = policy;
  // Simulated epoch advanced by elapsed real time.
  ctx.clock = [origin, start = o.start] {
    return start + std::chrono::duration_cast<std::chrono::seconds>(std::chrono::steady_clock::now() - origin).count();
  };
  ctx.resolve_device = [](Ipv4Address ip) -> std::optional<DeviceBinding> {
    auto v = ip.value();
    MacAddress::Bytes mac{0x02, 0x00, static_cast<std::uint8_t>(v >> 24), static_cast<std::uint8_t>(v >> 16),
                          static_cast<std::uint8_t>(v >> 8), static_cast<std::uint8_t>(v)};
    return DeviceBinding{ip, MacAddress(mac), "portal"};
  };
  PortalServer server(ctx);
  err << "portal listening on " << o.host << ":" << o.port << "\n";
  if (!server.listen(o.host, o.port)) fail(ErrorCode::InvalidConfig, "cannot listen on port " + std::to_string(o.port));
}

}  // namespace

int run(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
  std::vector<std::string> args = raw_args;
  if (const char* config_path = std::getenv("BYODSIM_CONFIG"); config_path && *config_path) {
    try {
      args = merge_config(args, read_json_file(config_path));
    } catch (const Error& e) {
      err << "byodsim: BYODSIM_CONFIG: " << e.what() << "\n";
      return kExitUsage;
    }
  }

  Options o;
  CLI::App app{"Campus BYOD network simulator", "byodsim"};
  app.require_subcommand(1);

  auto* simulate = app.add_subcommand("simulate", "Run a scenario and print metrics JSON");
  simulate->add_option("--scenario", o.scenario_path, "Scenario JSON file")->required();
  simulate->add_option("--seed", o.seed, "Random seed (required)");
  simulate->add_option("--out", o.out_path, "Also write metrics JSON here");
  simulate->add_option("--audit-out", o.audit_out, "Write the audit log (JSONL) here");
  simulate->add_option("--samples-out", o.samples_out, "Write throughput samples (JSONL) here");

  auto* policy = app.add_subcommand("policy", "Policy presets");
  policy->require_subcommand(1);
  auto* policy_preset = policy->add_subcommand("preset", "Print a preset as JSON");
  policy_preset->add_option("version", o.preset_tag, "v1..v5, v3-sec, v5-sec or proposed")->required();
  policy_preset->add_flag("--companion", o.companion, "Print the companion SEC network instead");
  policy_preset->add_option("--category-file", o.category_files, "Extra blacklist domains, one per line");

  auto* capacity = app.add_subcommand("capacity", "Per-client throughput estimate");
  capacity->add_option("--channels", o.channels, "Raw channel rates in Mbps, e.g. 300,300");
  auto* clients_opt = capacity->add_option("--clients", o.clients, "Equal clients sharing the AP");
  auto* rates_opt = capacity->add_option("--rates", o.rates, "Per-client PHY rates for the airtime model");
  clients_opt->excludes(rates_opt);
  capacity->add_option("--overhead", o.overhead);
  capacity->add_option("--contention", o.contention);
  capacity->add_option("--misc", o.misc);

  auto* probe = app.add_subcommand("probe", "Run risk probes");
  probe->require_subcommand(1);
  auto* probe_outsider = probe->add_subcommand("outsider", "Unregistered device tries to browse");
  probe_outsider->add_option("--policy", o.policy_tag, "Preset tag");
  probe_outsider->add_option("--redirect-mode", o.redirect_mode, "DnsHijack, HttpRedirect or IcmpRedirect");
  probe_outsider->add_flag("--spoof", o.spoof, "Forge the source address");
  auto* probe_eaves = probe->add_subcommand("eavesdrop", "Passive listener on the same AP");
  probe_eaves->add_option("--security", o.security, "Open, WEP, WPA or WPA2");
  probe_eaves->add_option("--clients", o.probe_clients, "Stations on the AP");
  auto* probe_disc = probe->add_subcommand("discovery", "Peer discovery on the local segment");
  probe_disc->add_option("--clients", o.probe_clients, "Stations on the segment")->check(CLI::PositiveNumber);
  probe_disc->add_flag("--isolation", o.isolation, "Host isolation enabled");
  auto* probe_clone = probe->add_subcommand("clone", "Present a certificate from a second device");
  probe_clone->add_flag("--expired", o.expired, "Attempt after the certificate expired");
  auto* probe_matrix = probe->add_subcommand("matrix", "Every probe against every preset");
  probe_matrix->add_option("--clients", o.probe_clients)->check(CLI::PositiveNumber);

  auto* audit = app.add_subcommand("audit", "Audit log tools");
  audit->require_subcommand(1);
  auto* audit_query = audit->add_subcommand("query", "Print matching records verbatim");
  auto* audit_detect = audit->add_subcommand("detect", "Print suspicion flags as JSON lines");
  for (auto* sub : {audit_query, audit_detect}) {
    sub->add_option("--log", o.log_path, "Audit JSONL file")->required();
  }
  audit_query->add_option("--who", o.who);
  audit_query->add_option("--device", o.device, "Device id, MAC or IP");
  audit_query->add_option("--where", o.where);
  audit_query->add_option("--from", o.from, "Earliest timestamp, inclusive");
  audit_query->add_option("--to", o.to, "Latest timestamp, inclusive");
  audit_query->add_option("--event", o.events, "Event kind; repeatable");
  audit_detect->add_option("--window", o.window, "Seconds")->check(CLI::NonNegativeNumber);
  audit_detect->add_option("--login-failures", o.login_failures)->check(CLI::PositiveNumber);

  auto* validate = app.add_subcommand("validate", "Check a firewall topology; violations as JSON lines");
  validate->add_option("--topology", o.topology_path, "{zones, rules} JSON; defaults to the shipped layout");

  auto* portal = app.add_subcommand("portal", "Captive portal");
  portal->require_subcommand(1);
  auto* portal_serve = portal->add_subcommand("serve", "Serve GET/POST /login");
  portal_serve->add_option("--directory", o.directory_path, "Student directory JSON")->required();
  portal_serve->add_option("--policy", o.policy_tag);
  portal_serve->add_option("--host", o.host);
  portal_serve->add_option("--port", o.port);
  portal_serve->add_option("--redirect-mode", o.redirect_mode);
  portal_serve->add_option("--start", o.start, "Simulated epoch at startup");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "byodsim: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  try {
    if (*simulate) {
      cmd_simulate(o, out);
    } else if (*policy_preset) {
      cmd_policy_preset(o, out);
    } else if (*capacity) {
      if (o.rates.empty() && clients_opt->count() == 0) throw CLI::RequiredError("--clients or --rates");
      cmd_capacity(o, out);
    } else if (*probe) {
      std::string which = *probe_outsider ? "outsider"
                          : *probe_eaves  ? "eavesdrop"
                          : *probe_disc   ? "discovery"
                          : *probe_clone  ? "clone"
                                          : "matrix";
      cmd_probe(which, o, out);
    } else if (*audit_query) {
      cmd_audit_query(o, out);
    } else if (*audit_detect) {
      cmd_audit_detect(o, out);
    } else if (*validate) {
      cmd_validate(o, out);
    } else if (*portal_serve) {
      cmd_portal_serve(o, err);
    }
  } catch (const CLI::Error& e) {
    err << "byodsim: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  } catch (const Error& e) {
    err << "byodsim: " << to_string(e.code()) << ": " << e.what() << "\n";
    return kExitDomainError;
  } catch (const json::exception& e) {
    err << "byodsim: " << e.what() << "\n";
    return kExitDomainError;
  }
  return kExitOk;
}

}  // namespace byod::cli
