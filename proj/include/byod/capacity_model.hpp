#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "byod/net_model.hpp"

namespace byod {

// Fractions of throughput lost at each stage of the degradation chain. They
// compose multiplicatively: retained = (1-overhead)(1-contention)(1-misc).
struct DegradationFactors {
  double overhead = 0.45;    // protocol and packet overhead, 40-50% in the field
  double contention = 0.50;  // uneven client distribution across channels
  double misc = 0.25;        // retransmissions, rogue-network interference

  void validate() const;
  double retained() const { return (1.0 - overhead) * (1.0 - contention) * (1.0 - misc); }

  bool operator==(const DegradationFactors&) const = default;
};

void to_json(nlohmann::json& j, const DegradationFactors& f);
// Missing keys keep their defaults.
void from_json(const nlohmann::json& j, DegradationFactors& f);

double effective_ap_throughput(const AccessPoint& ap, const DegradationFactors& factors);

// Equal-share model: every client gets effective throughput / n.
double per_client_throughput(const AccessPoint& ap, std::size_t n_clients,
                             const DegradationFactors& factors);

struct ClientLoad {
  std::string device_id;
  double phy_rate = 0;          // Mbps
  double offered_packets = 1;   // uniform packet size
};

// Airtime fraction per client: time spent transmitting its packets at its
// PHY rate, normalised over the cell.
std::vector<double> airtime_share(std::span<const ClientLoad> loads);

// Per-client Mbps when clients share one AP under the airtime model. A
// client at the AP's fastest channel rate in a cell of identical clients gets
// exactly the equal share; slower clients drag the whole cell down.
std::vector<double> client_throughputs(const AccessPoint& ap, std::span<const ClientLoad> loads,
                                       const DegradationFactors& factors);

}  // namespace byod
