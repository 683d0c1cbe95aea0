#include "byod/capacity_model.hpp"

#include <algorithm>
#include <numeric>

namespace byod {

void DegradationFactors::validate() const {
  for (double f : {overhead, contention, misc}) {
    if (!(f >= 0.0 && f < 1.0)) {
      fail(ErrorCode::InvalidConfig, "degradation fractions must lie in [0, 1)");
    }
  }
}

void to_json(nlohmann::json& j, const DegradationFactors& f) {
  j = {{"overhead", f.overhead}, {"contention", f.contention}, {"misc", f.misc}};
}

void from_json(const nlohmann::json& j, DegradationFactors& f) {
  f.overhead = j.value("overhead", f.overhead);
  f.contention = j.value("contention", f.contention);
  f.misc = j.value("misc", f.misc);
}

double effective_ap_throughput(const AccessPoint& ap, const DegradationFactors& factors) {
  factors.validate();
  double raw = 0;
  for (const auto& c : ap.channels) raw += c.raw_mbps;
  return raw * factors.retained();
}

double per_client_throughput(const AccessPoint& ap, std::size_t n_clients,
                             const DegradationFactors& factors) {
  if (n_clients == 0) fail(ErrorCode::ZeroClients, "per-client throughput of an empty cell");
  return effective_ap_throughput(ap, factors) / static_cast<double>(n_clients);
}

std::vector<double> airtime_share(std::span<const ClientLoad> loads) {
  if (loads.empty()) fail(ErrorCode::InvalidConfig, "airtime share of an empty cell");
  std::vector<double> time(loads.size());
  for (std::size_t i = 0; i < loads.size(); ++i) {
    if (!(loads[i].phy_rate > 0)) fail(ErrorCode::InvalidConfig, loads[i].device_id + ": phy_rate must be positive");
    if (loads[i].offered_packets < 0) fail(ErrorCode::InvalidConfig, loads[i].device_id + ": negative load");
    time[i] = loads[i].offered_packets / loads[i].phy_rate;
  }
  double total = std::accumulate(time.begin(), time.end(), 0.0);
  if (total <= 0) {
    // Nobody offers traffic: split evenly.
    std::fill(time.begin(), time.end(), 1.0 / static_cast<double>(loads.size()));
    return time;
  }
  for (auto& t : time) t /= total;
  return time;
}

std::vector<double> client_throughputs(const AccessPoint& ap, std::span<const ClientLoad> loads,
                                       const DegradationFactors& factors) {
  if (loads.empty()) return {};
  double effective = effective_ap_throughput(ap, factors);
  double reference = 0;
  for (const auto& c : ap.channels) reference = std::max(reference, c.raw_mbps);
  auto shares = airtime_share(loads);
  std::vector<double> out(loads.size());
  for (std::size_t i = 0; i < loads.size(); ++i) {
    double rate = std::min(loads[i].phy_rate, reference);
    out[i] = effective * shares[i] * rate / reference;
  }
  return out;
}

}  // namespace byod
