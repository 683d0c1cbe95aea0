#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>

#include "byod/captive_portal.hpp"

namespace byod {

struct HttpReply {
  int status = 200;
  std::string content_type = "text/html; charset=utf-8";
  std::string body;
};

// Everything the login page needs to turn a form post into a session.
struct PortalContext {
  Gateway* gateway = nullptr;
  const Directory* directory = nullptr;
  PolicyConfig policy;
  std::function<Timestamp()> clock;
  // Maps the client address to its lease; unknown clients get 403.
  std::function<std::optional<DeviceBinding>(Ipv4Address)> resolve_device;
  // Certificate verdict for the device when NAC is on.
  std::function<std::optional<CertVerdict>(const DeviceBinding&)> check_certificate;
};

std::string login_page();

// Form fields: student_id, password, reference (optional).
HttpReply handle_login_post(const PortalContext& context, const std::map<std::string, std::string>& form,
                            Ipv4Address remote);

// GET /login and POST /login on a background thread.
class PortalServer {
 public:
  explicit PortalServer(PortalContext context);
  ~PortalServer();
  PortalServer(const PortalServer&) = delete;
  PortalServer& operator=(const PortalServer&) = delete;

  // Port 0 picks a free port. Returns the bound port.
  int start(const std::string& host, int port);
  // Blocks in the calling thread until stop().
  bool listen(const std::string& host, int port);
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace byod
