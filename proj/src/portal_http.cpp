#include "byod/portal_http.hpp"

#include <thread>

#include <httplib.h>

namespace byod {

std::string login_page() {
  return R"(<!doctype html>
<html><head><title>Campus Wi-Fi Login</title></head>
<body>
<h1>Campus Wi-Fi</h1>
<form method="post" action="/login">
<label>Student ID <input name="student_id" required></label><br>
<label>Password <input name="password" type="password" required></label><br>
<label>Reference number <input name="reference"></label><br>
<button type="submit">Log in</button>
</form>
</body></html>
)";
}

HttpReply handle_login_post(const PortalContext& ctx, const std::map<std::string, std::string>& form,
                            Ipv4Address remote) {
  auto field = [&](const char* name) -> std::string {
    auto it = form.find(name);
    return it == form.end() ? std::string() : it->second;
  };
  if (field("student_id").empty()) return {400, "text/plain", "student_id required\n"};

  auto device = ctx.resolve_device ? ctx.resolve_device(remote) : std::nullopt;
  if (!device) return {403, "text/plain", "no lease for " + remote.str() + "\n"};

  Credentials credentials{field("student_id"), field("password"), std::nullopt};
  if (!field("reference").empty()) credentials.reference = field("reference");
  auto verdict = ctx.check_certificate ? ctx.check_certificate(*device) : std::nullopt;
  auto now = ctx.clock ? ctx.clock() : Timestamp{0};

  auto result = ctx.gateway->login(*ctx.directory, credentials, *device, verdict, ctx.policy, now);
  switch (result.outcome) {
    case LoginOutcome::Success:
      return {200, "application/json", to_json(*result.session).dump() + "\n"};
    case LoginOutcome::AuthFailed:
      return {401, "text/plain", "AuthFailed\n"};
    case LoginOutcome::DirectoryUnavailable:
      return {503, "text/plain", "DirectoryUnavailable\n"};
    case LoginOutcome::CertificateRejected:
      return {403, "text/plain", "CertificateRejected\n"};
  }
  return {500, "text/plain", "unreachable\n"};
}

struct PortalServer::Impl {
  PortalContext context;
  httplib::Server server;
  std::thread worker;
};

PortalServer::PortalServer(PortalContext context) : impl_(std::make_unique<Impl>()) {
  impl_->context = std::move(context);
  auto* impl = impl_.get();
  impl->server.Get("/login", [](const httplib::Request&, httplib::Response& res) {
    res.set_content(login_page(), "text/html; charset=utf-8");
  });
  impl->server.Post("/login", [impl](const httplib::Request& req, httplib::Response& res) {
    std::map<std::string, std::string> form;
    for (const auto& [k, v] : req.params) form.emplace(k, v);
    HttpReply reply;
    try {
      reply = handle_login_post(impl->context, form, Ipv4Address::parse(req.remote_addr));
    } catch (const std::exception& e) {
      reply = {400, "text/plain", std::string(e.what()) + "\n"};
    }
    res.status = reply.status;
    res.set_content(reply.body, reply.content_type);
  });
}

PortalServer::~PortalServer() { stop(); }

int PortalServer::start(const std::string& host, int port) {
  int bound = port;
  if (port == 0) {
    bound = impl_->server.bind_to_any_port(host);
  } else if (!impl_->server.bind_to_port(host, port)) {
    bound = -1;
  }
  if (bound < 0) fail(ErrorCode::InvalidConfig, "cannot bind " + host + ":" + std::to_string(port));
  impl_->worker = std::thread([impl = impl_.get()] { impl->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return bound;
}

bool PortalServer::listen(const std::string& host, int port) { return impl_->server.listen(host, port); }

void PortalServer::stop() {
  impl_->server.stop();
  if (impl_->worker.joinable()) impl_->worker.join();
}

}  // namespace byod
