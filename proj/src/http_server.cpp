#include "trellis/gateway.hpp"

#include <httplib.h>

#include <mutex>
#include <thread>

namespace trellis {

namespace {

int status_for(Errc code) {
    switch (code) {
    case Errc::ValidationFailure: return 400;
    case Errc::UnknownEntryPoint: return 404;
    case Errc::IsolationViolation: return 409;
    default: return 500;
    }
}

}  // namespace

struct HttpServer::Impl {
    Gateway& gw;
    httplib::Server server;
    std::thread thread;
    std::mutex mutex;  // the simulated runtime is single-threaded

    explicit Impl(Gateway& g) : gw(g) {
        server.Get("/health", [](const httplib::Request&, httplib::Response& res) {
            res.set_content(Value{{"status", "ok"}}.dump(), "application/json");
        });

        server.Get("/walkers", [this](const httplib::Request&, httplib::Response& res) {
            std::lock_guard<std::mutex> lock(mutex);
            Value list = Value::array();
            for (const auto& name : gw.list_entrypoints()) {
                const EntryPointSpec& sp = gw.spec(name);
                Value params = Value::array();
                for (const auto& p : sp.params)
                    params.push_back(Value{{"name", p.external_name},
                                           {"type", value_type_name(p.type)},
                                           {"required", p.required}});
                list.push_back(Value{{"name", name},
                                     {"archetype", sp.walker_archetype},
                                     {"params", params}});
            }
            res.set_content(Value{{"walkers", list}}.dump(), "application/json");
        });

        server.Post(R"(/walker/([^/]+))", [this](const httplib::Request& req,
                                                 httplib::Response& res) {
            const std::string name = req.matches[1];
            if (!req.has_header("X-User")) {
                res.status = 400;
                res.set_content(Value{{"error", "missing X-User header"}}.dump(),
                                "application/json");
                return;
            }
            const std::string user = req.get_header_value("X-User");

            Value params = Value::object();
            if (!req.body.empty()) {
                params = Value::parse(req.body, nullptr, false);
                if (params.is_discarded() || !params.is_object()) {
                    res.status = 400;
                    res.set_content(
                        Value{{"error", "request body must be a structured-text map"}}.dump(),
                        "application/json");
                    return;
                }
            }

            std::lock_guard<std::mutex> lock(mutex);
            Invocation inv = gw.invoke_traced(user, name, params);
            if (inv.ok) {
                res.status = 200;
                res.set_content(inv.result.dump(), "application/json");
            } else {
                res.status = status_for(inv.error_code);
                res.set_content(Value{{"error", inv.error},
                                      {"code", errc_name(inv.error_code)},
                                      {"detail", inv.error_detail},
                                      {"trace_id", inv.trace_id}}
                                    .dump(),
                                "application/json");
            }
        });
    }
};

HttpServer::HttpServer(Gateway& gw) : impl_(std::make_unique<Impl>(gw)) {}

HttpServer::~HttpServer() { stop(); }

int HttpServer::start(const std::string& host, int port) {
    if (port == 0) {
        port_ = impl_->server.bind_to_any_port(host);
    } else {
        if (!impl_->server.bind_to_port(host, port))
            raise(Errc::IoFailure, "cannot bind " + host + ":" + std::to_string(port));
        port_ = port;
    }
    impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
    return port_;
}

void HttpServer::stop() {
    if (!impl_) return;
    impl_->server.stop();
    if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace trellis
