// HTTP front end. POST /v1/analyze takes a raw PNG or JPEG body and
// returns the canonical analysis document; GET /v1/health reports the
// loaded model's shape. Runs httplib in a background thread so tests
// can start and stop an instance on an ephemeral port.

#pragma once

#include <atomic>
#include <memory>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>

#include "salientcrop/errors.hpp"
#include "salientcrop/pipeline.hpp"
#include "salientcrop/store.hpp"

namespace salientcrop {

inline constexpr std::size_t kMaxRequestBytes = 16 * 1024 * 1024;

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 picks an ephemeral port
  AnalyzeOptions analyze;
};

inline bool acceptable_content_type(const std::string& ct) {
  if (ct.empty()) return true;
  const std::string base = ct.substr(0, ct.find(';'));
  return base == "image/png" || base == "image/jpeg" || base == "application/octet-stream";
}

class Service {
public:
  Service(LoadedModel model, ServiceConfig config)
      : model_(std::move(model)), config_(std::move(config)) {
    server_.set_payload_max_length(kMaxRequestBytes);
    server_.set_read_timeout(30, 0);
    server_.set_write_timeout(30, 0);

    server_.Get("/v1/health", [this](const httplib::Request&, httplib::Response& res) {
      std::string body = "{\"status\":\"ok\",\"model_k\":";
      body += std::to_string(model_.vocab.k());
      body += ",\"classes\":";
      body += std::to_string(model_.svm.class_count);
      body += "}";
      res.set_content(body, "application/json");
    });

    server_.Post("/v1/analyze", [this](const httplib::Request& req, httplib::Response& res) {
      if (req.has_header("Content-Type") &&
          !acceptable_content_type(req.get_header_value("Content-Type"))) {
        res.status = 415;
        res.set_content("{\"error\":\"unsupported media type\"}", "application/json");
        return;
      }
      AnalyzeOptions opts = config_.analyze;
      if (req.has_param("crops") && req.get_param_value("crops") == "png")
        opts.encode_crops = true;
      try {
        const std::vector<std::uint8_t> bytes(req.body.begin(), req.body.end());
        const AnalysisResult result = analyze_bytes(bytes, model_, opts);
        res.set_content(to_canonical_json(result), "application/json");
      } catch (const DecodeError&) {
        res.status = 400;
        res.set_content("{\"error\":\"decode\"}", "application/json");
      } catch (const std::exception&) {
        res.status = 500;
        res.set_content("{\"error\":\"internal\"}", "application/json");
      }
    });
  }

  ~Service() { stop(); }

  // Binds and serves on a background thread. Returns the bound port.
  int start() {
    if (running_.exchange(true)) return port_;
    if (config_.port == 0) {
      port_ = server_.bind_to_any_port(config_.host);
      if (port_ < 0) throw IoError("bind failed on " + config_.host);
    } else {
      if (!server_.bind_to_port(config_.host, config_.port))
        throw IoError("bind failed on " + config_.host + ":" + std::to_string(config_.port));
      port_ = config_.port;
    }
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
    return port_;
  }

  void stop() {
    if (!running_.exchange(false)) return;
    server_.stop();
    if (thread_.joinable()) thread_.join();
  }

  // Blocking variant for the CLI `serve` subcommand.
  void run() {
    if (!server_.bind_to_port(config_.host, config_.port))
      throw IoError("bind failed on " + config_.host + ":" + std::to_string(config_.port));
    port_ = config_.port;
    server_.listen_after_bind();
  }

  int port() const { return port_; }
  const LoadedModel& model() const { return model_; }

private:
  LoadedModel model_;
  ServiceConfig config_;
  httplib::Server server_;
  std::thread thread_;
  std::atomic<bool> running_{false};
  int port_ = -1;
};

}  // namespace salientcrop
