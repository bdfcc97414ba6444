#include <httplib.h>

#include <mutex>
#include <thread>
#include <vector>

#include "atelier/codec.hpp"
#include "atelier/refiner.hpp"

namespace atelier::refiner {

namespace {

struct Endpoint {
  std::string origin;  // scheme://host[:port]
  std::string prefix;  // path without trailing slash
};

Endpoint parse_endpoint(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos || url.substr(0, scheme_end) != "http") {
    throw Error(ErrorCode::TransportError, "unsupported refiner endpoint '" + url + "' (expected http://host:port)");
  }
  const auto path_start = url.find('/', scheme_end + 3);
  Endpoint ep;
  ep.origin = url.substr(0, path_start);
  if (path_start != std::string::npos) ep.prefix = url.substr(path_start);
  while (!ep.prefix.empty() && ep.prefix.back() == '/') ep.prefix.pop_back();
  if (ep.origin.size() == scheme_end + 3) throw Error(ErrorCode::TransportError, "refiner endpoint has no host: " + url);
  return ep;
}

std::string error_message(const httplib::Result& res) {
  if (!res) return httplib::to_string(res.error());
  try {
    auto body = nlohmann::json::parse(res->body);
    if (body.contains("error")) return body.at("error").get<std::string>();
  } catch (const std::exception&) {
  }
  return res->body;
}

class HttpRefiner final : public Refiner {
 public:
  HttpRefiner(const std::string& url, HttpOptions options)
      : endpoint_(parse_endpoint(url)), options_(options) {
    auto client = acquire();
    auto res = client->Get(endpoint_.prefix + "/v1/info");
    if (!res) {
      throw Error(ErrorCode::TransportError,
                  "cannot reach refiner at " + url + ": " + httplib::to_string(res.error()));
    }
    if (res->status != 200) {
      throw Error(ErrorCode::TransportError,
                  "refiner info request failed with HTTP " + std::to_string(res->status));
    }
    try {
      caps_ = capabilities_from_json(nlohmann::json::parse(res->body));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::ProtocolError, std::string("info response is not JSON: ") + e.what());
    }
    release(std::move(client));
  }

  const RefinerCapabilities& capabilities() const override { return caps_; }

 protected:
  ImageBuffer refine_tile(const RefineRequest& req) override {
    const std::string body = to_json(req).dump();
    std::string last_error;
    auto delay = options_.backoff;
    for (int attempt = 0; attempt <= options_.retries; ++attempt) {
      if (attempt > 0) {
        std::this_thread::sleep_for(delay);
        delay *= 2;
      }
      auto client = acquire();
      auto res = client->Post(endpoint_.prefix + "/v1/refine", body, "application/json");
      if (!res) {
        last_error = httplib::to_string(res.error());
        continue;  // the client may hold a broken connection, so it is dropped
      }
      release(std::move(client));
      if (res->status >= 500) {
        last_error = "HTTP " + std::to_string(res->status) + ": " + error_message(res);
        continue;
      }
      if (res->status != 200) {
        throw Error(ErrorCode::RefinerError,
                    "refiner rejected " + req.pass_id + " (HTTP " + std::to_string(res->status) +
                        "): " + error_message(res));
      }
      return decode_response(res->body);
    }
    throw Error(ErrorCode::TransportError,
                "refiner request " + req.pass_id + " failed after " +
                    std::to_string(options_.retries + 1) + " attempts: " + last_error);
  }

 private:
  static ImageBuffer decode_response(const std::string& text) {
    nlohmann::json body;
    try {
      body = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::ProtocolError, std::string("refine response is not JSON: ") + e.what());
    }
    if (!body.is_object() || !body.contains("image") || !body["image"].is_string()) {
      throw Error(ErrorCode::ProtocolError, "refine response lacks a string 'image' field");
    }
    try {
      return decode_png(base64_decode(body["image"].get<std::string>()));
    } catch (const Error& e) {
      throw Error(ErrorCode::ProtocolError, std::string("refine response image: ") + e.what());
    }
  }

  std::unique_ptr<httplib::Client> acquire() {
    {
      std::lock_guard lock(mutex_);
      if (!pool_.empty()) {
        auto client = std::move(pool_.back());
        pool_.pop_back();
        return client;
      }
    }
    auto client = std::make_unique<httplib::Client>(endpoint_.origin);
    client->set_connection_timeout(options_.connect_timeout);
    client->set_read_timeout(options_.timeout);
    client->set_write_timeout(options_.timeout);
    client->set_keep_alive(true);
    return client;
  }

  void release(std::unique_ptr<httplib::Client> client) {
    std::lock_guard lock(mutex_);
    if (pool_.size() < options_.pool_size) pool_.push_back(std::move(client));
  }

  Endpoint endpoint_;
  HttpOptions options_;
  RefinerCapabilities caps_;
  std::mutex mutex_;
  std::vector<std::unique_ptr<httplib::Client>> pool_;
};

}  // namespace

RefinerHandle make_http_refiner(const std::string& endpoint, HttpOptions options) {
  return std::make_shared<HttpRefiner>(endpoint, options);
}

}  // namespace atelier::refiner
