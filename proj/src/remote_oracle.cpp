#include "blackbandit/remote_oracle.hpp"

#include "blackbandit/errors.hpp"

#include <httplib.h>
#include <nlohmann/json.hpp>

#include <chrono>

namespace bb {

using nlohmann::json;

namespace {

std::string normalize(std::string endpoint) {
  if (endpoint.empty()) throw ConfigError("remote oracle needs an endpoint");
  if (endpoint.rfind("http://", 0) != 0 && endpoint.rfind("https://", 0) != 0) {
    endpoint = "http://" + endpoint;
  }
  while (!endpoint.empty() && endpoint.back() == '/') endpoint.pop_back();
  return endpoint;
}

httplib::Client client_for(const std::string& base, double timeout) {
  httplib::Client client(base);
  const auto usec = std::chrono::microseconds(static_cast<long long>(timeout * 1e6));
  client.set_connection_timeout(std::chrono::duration_cast<std::chrono::seconds>(usec));
  client.set_read_timeout(std::chrono::duration_cast<std::chrono::seconds>(usec));
  return client;
}

json parse_response(const httplib::Result& res, const std::string& route) {
  if (!res) throw TransportError(route + ": " + httplib::to_string(res.error()));
  if (res->status < 200 || res->status >= 300) {
    throw TransportError(route + ": HTTP " + std::to_string(res->status) + " " + res->body);
  }
  try {
    return json::parse(res->body);
  } catch (const json::exception& e) {
    throw TransportError(route + ": malformed body: " + e.what());
  }
}

json points_json(std::span<const Vector> points) {
  json arr = json::array();
  for (const auto& x : points) arr.push_back(std::vector<double>(x.data(), x.data() + x.size()));
  return arr;
}

}  // namespace

RemoteOracle::RemoteOracle(std::string endpoint, double timeout_seconds)
    : base_url_(normalize(std::move(endpoint))), timeout_(timeout_seconds) {
  auto client = client_for(base_url_, timeout_);
  const json meta = parse_response(client.Get("/v1/meta"), "GET /v1/meta");
  try {
    dimension_ = meta.at("dimension").get<std::size_t>();
    num_classes_ = meta.at("num_classes").get<std::size_t>();
  } catch (const json::exception& e) {
    throw TransportError(std::string("GET /v1/meta: malformed body: ") + e.what());
  }
  if (dimension_ == 0) throw TransportError("GET /v1/meta: dimension must be positive");
}

std::vector<double> RemoteOracle::compute_losses(std::span<const Vector> points, int label) const {
  json body;
  body["points"] = points_json(points);
  body["label"] = label;
  auto client = client_for(base_url_, timeout_);
  const json reply = parse_response(client.Post("/v1/loss", body.dump(), "application/json"), "POST /v1/loss");
  try {
    auto losses = reply.at("losses").get<std::vector<double>>();
    if (losses.size() != points.size()) throw TransportError("POST /v1/loss: wrong number of losses");
    return losses;
  } catch (const json::exception& e) {
    throw TransportError(std::string("POST /v1/loss: malformed body: ") + e.what());
  }
}

std::vector<int> RemoteOracle::compute_top_classes(std::span<const Vector> points) const {
  json body;
  body["points"] = points_json(points);
  auto client = client_for(base_url_, timeout_);
  const json reply =
      parse_response(client.Post("/v1/top_class", body.dump(), "application/json"), "POST /v1/top_class");
  try {
    auto classes = reply.at("classes").get<std::vector<int>>();
    if (classes.size() != points.size()) throw TransportError("POST /v1/top_class: wrong number of classes");
    return classes;
  } catch (const json::exception& e) {
    throw TransportError(std::string("POST /v1/top_class: malformed body: ") + e.what());
  }
}

}  // namespace bb
