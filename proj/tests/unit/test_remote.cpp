#include "helpers.hpp"

#include "blackbandit/attack.hpp"
#include "blackbandit/errors.hpp"
#include "blackbandit/remote_oracle.hpp"
#include "blackbandit/suite.hpp"

#include <doctest.h>
#include <httplib.h>
#include <nlohmann/json.hpp>

#include <atomic>
#include <thread>

using namespace bb;
using nlohmann::json;

namespace {

enum class Fault { None, ServerError, Malformed, WrongCount };

// Minimal in-process service speaking the wire protocol for one local oracle.
class TestServer {
 public:
  explicit TestServer(OraclePtr oracle) : oracle_(std::move(oracle)) {
    server_.Get("/v1/meta", [this](const httplib::Request&, httplib::Response& res) {
      json body = {{"dimension", oracle_->dimension()}, {"num_classes", oracle_->num_classes()}};
      res.set_content(body.dump(), "application/json");
    });
    server_.Post("/v1/loss", [this](const httplib::Request& req, httplib::Response& res) {
      ++loss_requests;
      if (fault == Fault::ServerError) {
        res.status = 500;
        return;
      }
      if (fault == Fault::Malformed) {
        res.set_content("{not json", "application/json");
        return;
      }
      const json in = json::parse(req.body);
      std::vector<Vector> points;
      for (const auto& p : in.at("points")) {
        const auto v = p.get<std::vector<double>>();
        points.emplace_back(Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size())));
      }
      auto losses = oracle_->losses(points, in.at("label").get<int>());
      if (fault == Fault::WrongCount) losses.push_back(0.0);
      res.set_content(json({{"losses", losses}}).dump(17), "application/json");
    });
    server_.Post("/v1/top_class", [this](const httplib::Request& req, httplib::Response& res) {
      const json in = json::parse(req.body);
      std::vector<Vector> points;
      for (const auto& p : in.at("points")) {
        const auto v = p.get<std::vector<double>>();
        points.emplace_back(Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size())));
      }
      res.set_content(json({{"classes", oracle_->top_classes(points)}}).dump(), "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  ~TestServer() {
    server_.stop();
    thread_.join();
  }

  std::string endpoint() const { return "127.0.0.1:" + std::to_string(port_); }

  std::atomic<int> loss_requests{0};
  std::atomic<Fault> fault{Fault::None};

 private:
  OraclePtr oracle_;
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

}  // namespace

TEST_SUITE("remote") {
  TEST_CASE("meta, losses and top classes match the local oracle") {
    const auto local = make_oracle(OracleDescriptor{});
    TestServer server(local);
    RemoteOracle remote(server.endpoint());
    CHECK(remote.dimension() == 256);
    CHECK(remote.num_classes() == 10);
    CHECK_FALSE(remote.has_gradient());
    CHECK(remote.endpoint() == "http://" + server.endpoint());

    Rng rng(4);
    std::vector<Vector> points;
    for (int i = 0; i < 100; ++i) points.push_back((rng.gaussian(256, 0.3).array() + 0.5).matrix());
    const auto a = remote.losses(points, 3);
    const auto b = local->losses(points, 3);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a[i] - b[i]) <= 1e-6);
    CHECK(remote.top_classes(points) == local->top_classes(points));
    CHECK_THROWS_AS(remote.gradient(points[0], 0), Unsupported);
  }

  TEST_CASE("a batch is one request and charges the ledger by its size") {
    TestServer server(make_oracle(OracleDescriptor{}));
    OracleHandle h(std::make_shared<RemoteOracle>(server.endpoint()));
    h.loss_batch(std::vector<Vector>(3, Vector::Zero(256)), 0);
    CHECK(server.loss_requests == 1);
    CHECK(h.queries() == 3);
  }

  TEST_CASE("transport failures") {
    TestServer server(make_oracle(OracleDescriptor{}));
    RemoteOracle remote(server.endpoint());
    const std::vector<Vector> pts{Vector::Zero(256)};
    server.fault = Fault::ServerError;
    CHECK_THROWS_AS(remote.losses(pts, 0), TransportError);
    server.fault = Fault::Malformed;
    CHECK_THROWS_AS(remote.losses(pts, 0), TransportError);
    server.fault = Fault::WrongCount;
    CHECK_THROWS_AS(remote.losses(pts, 0), TransportError);
    server.fault = Fault::None;
    CHECK_NOTHROW(remote.losses(pts, 0));
  }

  TEST_CASE("unreachable endpoint") {
    int port = 0;
    {
      httplib::Server probe;
      port = probe.bind_to_any_port("127.0.0.1");
    }
    CHECK_THROWS_AS(RemoteOracle("127.0.0.1:" + std::to_string(port), 2.0), TransportError);
  }

  TEST_CASE("attack through the wire reproduces the local run") {
    const auto local = make_oracle(OracleDescriptor{});
    TestServer server(local);
    const auto remote = std::make_shared<RemoteOracle>(server.endpoint());
    SuiteSpec spec;
    spec.size = 1;
    const auto suite = make_suite(*local, spec);
    AttackConfig cfg;
    cfg.method = Method::Nes;
    cfg.nes.samples = 20;
    cfg.step = 0.005;
    cfg.max_queries = 400;
    Rng r1(11), r2(11);
    const auto a = run_attack(local, suite[0], cfg, r1);
    const auto b = run_attack(remote, suite[0], cfg, r2);
    CHECK_FALSE(b.outcome.aborted);
    CHECK(a.outcome.success == b.outcome.success);
    CHECK(a.outcome.queries_used == b.outcome.queries_used);
    CHECK(a.outcome.iterations == b.outcome.iterations);
  }

  TEST_CASE("server going away mid-attack aborts the run") {
    const auto local = make_oracle(OracleDescriptor{});
    std::shared_ptr<RemoteOracle> remote;
    LabeledInput in;
    {
      TestServer server(local);
      remote = std::make_shared<RemoteOracle>(server.endpoint(), 2.0);
      SuiteSpec spec;
      spec.size = 1;
      in = make_suite(*remote, spec)[0];
    }
    AttackConfig cfg;
    cfg.max_queries = 400;
    cfg.nes.samples = 20;
    Rng rng(1);
    const auto r = run_attack(remote, in, cfg, rng);
    CHECK(r.outcome.aborted);
    CHECK_FALSE(r.outcome.success);
    CHECK_FALSE(r.outcome.abort_reason.empty());
  }
}
