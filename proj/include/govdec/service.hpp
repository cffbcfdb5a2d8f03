#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "govdec/engine.hpp"

namespace httplib {
class Server;
}

namespace govdec {

/// Deterministic sample: rank ids by SHA256(seed ":" id) and take the first
/// round(rate * n). Output is in rank order.
std::vector<std::string> qa_sample(const std::vector<std::string>& ids, double rate, const std::string& seed);

struct ServiceOptions {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string operator_token;
  std::string reviewer_token;
  /// Domain and workflow names resolve to <config_root>/domains/<name>.yaml
  /// and <config_root>/workflows/<name>.yaml.
  std::filesystem::path config_root;
  std::chrono::milliseconds heartbeat = std::chrono::seconds(15);
  double qa_rate = 0.10;
  std::string qa_seed = "qa";
  /// Optional directory served at / (the reviewer console build).
  std::filesystem::path static_dir;
};

/// REST + SSE front end. Handlers never touch instance state directly; they
/// go through the engine, which serializes per instance.
class Service {
 public:
  Service(Engine& engine, ServiceOptions options);
  ~Service();

  /// Binds and serves on the calling thread until stop().
  bool listen();
  /// Binds an ephemeral port; serve with listen_after_bind().
  int bind_any_port();
  bool listen_after_bind();
  void stop();
  bool running() const;

  /// Runs the sampler over completed SPOT_CHECK instances and queues the
  /// picks for non-blocking review.
  std::vector<std::string> run_qa_sample(double rate, const std::string& seed);

 private:
  void routes();

  Engine& engine_;
  ServiceOptions opts_;
  std::unique_ptr<httplib::Server> server_;
  std::shared_ptr<std::atomic<bool>> stopping_;
};

}  // namespace govdec
