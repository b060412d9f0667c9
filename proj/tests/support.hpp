// Shared helpers for the test suites: scratch directories, fixture lookup,
// and an in-process chat-completion endpoint with scripted replies.
#pragma once

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "vulnbench/util.hpp"

namespace testsupport {

// Directory holding the static fixtures, injected by the build.
inline std::filesystem::path fixtures_dir() {
#ifdef VULNBENCH_FIXTURES_DIR
  return std::filesystem::path(VULNBENCH_FIXTURES_DIR);
#else
  return std::filesystem::path("tests/fixtures");
#endif
}

// Directory holding the hash-pinned prompt templates, injected by the build.
inline std::filesystem::path prompts_dir() {
#ifdef VULNBENCH_PROMPTS_DIR
  return std::filesystem::path(VULNBENCH_PROMPTS_DIR);
#else
  return std::filesystem::path("assets/prompts");
#endif
}

// Fresh scratch directory, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<unsigned> counter{0};
    auto base = std::filesystem::temp_directory_path();
    path_ = base / ("vulnbench_test_" + std::to_string(::getpid()) + "_" +
                    std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

// Minimal chat-completion endpoint on a loopback port. The reply function
// receives the user-message content and returns the assistant text.
class MockModelServer {
 public:
  using ReplyFn = std::function<std::string(const std::string& prompt)>;

  explicit MockModelServer(ReplyFn reply) : reply_(std::move(reply)) {
    server_.Post("/v1/chat/completions", [this](const httplib::Request& req,
                                                httplib::Response& res) {
      ++requests_;
      auto body = nlohmann::json::parse(req.body);
      std::string prompt = body["messages"][0]["content"].get<std::string>();
      nlohmann::json reply = {
          {"choices", {{{"message", {{"role", "assistant"}, {"content", reply_(prompt)}}}}}}};
      res.set_content(reply.dump(), "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  ~MockModelServer() {
    server_.stop();
    if (thread_.joinable()) thread_.join();
  }

  int port() const { return port_; }
  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }
  int requests() const { return requests_.load(); }

 private:
  ReplyFn reply_;
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::atomic<int> requests_{0};
};

inline std::string read_fixture(const std::string& relative) {
  return vulnbench::read_file((fixtures_dir() / relative).string());
}

}  // namespace testsupport
