// Copyright 2026 The EntailSum Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//
// HTTP client for a remote scoring service.
//
// Wire protocol: POST <endpoint>/score
//   request  {"pairs":[{"premise":"...","hypothesis":"..."}, ...]}
//   response {"scores":[r1, ..., rn]}   n must equal the request length
// Content type application/json; requests carry an "x-request-id" header.

#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <memory>
#include <string>
#include <thread>
#include <vector>

#include "httplib.h"
#include "json.hpp"

#include "entailsum/entailment.hpp"
#include "entailsum/error.hpp"

namespace entailsum {

struct RemoteScorerOptions {
  std::string endpoint;            // e.g. "http://127.0.0.1:8090"
  std::string score_path = "/score";
  int max_retries = 3;             // retries after the first attempt
  int initial_backoff_ms = 50;     // doubled per retry, capped below
  int max_backoff_ms = 2000;
  int timeout_seconds = 120;
};

// Transient failures (connect errors, 5xx) are retried with bounded
// exponential backoff. 4xx responses and protocol violations (length
// mismatch, malformed body, out-of-range scores) are permanent and surface
// immediately. Safe for concurrent score_batch() calls: each call owns its
// connection and retry state.
class RemoteScorer : public Scorer {
 public:
  explicit RemoteScorer(RemoteScorerOptions options) : options_(std::move(options)) {
    if (options_.endpoint.empty()) {
      throw ValidationError("remote scorer requires an endpoint");
    }
  }

  std::string id() const override { return "remote-nli/v1"; }

  double score(const std::string& premise, const std::string& hypothesis) override {
    return score_batch({{premise, hypothesis}}).front();
  }

  std::vector<double> score_batch(const std::vector<ScorePair>& pairs) override {
    if (pairs.empty()) throw ValidationError("score_batch called with no pairs");

    nlohmann::json body;
    auto& arr = body["pairs"] = nlohmann::json::array();
    for (const auto& p : pairs) {
      arr.push_back({{"premise", p.premise}, {"hypothesis", p.hypothesis}});
    }
    const std::string payload = body.dump();
    const std::string request_id = "req-" + std::to_string(next_request_id_.fetch_add(1));

    std::string last_failure;
    int backoff_ms = options_.initial_backoff_ms;
    for (int attempt = 0; attempt <= options_.max_retries; ++attempt) {
      if (attempt > 0) {
        total_retries_.fetch_add(1);
        std::this_thread::sleep_for(std::chrono::milliseconds(backoff_ms));
        backoff_ms = std::min(backoff_ms * 2, options_.max_backoff_ms);
      }
      httplib::Client client(options_.endpoint);
      client.set_connection_timeout(options_.timeout_seconds, 0);
      client.set_read_timeout(options_.timeout_seconds, 0);
      httplib::Headers headers = {{"x-request-id", request_id}};
      auto res = client.Post(options_.score_path, headers, payload, "application/json");
      if (!res) {
        last_failure = "connection failed (" + httplib::to_string(res.error()) + ")";
        continue;  // transient
      }
      if (res->status >= 500) {
        last_failure = "server returned status " + std::to_string(res->status);
        continue;  // transient
      }
      if (res->status != 200) {
        throw ServiceError("scoring endpoint " + options_.endpoint +
                           " returned status " + std::to_string(res->status));
      }
      return parse_scores(res->body, pairs.size());
    }
    throw ServiceError("scoring endpoint " + options_.endpoint + " unavailable after " +
                       std::to_string(options_.max_retries) + " retries: " + last_failure);
  }

  int64_t total_retries() const { return total_retries_.load(); }

 private:
  std::vector<double> parse_scores(const std::string& body, size_t expected) const {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(body);
    } catch (const nlohmann::json::exception& e) {
      throw ServiceError(std::string("protocol violation: response is not JSON (") +
                         e.what() + ")");
    }
    if (!j.contains("scores") || !j["scores"].is_array()) {
      throw ServiceError("protocol violation: response missing \"scores\" array");
    }
    const auto& arr = j["scores"];
    if (arr.size() != expected) {
      throw ServiceError("protocol violation: requested " + std::to_string(expected) +
                         " scores, got " + std::to_string(arr.size()));
    }
    std::vector<double> out;
    out.reserve(arr.size());
    for (const auto& v : arr) {
      if (!v.is_number()) throw ServiceError("protocol violation: non-numeric score");
      double d = v.get<double>();
      if (d < 0.0 || d > 1.0) {
        throw ServiceError("protocol violation: score out of [0,1]: " + format_fixed(d, 6));
      }
      out.push_back(d);
    }
    return out;
  }

  RemoteScorerOptions options_;
  std::atomic<int64_t> total_retries_{0};
  std::atomic<uint64_t> next_request_id_{1};
};

}  // namespace entailsum
