/*
 * Copyright 2026 The convrec Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "convrec/corpus.hpp"
#include "convrec/embedding.hpp"
#include "convrec/matching.hpp"

namespace convrec {

enum class Role { kSystem, kUser, kAssistant };

std::string_view to_string(Role role);

struct ChatMessage {
  Role role = Role::kUser;
  std::string content;
};

// Append-only JSONL log: {"turn", "direction", "content", "timestamp"}.
// Direction is "request", "response" or "retry".
class SessionLog {
 public:
  explicit SessionLog(const std::filesystem::path& path);

  void append(int turn, std::string_view direction, std::string_view content);
  std::size_t count(std::string_view direction) const;

 private:
  mutable std::mutex mutex_;
  std::ofstream out_;
  std::unordered_map<std::string, std::size_t> counts_;
};

struct CompletionRequest {
  std::span<const ChatMessage> history;
  double temperature = 0.0;
  std::uint64_t seed = 0;
  SessionLog* log = nullptr;  // optional
  int turn = 0;
};

class ChatClient {
 public:
  virtual ~ChatClient() = default;
  virtual std::string name() const = 0;
  // Throws ConfigError when the history is empty or does not end with a user
  // message.
  virtual std::string complete(const CompletionRequest& request) = 0;
};

// Throws ConfigError unless the history is nonempty, every message has
// content and the last message is from the user.
void check_history(std::span<const ChatMessage> history);

// Thread-safe token bucket holding at most one minute of requests.
class TokenBucket {
 public:
  using Clock = std::chrono::steady_clock;

  // requests_per_minute <= 0 disables limiting.
  explicit TokenBucket(double requests_per_minute);

  // Blocks until a token is available.
  void acquire();
  // Takes a token if one is available at `now`; otherwise returns how long
  // to wait.
  std::optional<Clock::duration> try_acquire(Clock::time_point now);

 private:
  std::mutex mutex_;
  double rate_per_second_;
  double capacity_;
  double tokens_;
  Clock::time_point last_;
};

struct RemoteChatConfig {
  std::string endpoint;  // full URL, e.g. https://host/v1/chat/completions
  std::string model;
  // Read from CONVREC_CHAT_API_KEY when empty.
  std::string api_key;
  double requests_per_minute = 60.0;
  int max_retries = 5;
  std::chrono::milliseconds initial_backoff{1000};
  std::chrono::milliseconds max_backoff{30000};
  std::chrono::seconds timeout{120};
};

// POST {"model", "temperature", "messages": [{"role", "content"}]} ->
// {"choices": [{"message": {"content": ...}}]}.
class RemoteChatClient final : public ChatClient {
 public:
  // Throws ConfigError without an endpoint, model or API key.
  explicit RemoteChatClient(RemoteChatConfig config);

  std::string name() const override { return "remote:" + config_.model; }
  // Transport errors, 408, 429 and 5xx are retried with exponential backoff
  // (each retry is logged); 401/403 throw AuthenticationError at once; other
  // failures and exhausted retries throw RemoteError.
  std::string complete(const CompletionRequest& request) override;

 private:
  RemoteChatConfig config_;
  TokenBucket bucket_;
};

struct SimulatedConfig {
  // Weight of log-popularity added to scores (the model's popularity bias).
  double popularity_bias = 2.5;
  // Weight subtracted instead when asked for less popular movies.
  double less_popular_penalty = 1.0;
  // Sampling temperature = request temperature × this scale.
  double temperature_scale = 0.5;
  // Probability that an emitted title gets one character substituted.
  double typo_rate = 0.0;
};

// Offline stand-in for a chat model. It reads the example movies, feedback
// and earlier answers from the conversation, scores every catalog item by
// summed similarity to liked minus disliked movies (plus a popularity bias) and
// answers with a numbered "1. Title (Year)" list of the requested length.
class SimulatedRecommender final : public ChatClient {
 public:
  // `popularity` counts how often each item was rated; absent items count 0.
  SimulatedRecommender(const Catalog& catalog, const EmbeddingStore& embeddings,
                       std::unordered_map<ItemId, std::size_t> popularity,
                       SimulatedConfig config = {});

  std::string name() const override { return "simulated"; }
  std::string complete(const CompletionRequest& request) override;

  // Candidate scores for explicit preferences; exposed for tests.
  double score(const ItemId& item, std::span<const ItemId> liked,
               std::span<const ItemId> disliked, bool less_popular) const;

 private:
  std::optional<ItemId> resolve(std::string_view title) const;

  const Catalog& catalog_;
  const EmbeddingStore& embeddings_;
  std::vector<double> popularity_;  // by store row, log1p-normalized to [0, 1]
  SimulatedConfig config_;
  TitleMatcher matcher_;
};

}  // namespace convrec
