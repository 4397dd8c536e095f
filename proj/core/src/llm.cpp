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

#include "convrec/llm.hpp"

#include <algorithm>
#include <chrono>
#include <thread>

#include <fmt/chrono.h>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "convrec/error.hpp"
#include "http.hpp"
#include "json.hpp"

namespace convrec {

using json = nlohmann::json;

std::string_view to_string(Role role) {
  switch (role) {
    case Role::kSystem:
      return "system";
    case Role::kUser:
      return "user";
    case Role::kAssistant:
      return "assistant";
  }
  return "user";
}

void check_history(std::span<const ChatMessage> history) {
  if (history.empty()) throw ConfigError("chat history is empty");
  for (const auto& message : history) {
    if (message.content.empty()) throw ConfigError("chat message has no content");
  }
  if (history.back().role != Role::kUser) {
    throw ConfigError("chat history must end with a user message");
  }
}

SessionLog::SessionLog(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  out_.open(path, std::ios::app);
  if (!out_) throw DataError(fmt::format("cannot open session log {}", path.string()));
}

void SessionLog::append(int turn, std::string_view direction, std::string_view content) {
  const auto now = std::chrono::time_point_cast<std::chrono::milliseconds>(
      std::chrono::system_clock::now());
  const json line = {{"turn", turn},
                     {"direction", direction},
                     {"content", content},
                     {"timestamp", fmt::format("{:%Y-%m-%dT%H:%M:%S}Z", now)}};
  std::lock_guard lock(mutex_);
  out_ << line.dump() << '\n';
  out_.flush();
  ++counts_[std::string(direction)];
}

std::size_t SessionLog::count(std::string_view direction) const {
  std::lock_guard lock(mutex_);
  const auto it = counts_.find(std::string(direction));
  return it == counts_.end() ? 0 : it->second;
}

TokenBucket::TokenBucket(double requests_per_minute)
    : rate_per_second_(requests_per_minute / 60.0),
      capacity_(std::max(1.0, requests_per_minute)),
      tokens_(std::max(1.0, requests_per_minute)),
      last_(Clock::now()) {}

std::optional<TokenBucket::Clock::duration> TokenBucket::try_acquire(Clock::time_point now) {
  if (rate_per_second_ <= 0.0) return std::nullopt;
  std::lock_guard lock(mutex_);
  if (now > last_) {
    const double elapsed = std::chrono::duration<double>(now - last_).count();
    tokens_ = std::min(capacity_, tokens_ + elapsed * rate_per_second_);
    last_ = now;
  }
  if (tokens_ >= 1.0) {
    tokens_ -= 1.0;
    return std::nullopt;
  }
  const double wait = (1.0 - tokens_) / rate_per_second_;
  return std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(wait));
}

void TokenBucket::acquire() {
  while (const auto wait = try_acquire(Clock::now())) std::this_thread::sleep_for(*wait);
}

RemoteChatClient::RemoteChatClient(RemoteChatConfig config)
    : config_(std::move(config)), bucket_(config_.requests_per_minute) {
  if (config_.endpoint.empty()) throw ConfigError("chat endpoint is not configured");
  if (config_.model.empty()) throw ConfigError("chat model is not configured");
  config_.api_key = http::value_or_env(config_.api_key, "CONVREC_CHAT_API_KEY");
  if (config_.api_key.empty()) {
    throw ConfigError("no chat API key: set CONVREC_CHAT_API_KEY");
  }
  http::parse_url(config_.endpoint);
  if (config_.max_retries < 0) throw ConfigError("max_retries must be non-negative");
}

std::string RemoteChatClient::complete(const CompletionRequest& request) {
  check_history(request.history);
  json messages = json::array();
  for (const auto& message : request.history) {
    messages.push_back({{"role", to_string(message.role)}, {"content", message.content}});
  }
  const json payload = {
      {"model", config_.model}, {"temperature", request.temperature}, {"messages", messages}};
  const std::string body = payload.dump();
  const auto url = http::parse_url(config_.endpoint);
  if (request.log) request.log->append(request.turn, "request", request.history.back().content);

  auto backoff = config_.initial_backoff;
  for (int attempt = 0;; ++attempt) {
    bucket_.acquire();
    const auto response = http::post_json(url, body, config_.api_key, config_.timeout);
    if (http::is_auth_failure(response)) {
      throw AuthenticationError(fmt::format(
          "chat endpoint rejected the credentials (HTTP {}); check CONVREC_CHAT_API_KEY",
          response.status));
    }
    if (response.transport_ok && response.status == 200) {
      std::string content;
      try {
        content = json::parse(response.body)
                      .at("choices")
                      .at(0)
                      .at("message")
                      .at("content")
                      .get<std::string>();
      } catch (const json::exception& e) {
        throw RemoteError(fmt::format("malformed chat response: {}", e.what()));
      }
      if (request.log) request.log->append(request.turn, "response", content);
      return content;
    }
    const std::string failure =
        response.transport_ok ? fmt::format("HTTP {}", response.status) : response.error;
    if (!http::is_transient(response)) {
      throw RemoteError(fmt::format("chat request failed: {}", failure));
    }
    if (attempt >= config_.max_retries) {
      throw RemoteError(
          fmt::format("chat request failed after {} retries: {}", config_.max_retries, failure));
    }
    if (request.log) request.log->append(request.turn, "retry", failure);
    spdlog::warn("chat request failed ({}), retrying in {} ms", failure, backoff.count());
    std::this_thread::sleep_for(backoff);
    backoff = std::min(backoff * 2, config_.max_backoff);
  }
}

}  // namespace convrec
