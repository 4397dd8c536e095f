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
#include <string>
#include <string_view>

namespace convrec::http {

struct Url {
  std::string origin;  // scheme://host[:port]
  std::string path;    // begins with '/'
};

// Throws ConfigError on anything but http(s)://host[:port][/path].
Url parse_url(std::string_view url);

struct Response {
  bool transport_ok = false;
  int status = 0;
  std::string body;
  std::string error;  // transport error description
};

Response post_json(const Url& url, const std::string& body, const std::string& bearer_token,
                   std::chrono::seconds timeout);

// Connection failures, 408, 429 and 5xx are worth retrying.
bool is_transient(const Response& response);
bool is_auth_failure(const Response& response);

// `value` when nonempty, else the environment variable (or "").
std::string value_or_env(const std::string& value, const char* variable);

}  // namespace convrec::http
