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

#include "http.hpp"

#include <cstdlib>

#include <fmt/format.h>

#include "convrec/error.hpp"
#include "httplib.h"

namespace convrec::http {

Url parse_url(std::string_view url) {
  const std::size_t scheme_end = url.find("://");
  if (scheme_end == std::string_view::npos) {
    throw ConfigError(fmt::format("endpoint '{}' is not an absolute URL", url));
  }
  const std::string_view scheme = url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") {
    throw ConfigError(fmt::format("endpoint '{}' must use http or https", url));
  }
  const std::size_t path_start = url.find('/', scheme_end + 3);
  Url parsed;
  parsed.origin = std::string(url.substr(0, path_start));
  parsed.path = path_start == std::string_view::npos ? "/" : std::string(url.substr(path_start));
  if (parsed.origin.size() <= scheme_end + 3) {
    throw ConfigError(fmt::format("endpoint '{}' has no host", url));
  }
  return parsed;
}

Response post_json(const Url& url, const std::string& body, const std::string& bearer_token,
                   std::chrono::seconds timeout) {
  httplib::Client client(url.origin);
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);
  httplib::Headers headers;
  if (!bearer_token.empty()) headers.emplace("Authorization", "Bearer " + bearer_token);

  Response response;
  auto result = client.Post(url.path, headers, body, "application/json");
  if (!result) {
    response.error = httplib::to_string(result.error());
    return response;
  }
  response.transport_ok = true;
  response.status = result->status;
  response.body = result->body;
  return response;
}

bool is_transient(const Response& response) {
  if (!response.transport_ok) return true;
  return response.status == 408 || response.status == 429 || response.status >= 500;
}

bool is_auth_failure(const Response& response) {
  return response.transport_ok && (response.status == 401 || response.status == 403);
}

std::string value_or_env(const std::string& value, const char* variable) {
  if (!value.empty()) return value;
  const char* env = std::getenv(variable);
  return env ? std::string(env) : std::string();
}

}  // namespace convrec::http
