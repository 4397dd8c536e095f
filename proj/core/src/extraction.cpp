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

#include <regex>
#include <sstream>

#include "convrec/conversation.hpp"
#include "text_util.hpp"

namespace convrec {

std::vector<std::string> extract_titles(std::string_view completion) {
  static const std::regex item_line(R"(^\s*\d+[.)]\s+(.*\S)\s*$)");
  static const std::regex year_paren(R"(\(\d{4}\))");

  std::vector<std::string> titles;
  std::istringstream in{std::string(completion)};
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::smatch m;
    if (!std::regex_match(line, m, item_line)) continue;
    std::string title = m[1].str();
    std::smatch year;
    if (std::regex_search(title, year, year_paren)) {
      const auto end = static_cast<std::size_t>(year.position(0) + year.length(0));
      const std::string_view rest = std::string_view(title).substr(end);
      for (const std::string_view delimiter : {" - ", " — ", ": "}) {
        if (rest.starts_with(delimiter)) {
          title.resize(end);
          break;
        }
      }
    }
    title = text::trim(title);
    if (!title.empty()) titles.push_back(std::move(title));
  }
  if (titles.empty() && !text::trim(completion).empty()) {
    throw ExtractionError("completion contains no numbered list");
  }
  return titles;
}

}  // namespace convrec
