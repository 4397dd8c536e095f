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

#include "convrec/corpus.hpp"

namespace convrec {

// Version 1 of the bundled list. Entries are already in tokenizer form
// (contractions split at the apostrophe), so "don't" contributes "don" and "t".
// Changing this list changes every level-4 document; bump the version if so.
const std::unordered_set<std::string>& stop_words() {
  static const std::unordered_set<std::string> words = {
      "a", "about", "above", "after", "again", "against", "all", "also",
      "am", "an", "and", "any", "are", "aren", "as", "at",
      "be", "because", "been", "before", "being", "below", "between", "both",
      "but", "by", "can", "cannot", "could", "couldn", "d", "did",
      "didn", "do", "does", "doesn", "doing", "don", "down", "during",
      "each", "few", "for", "from", "further", "had", "hadn", "has",
      "hasn", "have", "haven", "having", "he", "her", "here", "hers",
      "herself", "him", "himself", "his", "how", "i", "if", "in",
      "into", "is", "isn", "it", "its", "itself", "just", "let",
      "ll", "m", "me", "more", "most", "mustn", "my", "myself",
      "no", "nor", "not", "of", "off", "on", "once", "only",
      "or", "other", "ought", "our", "ours", "ourselves", "out", "over",
      "own", "re", "s", "same", "shan", "she", "should", "shouldn",
      "so", "some", "such", "t", "than", "that", "the", "their",
      "theirs", "them", "themselves", "then", "there", "these", "they", "this",
      "those", "through", "to", "too", "under", "until", "up", "ve",
      "very", "was", "wasn", "we", "were", "weren", "what", "when",
      "where", "which", "while", "who", "whom", "why", "with", "won",
      "would", "wouldn", "you", "your", "yours", "yourself", "yourselves"};
  return words;
}

}  // namespace convrec
