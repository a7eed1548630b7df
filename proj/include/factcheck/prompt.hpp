#pragma once

// Prompt rendering and verdict parsing. One prompt asks one yes/no
// question: does this summary exhibit one named error type with
// respect to its article?
//
// Templates carry a system text and a user text with the placeholders
// {article}, {summary}, {label_name}, and {label_definition}. Rendering
// is a single pass over the template, so placeholder-shaped text inside
// an article is never re-substituted.

#include <algorithm>
#include <cctype>
#include <fstream>
#include <string>
#include <string_view>

#include "factcheck/backend.hpp"
#include "factcheck/core.hpp"
#include "factcheck/errors.hpp"

namespace factcheck {

struct PromptTemplate {
  std::string system_text;
  std::string user_text;
  std::size_t article_char_budget = kDefaultArticleCharBudget;

  // News articles front-load the key facts, so head-first truncation
  // keeps the part most likely to ground the verdict.
  static constexpr std::size_t kDefaultArticleCharBudget = 6000;
};

inline PromptTemplate default_prompt_template() {
  PromptTemplate t;
  t.system_text = "You are a careful fact-checking assistant.";
  t.user_text =
      "You are given a news article and a machine-generated summary of it.\n"
      "\n"
      "Article:\n"
      "{article}\n"
      "\n"
      "Summary:\n"
      "{summary}\n"
      "\n"
      "The error type \"{label_name}\" is defined as follows: {label_definition}\n"
      "\n"
      "Does the summary exhibit this error type with respect to the article?\n"
      "Answer with exactly \"Yes\" or \"No\".";
  return t;
}

// Template files hold the same two texts under `[system]` and `[user]`
// section markers, each on its own line.
inline PromptTemplate load_prompt_template(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open template file: " + path);
  }
  PromptTemplate t;
  std::string* section = nullptr;
  std::string line;
  bool saw_system = false;
  bool saw_user = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') {
      line.pop_back();
    }
    if (line == "[system]") {
      section = &t.system_text;
      saw_system = true;
      continue;
    }
    if (line == "[user]") {
      section = &t.user_text;
      saw_user = true;
      continue;
    }
    if (section == nullptr) {
      if (line.empty()) {
        continue;
      }
      throw IoError("template file " + path + " must start with a [system] or [user] section");
    }
    if (!section->empty()) {
      section->push_back('\n');
    }
    *section += line;
  }
  if (!saw_system || !saw_user) {
    throw IoError("template file " + path + " needs both [system] and [user] sections");
  }
  return t;
}

struct RenderedPrompt {
  std::string system;
  std::string user;
};

namespace detail {

// Truncate to at most `budget` characters, keeping the head. Never
// splits a UTF-8 sequence: a cut that would land mid-character backs
// off to the previous boundary.
inline std::string_view truncate_head(std::string_view text, std::size_t budget) {
  if (text.size() <= budget) {
    return text;
  }
  std::size_t end = budget;
  while (end > 0 && (static_cast<unsigned char>(text[end]) & 0xC0) == 0x80) {
    --end;
  }
  return text.substr(0, end);
}

inline std::string substitute_placeholders(std::string_view tmpl, const DocumentPair& pair,
                                           ErrorLabel label, std::size_t article_budget) {
  std::string out;
  out.reserve(tmpl.size() + pair.summary.size() +
              std::min(pair.article.size(), article_budget));
  std::size_t i = 0;
  while (i < tmpl.size()) {
    if (tmpl[i] == '{') {
      auto try_match = [&](std::string_view name) {
        return tmpl.substr(i).starts_with(name);
      };
      if (try_match("{article}")) {
        out += truncate_head(pair.article, article_budget);
        i += 9;
        continue;
      }
      if (try_match("{summary}")) {
        out += pair.summary;
        i += 9;
        continue;
      }
      if (try_match("{label_name}")) {
        out += canonical_name(label);
        i += 12;
        continue;
      }
      if (try_match("{label_definition}")) {
        out += label_definition(label);
        i += 18;
        continue;
      }
    }
    out.push_back(tmpl[i]);
    ++i;
  }
  return out;
}

}  // namespace detail

// Pure: identical inputs render byte-identical output.
inline RenderedPrompt render_prompt(const DocumentPair& pair, ErrorLabel label,
                                    const PromptTemplate& tmpl) {
  RenderedPrompt rendered;
  rendered.system =
      detail::substitute_placeholders(tmpl.system_text, pair, label, tmpl.article_char_budget);
  rendered.user =
      detail::substitute_placeholders(tmpl.user_text, pair, label, tmpl.article_char_budget);
  return rendered;
}

namespace detail {

inline char ascii_lower(char c) {
  return static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
}

inline std::string first_alpha_token(std::string_view text) {
  std::size_t i = 0;
  while (i < text.size() && !std::isalpha(static_cast<unsigned char>(text[i]))) {
    ++i;
  }
  std::string token;
  while (i < text.size() && std::isalpha(static_cast<unsigned char>(text[i]))) {
    token.push_back(ascii_lower(text[i]));
    ++i;
  }
  return token;
}

// Whole-word, case-insensitive containment.
inline bool contains_word(std::string_view text, std::string_view word) {
  for (std::size_t i = 0; i + word.size() <= text.size(); ++i) {
    bool match = true;
    for (std::size_t j = 0; j < word.size(); ++j) {
      if (ascii_lower(text[i + j]) != word[j]) {
        match = false;
        break;
      }
    }
    if (!match) {
      continue;
    }
    bool left_ok = i == 0 || !std::isalpha(static_cast<unsigned char>(text[i - 1]));
    std::size_t after = i + word.size();
    bool right_ok = after >= text.size() || !std::isalpha(static_cast<unsigned char>(text[after]));
    if (left_ok && right_ok) {
      return true;
    }
  }
  return false;
}

}  // namespace detail

// Total over all strings. The first alphabetic token decides when it
// is literally "yes" or "no"; otherwise the first sentence must contain
// exactly one of the two words. Everything else is Ambiguous.
inline Verdict parse_verdict(std::string_view raw) {
  std::string token = detail::first_alpha_token(raw);
  if (token == "yes") {
    return Verdict::kYes;
  }
  if (token == "no") {
    return Verdict::kNo;
  }
  std::size_t sentence_end = raw.find_first_of(".!?");
  std::string_view sentence =
      sentence_end == std::string_view::npos ? raw : raw.substr(0, sentence_end);
  bool has_yes = detail::contains_word(sentence, "yes");
  bool has_no = detail::contains_word(sentence, "no");
  if (has_yes && !has_no) {
    return Verdict::kYes;
  }
  if (has_no && !has_yes) {
    return Verdict::kNo;
  }
  return Verdict::kAmbiguous;
}

struct ResolvedVerdict {
  Verdict verdict = Verdict::kNo;  // always Yes or No
  std::string raw_text;            // last raw response seen
  int attempts = 0;                // backend calls issued
};

// Queries the backend once, re-querying at the same temperature up to
// `retries` extra times while the output stays ambiguous. Output that
// never parses resolves to No: an unconfirmed error type is not
// asserted.
inline ResolvedVerdict resolve_verdict(const DocumentPair& pair, ErrorLabel label,
                                       double temperature, ChatBackend& backend,
                                       const PromptTemplate& tmpl, int retries,
                                       const std::string& model = std::string(kDefaultModel)) {
  RenderedPrompt rendered = render_prompt(pair, label, tmpl);
  CompletionRequest request;
  request.model = model;
  request.system = rendered.system;
  request.user = rendered.user;
  request.temperature = temperature;
  request.pair_id = pair.id;
  request.label = std::string(canonical_name(label));

  ResolvedVerdict resolved;
  for (int attempt = 0; attempt <= retries; ++attempt) {
    CompletionResponse response = backend.complete(request);
    ++resolved.attempts;
    resolved.raw_text = response.raw_text;
    Verdict v = parse_verdict(response.raw_text);
    if (v != Verdict::kAmbiguous) {
      resolved.verdict = v;
      return resolved;
    }
  }
  resolved.verdict = Verdict::kNo;
  return resolved;
}

}  // namespace factcheck
