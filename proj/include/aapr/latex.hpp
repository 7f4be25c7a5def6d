// Copyright 2026 The AAPR Authors.
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

#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "aapr/error.hpp"

namespace aapr::latex {

/// Text of the seven paper modules as pulled out of one LaTeX source.
/// Authors are split but not yet normalized.
struct ParsedSource {
  std::string title;
  std::vector<std::string> authors;
  std::string abstract;
  std::string introduction;
  std::string related_work;
  std::string methods;
  std::string conclusion;
  std::vector<std::string> warnings;
};

/// Removes `%` comments up to (not including) the newline. `\%` is kept.
inline std::string strip_comments(std::string_view src) {
  std::string out;
  out.reserve(src.size());
  for (std::size_t i = 0; i < src.size(); ++i) {
    if (src[i] == '%') {
      std::size_t backslashes = 0;
      for (std::size_t j = i; j > 0 && src[j - 1] == '\\'; --j) ++backslashes;
      if (backslashes % 2 == 0) {
        while (i < src.size() && src[i] != '\n') ++i;
        if (i < src.size()) out += '\n';
        continue;
      }
    }
    out += src[i];
  }
  return out;
}

namespace detail {

inline bool is_letter(char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; }

inline bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

/// Index just past the group opened at `open` (s[open] == '{'), or npos when
/// the braces never balance.
inline std::size_t match_brace(std::string_view s, std::size_t open) {
  int depth = 0;
  for (std::size_t i = open; i < s.size(); ++i) {
    if (s[i] == '\\') {
      ++i;
      continue;
    }
    if (s[i] == '{') ++depth;
    if (s[i] == '}' && --depth == 0) return i + 1;
  }
  return std::string_view::npos;
}

/// Same for `[...]`, tracking nested braces so `[a{]}b]` is one argument.
inline std::size_t match_bracket(std::string_view s, std::size_t open) {
  int braces = 0;
  for (std::size_t i = open + 1; i < s.size(); ++i) {
    if (s[i] == '\\') {
      ++i;
      continue;
    }
    if (s[i] == '{') ++braces;
    if (s[i] == '}') --braces;
    if (s[i] == ']' && braces <= 0) return i + 1;
  }
  return std::string_view::npos;
}

inline std::size_t skip_inline_space(std::string_view s, std::size_t i) {
  // A blank line ends argument scanning, as in TeX.
  int newlines = 0;
  while (i < s.size() && is_space(s[i])) {
    if (s[i] == '\n' && ++newlines > 1) break;
    ++i;
  }
  return i;
}

struct Arguments {
  std::vector<std::string_view> braces;
  std::size_t end = 0;
};

/// Reads `[opt]*{arg}*` following a command name ending at `pos`.
inline Arguments read_arguments(std::string_view s, std::size_t pos, std::size_t max_braces = 8) {
  Arguments args;
  args.end = pos;
  std::size_t i = pos;
  while (true) {
    const std::size_t j = skip_inline_space(s, i);
    if (j >= s.size()) break;
    if (s[j] == '[' && args.braces.empty()) {
      const std::size_t close = match_bracket(s, j);
      if (close == std::string_view::npos) break;
      i = args.end = close;
      continue;
    }
    if (s[j] == '{' && args.braces.size() < max_braces) {
      const std::size_t close = match_brace(s, j);
      if (close == std::string_view::npos) break;
      args.braces.push_back(s.substr(j + 1, close - j - 2));
      i = args.end = close;
      continue;
    }
    break;
  }
  return args;
}

/// Position of the first `\name` command (not a longer command name) at or
/// after `from`.
inline std::size_t find_command(std::string_view s, std::string_view name, std::size_t from = 0) {
  const std::string needle = "\\" + std::string(name);
  for (std::size_t at = s.find(needle, from); at != std::string_view::npos;
       at = s.find(needle, at + 1)) {
    std::size_t backslashes = 0;
    for (std::size_t j = at; j > 0 && s[j - 1] == '\\'; --j) ++backslashes;
    if (backslashes % 2 == 1) continue;
    const std::size_t after = at + needle.size();
    if (after < s.size() && is_letter(s[after])) continue;
    return at;
  }
  return std::string_view::npos;
}

inline std::string begin_tag(std::string_view env) { return "\\begin{" + std::string(env) + "}"; }
inline std::string end_tag(std::string_view env) { return "\\end{" + std::string(env) + "}"; }

/// Index just past the `\end{env}` matching a `\begin{env}` whose tag ends at
/// `from`, honouring nesting of the same environment.
inline std::size_t find_env_end(std::string_view s, std::string_view env, std::size_t from) {
  const std::string open = begin_tag(env), close = end_tag(env);
  int depth = 1;
  std::size_t i = from;
  while (true) {
    const std::size_t o = s.find(open, i), c = s.find(close, i);
    if (c == std::string_view::npos) return std::string_view::npos;
    if (o != std::string_view::npos && o < c) {
      ++depth;
      i = o + open.size();
      continue;
    }
    if (--depth == 0) return c + close.size();
    i = c + close.size();
  }
}

inline const std::unordered_set<std::string_view>& dropped_environments() {
  static const std::unordered_set<std::string_view> envs = {
      "equation", "equation*", "align",    "align*",    "alignat",   "alignat*",
      "eqnarray", "eqnarray*", "gather",   "gather*",   "multline",  "multline*",
      "flalign",  "flalign*",  "math",     "displaymath", "figure",  "figure*",
      "table",    "table*",    "wrapfigure", "wraptable", "tabular", "tabular*",
      "tabularx", "thebibliography",
  };
  return envs;
}

/// Commands removed together with their arguments.
inline const std::unordered_set<std::string_view>& dropped_commands() {
  static const std::unordered_set<std::string_view> cmds = {
      "cite",      "citep",     "citet",      "citealp",  "citealt",  "citeauthor",
      "citeyear",  "citeyearpar", "nocite",   "Cite",     "Citep",    "Citet",
      "ref",       "eqref",     "autoref",    "cref",     "Cref",     "pageref",
      "label",     "includegraphics", "bibliographystyle", "vspace", "hspace",
      "vspace*",   "hspace*",   "thanks",     "footnotemark",
  };
  return cmds;
}

/// Extra commands dropped inside \author blocks.
inline const std::unordered_set<std::string_view>& dropped_author_commands() {
  static const std::unordered_set<std::string_view> cmds = {
      "footnote", "email", "inst", "affil", "affiliation", "institute", "orcid", "textsuperscript",
  };
  return cmds;
}

/// Renders LaTeX markup to plain text: math, figures, tables, citations and
/// cross-references vanish, any other command is replaced by the text of its
/// last brace argument.
class Renderer {
 public:
  explicit Renderer(bool in_author = false) : in_author_(in_author) {}

  std::string render(std::string_view s) const {
    std::string out;
    out.reserve(s.size());
    render_into(s, out);
    return out;
  }

 private:
  void render_into(std::string_view s, std::string& out) const {
    std::size_t i = 0;
    while (i < s.size()) {
      const char c = s[i];
      if (c == '\\') {
        i = command(s, i, out);
      } else if (c == '$') {
        i = inline_math(s, i);
      } else if (c == '{' || c == '}') {
        ++i;
      } else if (c == '~') {
        out += ' ';
        ++i;
      } else {
        out += c;
        ++i;
      }
    }
  }

  static std::size_t inline_math(std::string_view s, std::size_t i) {
    const bool display = i + 1 < s.size() && s[i + 1] == '$';
    std::size_t j = i + (display ? 2 : 1);
    while (j < s.size()) {
      if (s[j] == '\\') {
        j += 2;
        continue;
      }
      if (s[j] == '$') {
        if (!display) return j + 1;
        if (j + 1 < s.size() && s[j + 1] == '$') return j + 2;
      }
      ++j;
    }
    // Unbalanced: drop the dollar sign alone.
    return i + (display ? 2 : 1);
  }

  std::size_t command(std::string_view s, std::size_t i, std::string& out) const {
    if (i + 1 >= s.size()) return i + 1;
    const char next = s[i + 1];
    if (!is_letter(next)) {
      switch (next) {
        case '\\': {
          out += ' ';
          std::size_t j = i + 2;
          if (j < s.size() && s[j] == '[') {
            if (auto close = match_bracket(s, j); close != std::string_view::npos) j = close;
          }
          return j;
        }
        case '[':
        case '(': {
          const std::string close = next == '[' ? "\\]" : "\\)";
          const std::size_t at = s.find(close, i + 2);
          return at == std::string_view::npos ? i + 2 : at + 2;
        }
        case '%': case '&': case '_': case '#': case '$': case '{': case '}':
          out += next;
          return i + 2;
        case ' ': case ',': case ';': case ':': case '!': case '\n':
          out += ' ';
          return i + 2;
        default:
          // Accents and other control symbols.
          return i + 2;
      }
    }
    std::size_t j = i + 1;
    while (j < s.size() && is_letter(s[j])) ++j;
    if (j < s.size() && s[j] == '*') ++j;
    const std::string_view name = s.substr(i + 1, j - i - 1);

    if (name == "begin") return begin_environment(s, j, out);
    if (name == "end") {
      const Arguments args = read_arguments(s, j, 1);
      out += ' ';
      return args.end;
    }
    if (name == "item") {
      const Arguments args = read_arguments(s, j, 0);
      out += ' ';
      return args.end;
    }
    if (name == "par" || name == "newline" || name == "linebreak") {
      out += ' ';
      return j;
    }
    const Arguments args = read_arguments(s, j);
    if (dropped_commands().contains(name) ||
        (in_author_ && dropped_author_commands().contains(name))) {
      return args.end;
    }
    if (!args.braces.empty()) render_into(args.braces.back(), out);
    return args.end;
  }

  std::size_t begin_environment(std::string_view s, std::size_t j, std::string& out) const {
    const std::size_t k = skip_inline_space(s, j);
    if (k >= s.size() || s[k] != '{') return j;
    const std::size_t close = match_brace(s, k);
    if (close == std::string_view::npos) return j;
    const std::string_view env = s.substr(k + 1, close - k - 2);
    if (dropped_environments().contains(env)) {
      const std::size_t end = find_env_end(s, env, close);
      // Unclosed: the rest is plain text (reported by the structure check).
      out += ' ';
      return end == std::string_view::npos ? close : end;
    }
    out += ' ';
    // Environment arguments such as itemize options are not prose.
    std::size_t after = close;
    if (after < s.size() && s[after] == '[') {
      if (auto c = match_bracket(s, after); c != std::string_view::npos) after = c;
    }
    return after;
  }

  bool in_author_;
};

/// Single spaces between words, none before closing punctuation.
inline std::string collapse_whitespace(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool pending = false;
  for (char c : s) {
    if (is_space(c)) {
      pending = !out.empty();
      continue;
    }
    const bool closing = c == '.' || c == ',' || c == ';' || c == ':' || c == '!' || c == '?';
    if (pending && !closing) out += ' ';
    pending = false;
    out += c;
  }
  return out;
}

/// Reports every \begin{env} in `body` without a matching \end{env}.
inline std::vector<std::string> unclosed_environments(std::string_view body) {
  std::vector<std::string> stack, unclosed;
  std::size_t i = 0;
  while (i < body.size()) {
    const std::size_t b = find_command(body, "begin", i);
    const std::size_t e = find_command(body, "end", i);
    const std::size_t at = std::min(b, e);
    if (at == std::string_view::npos) break;
    const bool is_begin = at == b;
    std::size_t k = skip_inline_space(body, at + (is_begin ? 6 : 4));
    if (k >= body.size() || body[k] != '{') {
      i = at + 1;
      continue;
    }
    const std::size_t close = match_brace(body, k);
    if (close == std::string_view::npos) {
      i = at + 1;
      continue;
    }
    std::string env(body.substr(k + 1, close - k - 2));
    i = close;
    if (is_begin) {
      // Verbatim-like and dropped environments are skipped as a whole when
      // they close properly, so their content cannot unbalance the check.
      if (dropped_environments().contains(env)) {
        const std::size_t end = find_env_end(body, env, close);
        if (end == std::string_view::npos) {
          unclosed.push_back(env);
          continue;
        }
        i = end;
        continue;
      }
      stack.push_back(std::move(env));
      continue;
    }
    auto it = std::find(stack.rbegin(), stack.rend(), env);
    if (it == stack.rend()) continue;  // stray \end
    const auto keep = static_cast<std::size_t>(stack.rend() - it) - 1;
    for (std::size_t d = stack.size() - 1; d > keep; --d) unclosed.push_back(stack[d]);
    stack.resize(keep);
  }
  unclosed.insert(unclosed.end(), stack.begin(), stack.end());
  return unclosed;
}

inline std::optional<std::string_view> command_argument(std::string_view s, std::string_view name,
                                                        std::size_t* at_out = nullptr,
                                                        std::size_t* end_out = nullptr) {
  const std::size_t at = find_command(s, name);
  if (at == std::string_view::npos) return std::nullopt;
  const Arguments args = read_arguments(s, at + 1 + name.size(), 1);
  if (args.braces.empty()) return std::nullopt;
  if (at_out) *at_out = at;
  if (end_out) *end_out = args.end;
  return args.braces.front();
}

/// Splits an \author argument on \and, \\ and commas at brace depth zero.
inline std::vector<std::string> split_authors(std::string_view arg) {
  std::vector<std::string> pieces;
  std::string current;
  int depth = 0;
  auto flush = [&] {
    pieces.push_back(current);
    current.clear();
  };
  for (std::size_t i = 0; i < arg.size(); ++i) {
    const char c = arg[i];
    if (c == '{') ++depth;
    if (c == '}') --depth;
    if (depth == 0 && c == ',') {
      flush();
      continue;
    }
    if (depth == 0 && c == '\\' && i + 1 < arg.size()) {
      if (arg[i + 1] == '\\') {
        flush();
        i += 1;
        if (i + 1 < arg.size() && arg[i + 1] == '[') {
          if (auto close = match_bracket(arg, i + 1); close != std::string_view::npos) {
            i = close - 1;
          }
        }
        continue;
      }
      std::size_t j = i + 1;
      while (j < arg.size() && is_letter(arg[j])) ++j;
      const std::string_view name = arg.substr(i + 1, j - i - 1);
      if (name == "and" || name == "And" || name == "AND") {
        flush();
        i = j - 1;
        continue;
      }
    }
    current += c;
  }
  flush();
  std::vector<std::string> authors;
  const Renderer renderer(/*in_author=*/true);
  for (const auto& p : pieces) {
    if (auto name = collapse_whitespace(renderer.render(p)); !name.empty()) {
      authors.push_back(std::move(name));
    }
  }
  return authors;
}

enum class Slot { introduction, related_work, methods, conclusion };

inline Slot classify_heading(std::string_view heading) {
  std::string h;
  for (char c : heading) {
    if (is_letter(c)) {
      h += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    } else if (!h.empty() && h.back() != ' ') {
      h += ' ';
    }
  }
  if (h.find("introduction") != std::string::npos) return Slot::introduction;
  if (h.find("related work") != std::string::npos || h.find("background") != std::string::npos) {
    return Slot::related_work;
  }
  if (h.find("conclusion") != std::string::npos || h.find("discussion") != std::string::npos) {
    return Slot::conclusion;
  }
  return Slot::methods;
}

}  // namespace detail

/// Splits a LaTeX source into the seven module texts.
///
/// Title and authors come from \title and \author, the abstract from the
/// abstract environment or \abstract{...}. Body sections are assigned by
/// heading keywords; unmatched sections are concatenated into methods. Text
/// before the first \section is treated as introduction. Everything after
/// \bibliography, \begin{thebibliography} or \appendix is dropped.
///
/// Throws MalformedSource when there is no \begin{document}. Unclosed
/// environments are reported in `warnings` and parsing continues.
inline ParsedSource parse_latex(std::string_view raw) {
  using namespace detail;
  ParsedSource out;
  const std::string src = strip_comments(raw);
  const std::string_view s = src;

  const std::string doc_begin = begin_tag("document");
  const std::size_t doc_at = s.find(doc_begin);
  if (doc_at == std::string_view::npos) {
    throw MalformedSource("missing \\begin{document}");
  }
  std::size_t body_begin = doc_at + doc_begin.size();
  std::size_t body_end = s.find(end_tag("document"), body_begin);
  if (body_end == std::string_view::npos) {
    out.warnings.push_back("unclosed environment 'document'");
    body_end = s.size();
  }
  std::string body(s.substr(body_begin, body_end - body_begin));

  for (const char* cut : {"bibliography", "printbibliography", "appendix"}) {
    if (auto at = find_command(body, cut); at != std::string::npos) body.resize(at);
  }
  if (auto at = body.find(begin_tag("thebibliography")); at != std::string::npos) body.resize(at);

  for (auto& env : unclosed_environments(body)) {
    out.warnings.push_back("unclosed environment '" + env + "'");
  }

  const Renderer renderer;
  auto render = [&](std::string_view t) { return collapse_whitespace(renderer.render(t)); };

  // Title and authors may sit in the preamble or the body.
  if (auto title = command_argument(s, "title")) out.title = render(*title);
  for (std::size_t from = 0;;) {
    const std::size_t at = find_command(s, "author", from);
    if (at == std::string_view::npos) break;
    const Arguments args = read_arguments(s, at + 7, 1);
    if (!args.braces.empty()) {
      for (auto& a : split_authors(args.braces.front())) out.authors.push_back(std::move(a));
    }
    from = std::max(args.end, at + 1);
  }

  // Abstract: environment first, then the \abstract{...} command form.
  const std::string abs_begin = begin_tag("abstract");
  auto extract_abstract_env = [&](std::string& text) -> bool {
    const std::size_t at = text.find(abs_begin);
    if (at == std::string::npos) return false;
    const std::size_t end = find_env_end(text, "abstract", at + abs_begin.size());
    if (end == std::string::npos) {
      // Already reported as unclosed when it is in the body.
      text.erase(at, abs_begin.size());
      return false;
    }
    const std::size_t inner = at + abs_begin.size();
    out.abstract = render(std::string_view(text).substr(inner, end - end_tag("abstract").size() - inner));
    text.erase(at, end - at);
    return true;
  };
  if (!extract_abstract_env(body)) {
    std::string preamble(s.substr(0, doc_at));
    if (!extract_abstract_env(preamble)) {
      std::size_t at = 0, end = 0;
      if (auto arg = command_argument(body, "abstract", &at, &end)) {
        out.abstract = render(*arg);
        body.erase(at, end - at);
      } else if (auto parg = command_argument(preamble, "abstract")) {
        out.abstract = render(*parg);
      }
    }
  }

  // Title-page commands inside the body carry no module text.
  for (const char* cmd : {"title", "author", "maketitle", "date", "keywords"}) {
    for (std::size_t at = find_command(body, cmd); at != std::string::npos;
         at = find_command(body, cmd, at)) {
      const Arguments args = read_arguments(body, at + 1 + std::char_traits<char>::length(cmd), 1);
      body.erase(at, args.end - at);
    }
  }

  // Section boundaries.
  struct Heading {
    std::size_t at, content_begin;
    Slot slot;
  };
  std::vector<Heading> headings;
  for (std::size_t from = 0;;) {
    std::size_t at = find_command(body, "section", from);
    if (at == std::string::npos) {
      // \section* parses as "section" followed by '*' which find_command
      // accepts, so nothing else to look for.
      break;
    }
    std::size_t j = at + 8;
    if (j < body.size() && body[j] == '*') ++j;
    const Arguments args = read_arguments(body, j, 1);
    const std::string heading = args.braces.empty() ? std::string() : render(args.braces.front());
    headings.push_back({at, args.end, classify_heading(heading)});
    from = std::max(args.end, at + 1);
  }

  std::array<std::string, 4> slots;
  auto append = [&](Slot slot, std::string_view text) {
    std::string rendered = render(text);
    if (rendered.empty()) return;
    auto& dst = slots[static_cast<std::size_t>(slot)];
    if (!dst.empty()) dst += ' ';
    dst += rendered;
  };
  append(Slot::introduction,
         std::string_view(body).substr(0, headings.empty() ? body.size() : headings.front().at));
  for (std::size_t h = 0; h < headings.size(); ++h) {
    const std::size_t end = h + 1 < headings.size() ? headings[h + 1].at : body.size();
    append(headings[h].slot,
           std::string_view(body).substr(headings[h].content_begin, end - headings[h].content_begin));
  }
  out.introduction = std::move(slots[0]);
  out.related_work = std::move(slots[1]);
  out.methods = std::move(slots[2]);
  out.conclusion = std::move(slots[3]);
  return out;
}

}  // namespace aapr::latex
