#include "rehearsal/prompts.hpp"

#include <cctype>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "rehearsal/errors.hpp"
#include "rehearsal/text.hpp"

namespace rehearsal {

namespace detail {
const std::map<std::string, std::string>& builtin_templates();
}

namespace {

constexpr std::string_view kSlotOpen = "{{";
constexpr std::string_view kSlotClose = "}}";

std::string substitute(const std::string& body,
                       const std::map<std::string, std::string>& slots,
                       const std::string& template_name) {
  std::string out;
  out.reserve(body.size());
  std::size_t pos = 0;
  while (pos < body.size()) {
    std::size_t open = body.find(kSlotOpen, pos);
    if (open == std::string::npos) {
      out.append(body, pos, std::string::npos);
      break;
    }
    out.append(body, pos, open - pos);
    std::size_t close = body.find(kSlotClose, open + 2);
    if (close == std::string::npos) {
      throw RenderError("unterminated slot marker in template " + template_name,
                        "");
    }
    std::string name = body.substr(open + 2, close - open - 2);
    auto it = slots.find(name);
    if (it == slots.end()) {
      throw RenderError("missing slot '" + name + "' for template " +
                            template_name,
                        name);
    }
    out += it->second;
    pos = close + 2;
  }
  return out;
}

}  // namespace

PromptLibrary::PromptLibrary() : templates_(detail::builtin_templates()) {}

PromptLibrary PromptLibrary::with_overrides(const std::filesystem::path& dir) {
  PromptLibrary lib;
  if (dir.empty()) return lib;
  if (!std::filesystem::is_directory(dir)) {
    throw ConfigError("template override path is not a directory: " +
                      dir.string());
  }
  for (auto& [name, body] : lib.templates_) {
    std::filesystem::path file = dir / (name + ".txt");
    if (std::filesystem::is_regular_file(file)) {
      std::ifstream in(file, std::ios::binary);
      std::ostringstream ss;
      ss << in.rdbuf();
      body = ss.str();
    }
  }
  return lib;
}

std::string PromptLibrary::template_name(TemplateId id) {
  switch (id) {
    case TemplateId::GenericSummary: return "generic_summary";
    case TemplateId::UserInitial: return "user_initial";
    case TemplateId::UserRevise: return "user_revise";
    case TemplateId::Supervisor: return "supervisor";
    case TemplateId::ProductFilter: return "product_filter";
    case TemplateId::HistoryFilter: return "history_filter";
    case TemplateId::Rewrite: return "rewrite";
    case TemplateId::JudgeAC: return "judge_ac_0_100";
    case TemplateId::JudgeSC: return "judge_sc_0_100";
    case TemplateId::BaselinePerSum: return "baseline_persum";
    case TemplateId::BaselineAnalyze: return "baseline_analyze";
    case TemplateId::BaselineAnaSum: return "baseline_anasum";
    case TemplateId::BaselinePerChan: return "baseline_perchan";
  }
  return "unknown";
}

const std::string& PromptLibrary::body(const std::string& name) const {
  auto it = templates_.find(name);
  if (it == templates_.end()) {
    throw ConfigError("unknown template: " + name);
  }
  return it->second;
}

const std::string& PromptLibrary::body(TemplateId id) const {
  return body(template_name(id));
}

std::set<std::string> PromptLibrary::required_slots(TemplateId id) const {
  const std::string& b = body(id);
  std::set<std::string> slots;
  std::size_t pos = 0;
  while ((pos = b.find(kSlotOpen, pos)) != std::string::npos) {
    std::size_t close = b.find(kSlotClose, pos + 2);
    if (close == std::string::npos) break;
    std::string name = b.substr(pos + 2, close - pos - 2);
    if (name != "examples") slots.insert(name);
    pos = close + 2;
  }
  return slots;
}

std::string PromptLibrary::render(TemplateId id,
                                  const std::map<std::string, std::string>& slots,
                                  std::span<const UserTurn> demos) const {
  std::map<std::string, std::string> full = slots;
  if (id == TemplateId::UserInitial) {
    full["examples"] = format_demos(demos);
  }
  return substitute(body(id), full, template_name(id));
}

std::string PromptLibrary::render_judge(
    JudgeMetric metric, JudgeScale scale,
    const std::map<std::string, std::string>& slots) const {
  std::string name = metric == JudgeMetric::AC ? "judge_ac" : "judge_sc";
  name += scale == JudgeScale::OneToFive ? "_1_5" : "_0_100";
  return substitute(body(name), slots, name);
}

std::string format_demos(std::span<const UserTurn> demos) {
  std::vector<std::string> blocks;
  blocks.reserve(demos.size());
  for (const UserTurn& d : demos) {
    if (!d.parsed) {
      // Unparsed practice output is injected verbatim; it is still the
      // model's own prior attempt and gets used rather than dropped.
      blocks.push_back(d.raw);
      continue;
    }
    blocks.push_back("## Response:\n\n{\n\n\"Analysis\": " + d.analysis +
                     "\n\n\"Suggestions\": " + d.suggestions_text + "\n\n}");
  }
  return text::join(blocks, "\n\n");
}

// ── Parsing ─────────────────────────────────────────────────────

namespace {

/// Strips a leading/trailing markdown code fence if the payload is fenced.
std::string strip_fences(const std::string& raw) {
  std::string_view s = text::trim(raw);
  if (s.substr(0, 3) != "```") return std::string(s);
  std::size_t first_nl = s.find('\n');
  if (first_nl == std::string_view::npos) return std::string(s);
  std::size_t closing = s.rfind("```");
  if (closing <= first_nl) return std::string(s);
  return std::string(text::trim(s.substr(first_nl + 1, closing - first_nl - 1)));
}

/// Reads a JSON-style quoted string starting at s[pos] == '"'.
std::optional<std::string> read_quoted(const std::string& s, std::size_t pos,
                                       std::size_t* end) {
  if (pos >= s.size() || s[pos] != '"') return std::nullopt;
  std::string out;
  for (std::size_t i = pos + 1; i < s.size(); ++i) {
    char c = s[i];
    if (c == '\\' && i + 1 < s.size()) {
      char n = s[i + 1];
      switch (n) {
        case 'n': out += '\n'; break;
        case 't': out += '\t'; break;
        case 'r': out += '\r'; break;
        default: out += n; break;
      }
      ++i;
      continue;
    }
    if (c == '"') {
      *end = i + 1;
      return out;
    }
    out += c;
  }
  return std::nullopt;  // unterminated
}

/// Finds `"key"` or bare `key` followed by an optional colon; returns the
/// position right after the key/colon, or npos.
std::size_t find_value_start(const std::string& s, const std::string& key,
                             std::size_t from = 0) {
  std::size_t pos = s.find('"' + key + '"', from);
  std::size_t skip = key.size() + 2;
  if (pos == std::string::npos) {
    pos = s.find(key, from);
    skip = key.size();
    if (pos == std::string::npos) return std::string::npos;
  }
  std::size_t i = pos + skip;
  while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
  if (i < s.size() && s[i] == ':') ++i;
  while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
  return i;
}

/// Value for `key`: a quoted string, or loose text running until one of
/// the stop markers / a closing brace line / end of input.
std::optional<std::string> extract_field(const std::string& s,
                                         const std::string& key,
                                         const std::vector<std::string>& stops) {
  std::size_t start = find_value_start(s, key);
  if (start == std::string::npos || start >= s.size()) return std::nullopt;

  std::size_t end_unused = 0;
  if (auto quoted = read_quoted(s, start, &end_unused)) return quoted;

  std::size_t end = s.size();
  for (const std::string& stop : stops) {
    std::size_t p = s.find(stop, start);
    if (p != std::string::npos && p < end) end = p;
  }
  std::string value(text::trim(s.substr(start, end - start)));
  while (!value.empty() && (value.back() == '}' || value.back() == ',')) {
    value.pop_back();
    value = std::string(text::trim(value));
  }
  return value.empty() ? std::nullopt : std::optional<std::string>(value);
}

}  // namespace

UserTurn parse_user_turn(const std::string& raw) {
  UserTurn turn;
  turn.raw = raw;

  std::string body = strip_fences(raw);

  // Preferred path: the payload is (or contains) a well-formed JSON object.
  std::size_t open = body.find('{');
  std::size_t close = body.rfind('}');
  if (open != std::string::npos && close != std::string::npos && close > open) {
    auto parsed = nlohmann::json::parse(body.substr(open, close - open + 1),
                                        nullptr, false);
    if (parsed.is_object()) {
      if (parsed.contains("Analysis") && parsed["Analysis"].is_string()) {
        turn.analysis = parsed["Analysis"].get<std::string>();
      }
      if (parsed.contains("Suggestions") && parsed["Suggestions"].is_string()) {
        turn.suggestions_text = parsed["Suggestions"].get<std::string>();
      }
    }
  }

  // Loose path: scan for the two fields directly.
  if (turn.suggestions_text.empty()) {
    if (auto a = extract_field(body, "Analysis",
                               {"\"Suggestions\"", "Suggestions"})) {
      turn.analysis = *a;
    }
    if (auto sug = extract_field(body, "Suggestions", {})) {
      turn.suggestions_text = *sug;
    }
  }

  turn.analysis = std::string(text::trim(turn.analysis));
  turn.suggestions_text = std::string(text::trim(turn.suggestions_text));
  if (turn.suggestions_text.empty()) {
    throw ParseError("no Suggestions value recoverable from user response");
  }
  turn.parsed = true;
  return turn;
}

namespace {

/// Finds a markdown heading for `word` (e.g. "## Suggestions"), case
/// insensitive, optional colon. Returns {heading line start, content start}.
std::optional<std::pair<std::size_t, std::size_t>> find_section(
    const std::string& s, const std::string& word) {
  std::string lower = text::lower_ascii(s);
  std::string needle = text::lower_ascii(word);
  std::size_t pos = 0;
  while ((pos = lower.find('#', pos)) != std::string::npos) {
    if (pos != 0 && lower[pos - 1] != '\n') {
      ++pos;
      continue;
    }
    std::size_t i = pos;
    while (i < lower.size() && lower[i] == '#') ++i;
    while (i < lower.size() && (lower[i] == ' ' || lower[i] == '\t')) ++i;
    if (lower.compare(i, needle.size(), needle) == 0) {
      std::size_t after = i + needle.size();
      while (after < s.size() && (s[after] == ':' || s[after] == ' ')) ++after;
      std::size_t nl = s.find('\n', after);
      if (nl == std::string::npos) nl = s.size();
      return std::make_pair(pos, std::min(nl + 1, s.size()));
    }
    ++pos;
  }
  return std::nullopt;
}

std::size_t next_heading(const std::string& s, std::size_t from) {
  std::size_t pos = from;
  while ((pos = s.find('#', pos)) != std::string::npos) {
    if (pos == 0 || s[pos - 1] == '\n') return pos;
    ++pos;
  }
  return s.size();
}

}  // namespace

SupervisorVerdict parse_supervisor(const std::string& raw) {
  SupervisorVerdict v;
  v.raw = raw;

  std::string body = strip_fences(raw);

  auto suggestions = find_section(body, "Suggestions");
  if (!suggestions) {
    throw ParseError("supervisor response has no Suggestions section");
  }

  if (auto thought = find_section(body, "Thought")) {
    std::size_t end = next_heading(body, thought->second);
    v.thought = std::string(
        text::trim(body.substr(thought->second, end - thought->second)));
  }

  std::size_t content = suggestions->second;
  std::size_t end = next_heading(body, content);
  std::string section(text::trim(body.substr(content, end - content)));

  v.passed = detect_pass(section);
  if (v.passed) return v;

  for (const std::string& line : text::split_lines(section)) {
    std::string_view t = text::trim(line);
    std::size_t i = 0;
    while (i < t.size() && std::isdigit(static_cast<unsigned char>(t[i]))) ++i;
    if (i > 0 && i < t.size() && (t[i] == '.' || t[i] == ')')) {
      std::string_view item = text::trim(t.substr(i + 1));
      if (!item.empty()) v.suggestion_items.emplace_back(item);
    } else if (t.size() > 1 && (t[0] == '-' || t[0] == '*')) {
      std::string_view item = text::trim(t.substr(1));
      if (!item.empty()) v.suggestion_items.emplace_back(item);
    }
  }
  // Prose without enumeration still carries signal; keep it as one item.
  if (v.suggestion_items.empty() && !section.empty()) {
    v.suggestion_items.push_back(section);
  }
  return v;
}

bool detect_pass(const std::string& suggestions_section) {
  return text::normalize_alnum(suggestions_section) == "nosuggestions";
}

std::optional<std::vector<int>> parse_numbers(const std::string& raw) {
  std::string body = strip_fences(raw);
  std::size_t start = find_value_start(body, "Numbers");
  if (start == std::string::npos) return std::nullopt;

  std::size_t i = start;
  bool bracketed = false;
  if (i < body.size() && body[i] == '[') {
    bracketed = true;
    ++i;
  }

  std::vector<int> numbers;
  while (i < body.size()) {
    while (i < body.size() &&
           (std::isspace(static_cast<unsigned char>(body[i])) ||
            body[i] == ',' || body[i] == '"')) {
      ++i;
    }
    if (i >= body.size()) break;
    if (body[i] == ']') break;
    if (!std::isdigit(static_cast<unsigned char>(body[i]))) {
      if (bracketed) return std::nullopt;  // junk inside the list
      break;
    }
    long value = 0;
    while (i < body.size() && std::isdigit(static_cast<unsigned char>(body[i]))) {
      value = value * 10 + (body[i] - '0');
      if (value > 1'000'000) return std::nullopt;
      ++i;
    }
    numbers.push_back(static_cast<int>(value));
    if (!bracketed) break;  // a bare "Numbers: 3" carries one value
  }

  if (numbers.empty()) return std::nullopt;
  return numbers;
}

}  // namespace rehearsal
