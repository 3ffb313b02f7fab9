#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "rehearsal/domain.hpp"

namespace rehearsal {

enum class TemplateId {
  GenericSummary,
  UserInitial,
  UserRevise,
  Supervisor,
  ProductFilter,
  HistoryFilter,
  Rewrite,
  JudgeAC,
  JudgeSC,
  BaselinePerSum,
  BaselineAnalyze,
  BaselineAnaSum,
  BaselinePerChan,
};

/// Every prompt the pipeline sends, with named {{slot}} substitution.
/// Templates are compiled in from the templates/ data directory; an
/// override directory may shadow any of them by file name.
class PromptLibrary {
public:
  PromptLibrary();

  /// Loads <name>.txt files from `dir` over the builtin set. Unknown file
  /// names are ignored; missing files keep their builtin body.
  static PromptLibrary with_overrides(const std::filesystem::path& dir);

  /// Substitutes slots into the template. For UserInitial the examples
  /// slot is filled from `demos` (empty list renders it empty). Throws
  /// RenderError naming the first missing slot.
  std::string render(TemplateId id,
                     const std::map<std::string, std::string>& slots,
                     std::span<const UserTurn> demos = {}) const;

  /// Judge prompts exist on both scales; JudgeAC/JudgeSC map to the
  /// 0-100 variants in render().
  std::string render_judge(JudgeMetric metric, JudgeScale scale,
                           const std::map<std::string, std::string>& slots) const;

  const std::string& body(const std::string& name) const;
  const std::string& body(TemplateId id) const;

  /// Slot names the template body references ("examples" excluded; it is
  /// filled from demos).
  std::set<std::string> required_slots(TemplateId id) const;

  static std::string template_name(TemplateId id);

private:
  std::map<std::string, std::string> templates_;
};

/// Serializes demonstrations in the user prompt's Response format.
std::string format_demos(std::span<const UserTurn> demos);

/// Extracts Analysis/Suggestions from a user-agent response, tolerant of
/// surrounding prose, code fences, and the "## Response:" header. Throws
/// ParseError when no usable Suggestions value is recoverable.
UserTurn parse_user_turn(const std::string& raw);

/// Splits a supervisor response into Thought and Suggestions sections.
/// Throws ParseError when the Suggestions section is missing.
SupervisorVerdict parse_supervisor(const std::string& raw);

/// True iff the suggestions section, lowercased and stripped of
/// punctuation and whitespace, equals "nosuggestions".
bool detect_pass(const std::string& suggestions_section);

/// Extracts the integer list from a filter response shaped like
/// {"Numbers": [..]}; tolerant of missing braces and quotes.
std::optional<std::vector<int>> parse_numbers(const std::string& raw);

}  // namespace rehearsal
