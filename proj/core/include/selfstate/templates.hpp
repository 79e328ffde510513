#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace selfstate {

enum class TemplateId { Baseline, Context, Importance, SpanId, SpanIdBoost };

std::string_view to_string(TemplateId id) noexcept;
std::optional<TemplateId> template_id_from_string(std::string_view name) noexcept;

/// A few-shot example shown inside a prompt.
struct ExampleSlot {
  std::string text;
  std::string label;
  std::string justification;
};

/// Prompt text with `{name}` placeholders. Recognized names are `context`,
/// `sentence`, `chunk` and `examples`; `examples` is filled from
/// `example_slots` (rendered through `example_format`) unless bound explicitly.
struct PromptTemplate {
  TemplateId id = TemplateId::Baseline;
  std::string system_text;
  std::string user_text_pattern;
  std::string example_format = "\"{text}\"\nThis is {label}. {justification}";
  std::vector<ExampleSlot> example_slots;
};

struct RenderedPrompt {
  std::string system;
  std::string user;
};

using Bindings = std::map<std::string, std::string, std::less<>>;

/// Placeholder names in order of appearance (duplicates kept).
std::vector<std::string> placeholders(std::string_view pattern);

/// Single-pass verbatim substitution into both parts. Throws
/// UnknownPlaceholder for names outside the recognized set and
/// MissingPlaceholder when a referenced name has no binding.
RenderedPrompt render_prompt(const PromptTemplate& tmpl, const Bindings& bindings);

/// Reads `<id>.system.txt`, `<id>.user.txt` and the optional
/// `<id>.examples.json` sidecar (`{"format": str, "examples": [{text, label,
/// justification}]}`) from `dir`.
PromptTemplate load_template(const std::filesystem::path& dir, TemplateId id);

/// All five templates, loaded together.
class TemplateSet {
 public:
  static TemplateSet load(const std::filesystem::path& dir);

  const PromptTemplate& get(TemplateId id) const;
  void set(PromptTemplate tmpl);
  const std::filesystem::path& source_dir() const noexcept { return dir_; }

 private:
  std::map<TemplateId, PromptTemplate> templates_;
  std::filesystem::path dir_;
};

/// `SELFSTATE_TEMPLATES` if set, else the installed template directory, else
/// the source tree's `templates/`.
std::filesystem::path default_template_dir();

}  // namespace selfstate
