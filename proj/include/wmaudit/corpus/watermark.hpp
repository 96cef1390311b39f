#pragma once

#include <cctype>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "wmaudit/error.hpp"

namespace wmaudit {

enum class WatermarkMethod { acronym, spatial };

inline std::string_view to_string(WatermarkMethod m) {
  return m == WatermarkMethod::acronym ? "acronym" : "spatial";
}

inline WatermarkMethod parse_method(std::string_view s) {
  if (s == "acronym") return WatermarkMethod::acronym;
  if (s == "spatial") return WatermarkMethod::spatial;
  fail(ErrorKind::invalid_input, "unknown watermark method '" + std::string(s) + "'");
}

namespace detail {

inline bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

inline std::string_view trim_right(std::string_view s) {
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

inline std::string_view trim_left(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  return s;
}

inline bool blank(std::string_view s) { return trim_left(s).empty(); }

}  // namespace detail

/// A probe is the retrieval trigger followed by the emission instruction,
/// joined by exactly one space at the seam.
struct ProbeQuery {
  std::string trigger;
  std::string instruction;
  std::string full_text;

  friend bool operator==(const ProbeQuery&, const ProbeQuery&) = default;
};

inline std::string join_probe(std::string_view trigger, std::string_view instruction) {
  std::string out(detail::trim_right(trigger));
  out.push_back(' ');
  out.append(detail::trim_left(instruction));
  return out;
}

inline ProbeQuery make_probe(std::string trigger, std::string instruction) {
  if (detail::blank(trigger)) fail(ErrorKind::invalid_input, "probe trigger must be non-empty");
  if (detail::blank(instruction)) fail(ErrorKind::invalid_input, "probe instruction must be non-empty");
  std::string full = join_probe(trigger, instruction);
  return ProbeQuery{std::move(trigger), std::move(instruction), std::move(full)};
}

struct WatermarkSpec {
  std::string id;
  WatermarkMethod method = WatermarkMethod::acronym;
  std::string signature;
  std::optional<std::string> acronym;
  std::string asset_ref;
  std::vector<ProbeQuery> probes;

  friend bool operator==(const WatermarkSpec&, const WatermarkSpec&) = default;
};

// Throws a validation error naming the spec and the offending field.
inline void validate(const WatermarkSpec& spec) {
  auto bad = [&](const std::string& field, const std::string& why) {
    fail(ErrorKind::validation, "spec '" + spec.id + "' field '" + field + "': " + why);
  };
  if (spec.id.empty()) fail(ErrorKind::validation, "spec with empty id");
  bool sig_blank = true;
  for (char c : spec.signature) sig_blank = sig_blank && detail::is_space(c);
  if (sig_blank) bad("signature", "blank after normalization");
  if (spec.asset_ref.empty()) bad("asset_ref", "empty");
  if (spec.probes.empty()) bad("probes", "at least one probe is required");
  if (spec.method == WatermarkMethod::acronym) {
    if (!spec.acronym || detail::blank(*spec.acronym)) bad("acronym", "acronym specs must name the acronym");
  }
  for (std::size_t i = 0; i < spec.probes.size(); ++i) {
    const auto& p = spec.probes[i];
    std::string field = "probes[" + std::to_string(i) + "]";
    if (detail::blank(p.trigger) || detail::blank(p.instruction)) bad(field, "empty trigger or instruction");
    if (p.full_text != join_probe(p.trigger, p.instruction)) bad(field, "full_text is not trigger + ' ' + instruction");
    if (spec.method == WatermarkMethod::acronym && p.trigger.find(*spec.acronym) == std::string::npos) {
      bad(field, "trigger does not mention acronym '" + *spec.acronym + "'");
    }
  }
}

inline void validate_corpus(const std::vector<WatermarkSpec>& specs) {
  std::set<std::string> seen;
  for (const auto& s : specs) {
    validate(s);
    if (!seen.insert(s.id).second) fail(ErrorKind::conflict, "duplicate spec id '" + s.id + "'");
  }
}

inline const WatermarkSpec* find_spec(const std::vector<WatermarkSpec>& specs, std::string_view id) {
  for (const auto& s : specs) {
    if (s.id == id) return &s;
  }
  return nullptr;
}

}  // namespace wmaudit
