#include "tmboot/subintent.hpp"

#include <cctype>
#include <stdexcept>

namespace tmboot {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  return s.substr(first, s.find_last_not_of(" \t\r\n") - first + 1);
}

constexpr std::string_view kMarker = "_due_to";

}  // namespace

std::string slugify(std::string_view text) {
  std::string out;
  bool pending_sep = false;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isalnum(c) || c >= 0x80) {
      if (pending_sep && !out.empty()) out.push_back('_');
      pending_sep = false;
      out.push_back(static_cast<char>(std::tolower(c)));
    } else {
      pending_sep = true;
    }
  }
  return out;
}

SubIntent make_sub_intent(std::string_view name) {
  const std::string_view trimmed = trim(name);
  // The written form wins over the compact one, so "a_due_to_b_due_to: c"
  // splits at the colon marker.
  auto pos = trimmed.find(std::string(kMarker) + ":");
  if (pos == std::string_view::npos) pos = trimmed.find(kMarker);
  if (pos == std::string_view::npos) {
    throw std::invalid_argument("sub-intent '" + std::string(trimmed) + "' lacks '_due_to'");
  }
  const std::string_view label = trim(trimmed.substr(0, pos));
  std::string_view rest = trimmed.substr(pos + kMarker.size());
  std::string_view explanation;
  if (!rest.empty() && rest.front() == ':') {
    explanation = trim(rest.substr(1));
  } else if (!rest.empty() && rest.front() == '_') {
    explanation = trim(rest.substr(1));
  } else {
    throw std::invalid_argument("sub-intent '" + std::string(trimmed) +
                                "' needs ':' or '_' after '_due_to'");
  }
  if (label.empty()) throw std::invalid_argument("sub-intent '" + std::string(trimmed) + "' has no label");
  if (slugify(explanation).empty()) {
    throw std::invalid_argument("sub-intent '" + std::string(trimmed) + "' has no explanation");
  }
  SubIntent si;
  si.name = std::string(trimmed);
  si.parent_label = std::string(label);
  si.slug = slugify(label) + "_due_to_" + slugify(explanation);
  return si;
}

}  // namespace tmboot
