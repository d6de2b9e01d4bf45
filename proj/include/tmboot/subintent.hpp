#pragma once

#include <string>
#include <string_view>

namespace tmboot {

/// A fine-grained reason for class membership, written
/// `label_due_to: explanation` (or compactly `label_due_to_slug`).
struct SubIntent {
  std::string name;          // as written, e.g. "politics_due_to: election results"
  std::string parent_label;  // "politics"
  std::string slug;          // "politics_due_to_election_results", stable across files

  friend bool operator==(const SubIntent&, const SubIntent&) = default;
};

/// Lowercase; runs of non-alphanumeric ASCII become a single underscore.
std::string slugify(std::string_view text);

/// Build a SubIntent from either accepted form. Throws std::invalid_argument
/// when `name` has no `_due_to` marker or an empty label / explanation.
SubIntent make_sub_intent(std::string_view name);

}  // namespace tmboot
