#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace rad {

enum class MetaAction : std::uint8_t {
  SpeedUp,
  SpeedUpRapidly,
  SlowDown,
  SlowDownRapidly,
  TurnLeft,
  TurnRight,
  DriveAlongCurve,
  TurnAround,
  ChangeLaneLeft,
  ChangeLaneRight,
  Reverse,
  ShiftSlightlyLeft,
  ShiftSlightlyRight,
  Stop,
  GoStraightConstantly,
  GoStraightSlowly,
};

inline constexpr std::size_t kNumMetaActions = 16;

inline constexpr std::array<MetaAction, kNumMetaActions> kAllMetaActions = {
    MetaAction::SpeedUp,           MetaAction::SpeedUpRapidly,
    MetaAction::SlowDown,          MetaAction::SlowDownRapidly,
    MetaAction::TurnLeft,          MetaAction::TurnRight,
    MetaAction::DriveAlongCurve,   MetaAction::TurnAround,
    MetaAction::ChangeLaneLeft,    MetaAction::ChangeLaneRight,
    MetaAction::Reverse,           MetaAction::ShiftSlightlyLeft,
    MetaAction::ShiftSlightlyRight, MetaAction::Stop,
    MetaAction::GoStraightConstantly, MetaAction::GoStraightSlowly,
};

enum class SemanticGroup : std::uint8_t { Left, Right, Deceleration, Acceleration, Unique };

constexpr std::size_t index_of(MetaAction a) noexcept { return static_cast<std::size_t>(a); }

/// snake_case identifier used in manifests, traces and reports.
std::string_view label_name(MetaAction a) noexcept;
std::optional<MetaAction> action_from_label(std::string_view label) noexcept;
std::string_view group_name(SemanticGroup g) noexcept;

SemanticGroup group_of(MetaAction a) noexcept;

/// 1 for identical actions, 0.5 for distinct members of a shared non-Unique
/// group, 0 otherwise.
double semantic_similarity(MetaAction gt, MetaAction pred) noexcept;

/// Left-family label for its right-family counterpart and vice versa; every
/// other label maps to itself.
MetaAction mirrored(MetaAction a) noexcept;

/// Phrase vocabulary used to read actions out of free-form model text.
/// The first phrase listed for a label is its canonical phrase; later ones
/// are synonyms.
class PhraseTable {
 public:
  /// Built-in table, identical to data/phrases.tsv.
  static const PhraseTable& builtin();
  /// Parses `label<TAB>phrase` lines. Blank lines and lines starting with '#'
  /// are ignored. Every label must receive at least one phrase.
  static PhraseTable parse(std::string_view text);
  static PhraseTable load(const std::filesystem::path& path);

  std::string_view canonical(MetaAction a) const { return canonical_[index_of(a)]; }
  const std::vector<std::pair<std::string, MetaAction>>& phrases() const { return phrases_; }

  /// Longest-phrase match over the normalized text (lowercase, punctuation
  /// stripped, word-boundary aware). Matches nested inside a longer match are
  /// discarded. Throws NoMatch when nothing matches and Ambiguous when the
  /// surviving matches name more than one label.
  MetaAction parse_action(std::string_view text) const;

 private:
  std::array<std::string, kNumMetaActions> canonical_;
  // normalized phrase -> label
  std::vector<std::pair<std::string, MetaAction>> phrases_;
};

/// Lowercases, maps every non-alphanumeric byte to a space and collapses runs.
std::string normalize_phrase(std::string_view text);

inline MetaAction parse_meta_action(std::string_view text) {
  return PhraseTable::builtin().parse_action(text);
}

inline std::string_view canonical_phrase(MetaAction a) {
  return PhraseTable::builtin().canonical(a);
}

}  // namespace rad
