#include "rad/taxonomy.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

#include "rad/error.hpp"
#include "rad/util.hpp"
#include "rad_builtin_data.hpp"

namespace rad {

namespace {

constexpr std::array<std::string_view, kNumMetaActions> kLabels = {
    "speed_up",          "speed_up_rapidly",     "slow_down",
    "slow_down_rapidly", "turn_left",            "turn_right",
    "drive_along_curve", "turn_around",          "change_lane_left",
    "change_lane_right", "reverse",              "shift_slightly_left",
    "shift_slightly_right", "stop",              "go_straight_constantly",
    "go_straight_slowly",
};

}  // namespace

std::string_view label_name(MetaAction a) noexcept { return kLabels[index_of(a)]; }

std::optional<MetaAction> action_from_label(std::string_view label) noexcept {
  for (MetaAction a : kAllMetaActions) {
    if (kLabels[index_of(a)] == label) return a;
  }
  return std::nullopt;
}

std::string_view group_name(SemanticGroup g) noexcept {
  switch (g) {
    case SemanticGroup::Left: return "Left";
    case SemanticGroup::Right: return "Right";
    case SemanticGroup::Deceleration: return "Deceleration";
    case SemanticGroup::Acceleration: return "Acceleration";
    case SemanticGroup::Unique: return "Unique";
  }
  return "Unique";
}

SemanticGroup group_of(MetaAction a) noexcept {
  switch (a) {
    case MetaAction::TurnLeft:
    case MetaAction::ChangeLaneLeft:
    case MetaAction::ShiftSlightlyLeft:
      return SemanticGroup::Left;
    case MetaAction::TurnRight:
    case MetaAction::ChangeLaneRight:
    case MetaAction::ShiftSlightlyRight:
      return SemanticGroup::Right;
    case MetaAction::GoStraightSlowly:
    case MetaAction::SlowDown:
    case MetaAction::SlowDownRapidly:
      return SemanticGroup::Deceleration;
    case MetaAction::SpeedUp:
    case MetaAction::SpeedUpRapidly:
      return SemanticGroup::Acceleration;
    case MetaAction::GoStraightConstantly:
    case MetaAction::TurnAround:
    case MetaAction::Reverse:
    case MetaAction::Stop:
    case MetaAction::DriveAlongCurve:
      return SemanticGroup::Unique;
  }
  return SemanticGroup::Unique;
}

double semantic_similarity(MetaAction gt, MetaAction pred) noexcept {
  if (gt == pred) return 1.0;
  const SemanticGroup g = group_of(gt);
  if (g != SemanticGroup::Unique && g == group_of(pred)) return 0.5;
  return 0.0;
}

MetaAction mirrored(MetaAction a) noexcept {
  switch (a) {
    case MetaAction::TurnLeft: return MetaAction::TurnRight;
    case MetaAction::TurnRight: return MetaAction::TurnLeft;
    case MetaAction::ChangeLaneLeft: return MetaAction::ChangeLaneRight;
    case MetaAction::ChangeLaneRight: return MetaAction::ChangeLaneLeft;
    case MetaAction::ShiftSlightlyLeft: return MetaAction::ShiftSlightlyRight;
    case MetaAction::ShiftSlightlyRight: return MetaAction::ShiftSlightlyLeft;
    default: return a;
  }
}

std::string normalize_phrase(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (unsigned char c : text) {
    if (std::isalnum(c)) {
      if (pending_space && !out.empty()) out += ' ';
      pending_space = false;
      out += static_cast<char>(std::tolower(c));
    } else {
      pending_space = true;
    }
  }
  return out;
}

const PhraseTable& PhraseTable::builtin() {
  static const PhraseTable table = parse(builtin_data::kPhrasesTsv);
  return table;
}

PhraseTable PhraseTable::parse(std::string_view text) {
  PhraseTable table;
  std::array<bool, kNumMetaActions> seen{};
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw Error(ErrorCode::ParseError,
                  "phrase table line " + std::to_string(line_no) + ": missing tab");
    }
    const auto action = action_from_label(line.substr(0, tab));
    if (!action) {
      throw Error(ErrorCode::ParseError, "phrase table line " + std::to_string(line_no) +
                                             ": unknown label '" + line.substr(0, tab) + "'");
    }
    std::string phrase = normalize_phrase(line.substr(tab + 1));
    if (phrase.empty()) {
      throw Error(ErrorCode::ParseError,
                  "phrase table line " + std::to_string(line_no) + ": empty phrase");
    }
    if (!seen[index_of(*action)]) {
      seen[index_of(*action)] = true;
      table.canonical_[index_of(*action)] = phrase;
    }
    table.phrases_.emplace_back(std::move(phrase), *action);
  }
  for (MetaAction a : kAllMetaActions) {
    if (!seen[index_of(a)]) {
      throw Error(ErrorCode::ParseError,
                  "phrase table has no phrase for " + std::string(label_name(a)));
    }
  }
  return table;
}

PhraseTable PhraseTable::load(const std::filesystem::path& path) {
  return parse(read_text_file(path));
}

MetaAction PhraseTable::parse_action(std::string_view text) const {
  if (text.empty()) throw Error(ErrorCode::InvalidArgument, "empty model output");

  struct Span {
    std::size_t begin;
    std::size_t end;
    MetaAction action;
  };
  const std::string haystack = " " + normalize_phrase(text) + " ";
  std::vector<Span> spans;
  for (const auto& [phrase, action] : phrases_) {
    const std::string needle = " " + phrase + " ";
    for (auto pos = haystack.find(needle); pos != std::string::npos;
         pos = haystack.find(needle, pos + 1)) {
      spans.push_back({pos + 1, pos + 1 + phrase.size(), action});
    }
  }

  std::vector<MetaAction> labels;
  for (const Span& s : spans) {
    const bool nested = std::any_of(spans.begin(), spans.end(), [&](const Span& o) {
      return o.begin <= s.begin && s.end <= o.end && (o.end - o.begin) > (s.end - s.begin);
    });
    if (!nested && std::find(labels.begin(), labels.end(), s.action) == labels.end()) {
      labels.push_back(s.action);
    }
  }
  if (labels.empty()) {
    throw Error(ErrorCode::NoMatch, "no meta-action phrase in model output");
  }
  if (labels.size() > 1) {
    std::string names;
    for (MetaAction a : labels) {
      if (!names.empty()) names += ", ";
      names += label_name(a);
    }
    throw Error(ErrorCode::Ambiguous, "model output names several meta-actions: " + names);
  }
  return labels.front();
}

}  // namespace rad
