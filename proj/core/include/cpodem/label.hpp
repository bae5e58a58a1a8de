#pragma once

#include <optional>
#include <string_view>

namespace cpodem {

enum class FlowLabel { Jet, Swirl };

/// Spreading angles strictly above this are swirling; at or below, jet-like.
inline constexpr double kDichotomyAngleDeg = 30.0;

inline FlowLabel label_for_angle(double alpha_deg) noexcept {
  return alpha_deg > kDichotomyAngleDeg ? FlowLabel::Swirl : FlowLabel::Jet;
}

inline std::string_view to_string(FlowLabel l) noexcept { return l == FlowLabel::Swirl ? "swirl" : "jet"; }

inline std::optional<FlowLabel> parse_label(std::string_view s) noexcept {
  if (s == "jet") return FlowLabel::Jet;
  if (s == "swirl") return FlowLabel::Swirl;
  return std::nullopt;
}

}  // namespace cpodem
