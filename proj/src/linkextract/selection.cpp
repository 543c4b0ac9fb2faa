#include <algorithm>

#include "dsd/linkextract/linkextract.hpp"

namespace dsd::linkextract {

namespace {

SelectionResult accept(const ScoredCandidate& c, SelectionReason reason, std::size_t considered) {
  SelectionResult r;
  r.primary_url = c.candidate.url;
  r.primary_score = c.score;
  r.reason = reason;
  r.considered = considered;
  return r;
}

SelectionResult reject(SelectionReason reason, std::size_t considered) {
  SelectionResult r;
  r.reason = reason;
  r.considered = considered;
  return r;
}

// `ranked` must already be in rank order.
SelectionResult rule_only(const std::vector<ScoredCandidate>& ranked, const SelectionThresholds& t) {
  const std::size_t n = ranked.size();
  if (n == 0) return reject(SelectionReason::no_candidates, 0);
  if (n == 1) return accept(ranked[0], SelectionReason::single_candidate, 1);

  const int s1 = ranked[0].score;
  const int s2 = ranked[1].score;
  if (s1 >= t.tau_high) return accept(ranked[0], SelectionReason::high_confidence, n);
  if (s1 >= t.tau_mid && s1 - s2 >= t.delta) return accept(ranked[0], SelectionReason::margin, n);

  const std::size_t k = std::min(n, static_cast<std::size_t>(t.top_k));
  const ScoredCandidate* landing = nullptr;
  const ScoredCandidate* file_link = nullptr;
  for (std::size_t i = 0; i < k; ++i) {
    const std::string& url = ranked[i].candidate.url;
    if (!is_dataset_first_host(url)) continue;
    if (is_direct_file_link(url)) {
      if (!file_link) file_link = &ranked[i];
    } else if (!landing) {
      landing = &ranked[i];
    }
  }
  const ScoredCandidate* preferred = landing ? landing : file_link;
  const ScoredCandidate& chosen = preferred ? *preferred : ranked[0];
  if (chosen.score < t.tau_min) return reject(SelectionReason::rejected_below_min, n);
  return accept(chosen, preferred ? SelectionReason::preferred_host : SelectionReason::general_tiebreak, n);
}

SelectionResult with_verifier(const std::vector<ScoredCandidate>& ranked, const SelectionThresholds& t,
                              LinkVerifier* verifier) {
  if (ranked.empty()) return reject(SelectionReason::no_candidates, 0);
  if (verifier) {
    const std::optional<std::string> choice = verifier->choose(ranked);
    if (choice) {
      auto it = std::find_if(ranked.begin(), ranked.end(),
                             [&](const ScoredCandidate& c) { return c.candidate.url == *choice; });
      if (it != ranked.end()) return accept(*it, SelectionReason::llm_choice, ranked.size());
    }
  }
  SelectionResult fallback = rule_only(ranked, t);
  if (fallback.primary_url) fallback.reason = SelectionReason::llm_fallback;
  return fallback;
}

}  // namespace

void SelectionThresholds::validate() const {
  if (!(tau_high > tau_mid && tau_mid > tau_min && tau_min > 0)) {
    throw InvalidArgument("selection thresholds must satisfy tau_high > tau_mid > tau_min > 0");
  }
  if (delta <= 0) throw InvalidArgument("selection delta must be positive");
  if (top_k < 1) throw InvalidArgument("selection top_k must be at least 1");
}

std::string_view to_string(SelectionMode mode) {
  switch (mode) {
    case SelectionMode::rule_only:
      return "rule_only";
    case SelectionMode::llm_only:
      return "llm_only";
    case SelectionMode::hybrid:
      return "hybrid";
  }
  return "?";
}

SelectionMode selection_mode_from_string(std::string_view s) {
  for (auto m : {SelectionMode::rule_only, SelectionMode::llm_only, SelectionMode::hybrid}) {
    if (to_string(m) == s) return m;
  }
  throw InvalidArgument("unknown selection mode '" + std::string(s) + "'");
}

namespace {
constexpr SelectionReason kReasons[] = {
    SelectionReason::single_candidate, SelectionReason::high_confidence,    SelectionReason::margin,
    SelectionReason::preferred_host,   SelectionReason::general_tiebreak,   SelectionReason::llm_choice,
    SelectionReason::llm_fallback,     SelectionReason::rejected_below_min, SelectionReason::no_candidates,
};
}  // namespace

std::string_view to_string(SelectionReason reason) {
  switch (reason) {
    case SelectionReason::single_candidate:
      return "single_candidate";
    case SelectionReason::high_confidence:
      return "high_confidence";
    case SelectionReason::margin:
      return "margin";
    case SelectionReason::preferred_host:
      return "preferred_host";
    case SelectionReason::general_tiebreak:
      return "general_tiebreak";
    case SelectionReason::llm_choice:
      return "llm_choice";
    case SelectionReason::llm_fallback:
      return "llm_fallback";
    case SelectionReason::rejected_below_min:
      return "rejected_below_min";
    case SelectionReason::no_candidates:
      return "no_candidates";
  }
  return "?";
}

SelectionReason selection_reason_from_string(std::string_view s) {
  for (SelectionReason r : kReasons) {
    if (to_string(r) == s) return r;
  }
  throw InvalidArgument("unknown selection reason '" + std::string(s) + "'");
}

bool ranks_before(const ScoredCandidate& a, const ScoredCandidate& b) {
  if (a.score != b.score) return a.score > b.score;
  const std::string& ua = a.candidate.url;
  const std::string& ub = b.candidate.url;
  if (ua.size() != ub.size()) return ua.size() < ub.size();
  return ua < ub;
}

void rank_candidates(std::vector<ScoredCandidate>& scored) {
  std::stable_sort(scored.begin(), scored.end(), ranks_before);
}

SelectionResult select_primary(std::vector<ScoredCandidate> scored, const SelectionThresholds& thresholds,
                               SelectionMode mode, LinkVerifier* verifier) {
  thresholds.validate();
  rank_candidates(scored);
  SelectionResult result;
  switch (mode) {
    case SelectionMode::rule_only:
      result = rule_only(scored, thresholds);
      break;
    case SelectionMode::llm_only:
      result = with_verifier(scored, thresholds, verifier);
      break;
    case SelectionMode::hybrid:
      std::erase_if(scored, [](const ScoredCandidate& c) { return c.score <= 0; });
      result = with_verifier(scored, thresholds, verifier);
      break;
  }
  result.mode = mode;
  return result;
}

}  // namespace dsd::linkextract
