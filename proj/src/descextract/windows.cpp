#include <algorithm>
#include <json.hpp>

#include "dsd/descextract/descextract.hpp"

namespace dsd::descextract {

WindowSample build_window(std::span<const Sentence> sentences, std::size_t target_index, std::size_t token_budget,
                          std::size_t seed_radius) {
  const std::size_t n = sentences.size();
  if (target_index >= n) throw InvalidArgument("window target index out of range");

  WindowSample w;
  w.target_index = target_index;
  const std::size_t target_tokens = sentences[target_index].token_count;
  if (target_tokens > token_budget) {
    w.left = w.right = target_index;
    w.token_total = target_tokens;
    w.over_budget = true;
    return w;
  }

  w.left = target_index >= seed_radius ? target_index - seed_radius : 0;
  w.right = std::min(n - 1, target_index + seed_radius);
  for (std::size_t i = w.left; i <= w.right; ++i) w.token_total += sentences[i].token_count;

  if (w.token_total > token_budget) {
    while (w.token_total > token_budget) {
      const std::size_t left_dist = target_index - w.left;
      const std::size_t right_dist = w.right - target_index;
      if (right_dist >= left_dist) {
        w.token_total -= sentences[w.right--].token_count;
      } else {
        w.token_total -= sentences[w.left++].token_count;
      }
    }
    return w;
  }

  bool left_turn = true;
  while (true) {
    const bool can_left = w.left > 0;
    const bool can_right = w.right + 1 < n;
    if (!can_left && !can_right) break;
    const bool take_left = can_left && (left_turn || !can_right);
    const std::size_t next = take_left ? w.left - 1 : w.right + 1;
    const std::size_t tokens = sentences[next].token_count;
    if (w.token_total + tokens > token_budget) break;
    w.token_total += tokens;
    if (take_left) {
      --w.left;
    } else {
      ++w.right;
    }
    left_turn = !take_left;
  }
  return w;
}

std::vector<WindowSample> generate_training_windows(std::span<const Sentence> sentences, std::span<const bool> labels,
                                                    std::size_t token_budget, std::size_t seed_radius) {
  if (labels.size() != sentences.size()) throw InvalidArgument("labels and sentences differ in length");
  std::vector<WindowSample> windows;
  const std::size_t n = sentences.size();

  auto any_positive = [&](const WindowSample& w) {
    for (std::size_t i = w.left; i <= w.right; ++i) {
      if (labels[i]) return true;
    }
    return false;
  };

  std::size_t target = 0;
  while (target < n) {
    WindowSample w = build_window(sentences, target, token_budget, seed_radius);
    w.label = labels[target];
    const std::size_t stride = any_positive(w) ? std::max<std::size_t>(1, w.size() / 3)
                                               : std::max<std::size_t>(1, w.size() / 2);
    windows.push_back(w);
    target += stride;
  }

  for (std::size_t i = 0; i < n; ++i) {
    if (!labels[i]) continue;
    const bool covered = std::any_of(windows.begin(), windows.end(),
                                     [i](const WindowSample& w) { return w.contains(i); });
    if (covered) continue;
    WindowSample w = build_window(sentences, i, token_budget, seed_radius);
    w.label = true;
    windows.push_back(w);
  }
  return windows;
}

void write_windows_jsonl(std::ostream& out, std::string_view paper_id, std::span<const WindowSample> windows) {
  for (const WindowSample& w : windows) {
    nlohmann::ordered_json j;
    j["paper_id"] = paper_id;
    j["target_index"] = w.target_index;
    j["left"] = w.left;
    j["right"] = w.right;
    if (w.label) {
      j["label"] = *w.label;
    } else {
      j["label"] = nullptr;
    }
    out << j.dump() << '\n';
  }
}

}  // namespace dsd::descextract
