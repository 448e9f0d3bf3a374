#include "mobfgd/markov.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace mobfgd {

std::string ContextTable::key(std::span<const Symbol> context) {
  std::string k(context.size() * sizeof(Symbol), '\0');
  if (!context.empty()) std::memcpy(k.data(), context.data(), k.size());
  return k;
}

void ContextTable::observe(std::span<const Symbol> context, Symbol next) {
  if (context.size() != order_) {
    throw DomainError("context length " + std::to_string(context.size()) + " does not match order " +
                      std::to_string(order_));
  }
  auto& succ = table_[key(context)];
  std::size_t updated = 0;
  bool found = false;
  for (auto& [sym, n] : succ.counts) {
    if (sym == next) {
      updated = ++n;
      found = true;
      break;
    }
  }
  if (!found) {
    succ.counts.emplace_back(next, 1);
    updated = 1;
  }
  // Counts only grow, so the cached argmax stays exact.
  if (updated > succ.best_count || (updated == succ.best_count && next < succ.best)) {
    succ.best = next;
    succ.best_count = updated;
  }
  ++total_;
}

std::optional<Symbol> ContextTable::argmax(std::span<const Symbol> context) const {
  if (context.size() != order_) return std::nullopt;
  const auto it = table_.find(key(context));
  if (it == table_.end()) return std::nullopt;
  return it->second.best;
}

std::size_t ContextTable::count(std::span<const Symbol> context, Symbol next) const {
  if (context.size() != order_) return 0;
  const auto it = table_.find(key(context));
  if (it == table_.end()) return 0;
  for (const auto& [sym, n] : it->second.counts) {
    if (sym == next) return n;
  }
  return 0;
}

TransitionModel::TransitionModel(std::size_t order, UnseenContext policy) : order_(order), policy_(policy) {
  views_.reserve(order + 1);
  for (std::size_t j = 0; j <= order; ++j) views_.emplace_back(j);
}

void TransitionModel::observe(std::span<const Symbol> context, Symbol next) {
  if (context.size() != order_) {
    throw DomainError("context length " + std::to_string(context.size()) + " does not match order " +
                      std::to_string(order_));
  }
  for (std::size_t j = 0; j <= order_; ++j) views_[j].observe(context.last(j), next);
}

void TransitionModel::warm_up(std::span<const Symbol> history, Symbol next) {
  const std::size_t top = std::min(history.size(), order_);
  for (std::size_t j = 0; j <= top; ++j) views_[j].observe(history.last(j), next);
}

std::optional<Symbol> TransitionModel::predict(std::span<const Symbol> context) const {
  if (context.size() != order_) {
    throw DomainError("context length " + std::to_string(context.size()) + " does not match order " +
                      std::to_string(order_));
  }
  if (policy_ == UnseenContext::Miss) return views_[order_].argmax(context);
  for (std::size_t j = order_ + 1; j-- > 0;) {
    if (auto p = views_[j].argmax(context.last(j))) return p;
  }
  return std::nullopt;
}

std::size_t TransitionModel::count(std::span<const Symbol> context, Symbol next) const {
  return views_[order_].count(context, next);
}

PredictionResult evaluate_prequential(std::string user_id, std::span<const Symbol> sequence,
                                      const EvaluationOptions& options) {
  const std::size_t n = sequence.size();
  const std::size_t k = options.order;
  if (n < k + 1) {
    throw DomainError("user '" + user_id + "': prediction at order " + std::to_string(k) + " needs at least " +
                      std::to_string(k + 1) + " events, got " + std::to_string(n));
  }
  PredictionResult result;
  result.user_id = std::move(user_id);
  result.order = k;

  TransitionModel model(k, options.policy);
  const auto feed = [&](std::size_t pos) {
    if (pos >= k) {
      model.observe(sequence.subspan(pos - k, k), sequence[pos]);
    } else {
      model.warm_up(sequence.first(pos), sequence[pos]);
    }
  };
  const auto score = [&](std::size_t pos) {
    const auto guess = model.predict(sequence.subspan(pos - k, k));
    if (!guess) {
      ++result.unpredicted;
      if (!options.exclude_unpredicted) ++result.attempts;
      return;
    }
    ++result.attempts;
    if (*guess == sequence[pos]) ++result.hits;
  };

  if (options.split) {
    const double fraction = *options.split;
    if (!(fraction > 0.0 && fraction < 1.0)) throw DomainError("split fraction must lie in (0, 1)");
    const auto cut = std::max(k, static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n))));
    if (cut >= n) throw DomainError("split leaves no positions to score for user '" + result.user_id + "'");
    for (std::size_t pos = 0; pos < cut; ++pos) feed(pos);
    for (std::size_t pos = cut; pos < n; ++pos) score(pos);
  } else {
    for (std::size_t pos = 0; pos < n; ++pos) {
      if (pos >= k) score(pos);
      feed(pos);
    }
  }
  result.accuracy = result.attempts > 0 ? static_cast<double>(result.hits) / static_cast<double>(result.attempts)
                                        : 0.0;
  return result;
}

PredictionResult evaluate_prequential(const Trajectory& trajectory, const EvaluationOptions& options) {
  return evaluate_prequential(trajectory.user_id(), encode_locations(trajectory).symbols, options);
}

}  // namespace mobfgd
