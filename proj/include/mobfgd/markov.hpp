#ifndef MOBFGD_MARKOV_HPP
#define MOBFGD_MARKOV_HPP

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "mobfgd/cdr_ingest.hpp"
#include "mobfgd/common.hpp"

namespace mobfgd {

/// What predict() does with a context never seen at the model's order.
enum class UnseenContext {
  Backoff,  ///< retry with the shorter suffix, down to order 0
  Miss,     ///< give no prediction
};

/// Successor counts for contexts of one fixed length.
class ContextTable {
 public:
  explicit ContextTable(std::size_t order) : order_(order) {}

  std::size_t order() const noexcept { return order_; }
  void observe(std::span<const Symbol> context, Symbol next);
  /// Most frequent successor; ties go to the smallest symbol.
  std::optional<Symbol> argmax(std::span<const Symbol> context) const;
  std::size_t count(std::span<const Symbol> context, Symbol next) const;
  std::size_t total_observations() const noexcept { return total_; }
  std::size_t context_count() const noexcept { return table_.size(); }

 private:
  struct Successors {
    std::vector<std::pair<Symbol, std::size_t>> counts;
    Symbol best = 0;
    std::size_t best_count = 0;
  };

  static std::string key(std::span<const Symbol> context);

  std::size_t order_;
  std::size_t total_ = 0;
  std::unordered_map<std::string, Successors> table_;
};

/// k-order transition counts plus the lower-order views (k-1, ..., 0) used
/// for backoff, all updated in the same pass.
class TransitionModel {
 public:
  explicit TransitionModel(std::size_t order = 2, UnseenContext policy = UnseenContext::Backoff);

  std::size_t order() const noexcept { return order_; }
  UnseenContext policy() const noexcept { return policy_; }

  /// Records one (context -> next) transition in every view. Throws
  /// DomainError unless context.size() == order().
  void observe(std::span<const Symbol> context, Symbol next);

  /// Feeds a history shorter than the order (sequence start) to the views
  /// of order <= history.size().
  void warm_up(std::span<const Symbol> history, Symbol next);

  /// Argmax successor of the exact context, ties to the smallest symbol.
  /// Under Backoff an unseen context falls back to its suffixes; nullopt
  /// only when nothing usable has been observed.
  std::optional<Symbol> predict(std::span<const Symbol> context) const;

  /// Count of (context -> next) at the full order.
  std::size_t count(std::span<const Symbol> context, Symbol next) const;
  /// Sum of all full-order counts.
  std::size_t total_observations() const noexcept { return views_.back().total_observations(); }
  const ContextTable& view(std::size_t order) const { return views_.at(order); }

 private:
  std::size_t order_;
  UnseenContext policy_;
  std::vector<ContextTable> views_;  // views_[j] has order j
};

struct PredictionResult {
  std::string user_id;
  std::size_t order = 0;
  std::size_t attempts = 0;
  std::size_t hits = 0;
  std::size_t unpredicted = 0;  ///< steps with no prediction (counted as misses unless excluded)
  double accuracy = 0.0;
};

struct EvaluationOptions {
  std::size_t order = 2;
  UnseenContext policy = UnseenContext::Backoff;
  /// When set, train on the first `split` fraction of positions and score
  /// the rest with the frozen model instead of predict-then-observe.
  std::optional<double> split;
  /// Drop no-prediction steps from the denominator.
  bool exclude_unpredicted = false;
};

/// Scores next-place prediction over a symbol sequence. In the default
/// prequential mode every position i >= order is predicted from a model
/// built on positions [0, i) and then observed. Throws DomainError when
/// the sequence is shorter than order + 1.
PredictionResult evaluate_prequential(std::string user_id, std::span<const Symbol> sequence,
                                      const EvaluationOptions& options = {});
PredictionResult evaluate_prequential(const Trajectory& trajectory, const EvaluationOptions& options = {});

}  // namespace mobfgd

#endif  // MOBFGD_MARKOV_HPP
