#include <doctest.h>

#include <random>

#include "mobfgd/markov.hpp"

using namespace mobfgd;

namespace {

constexpr Symbol A = 0, B = 1, C = 2, D = 3, Q = 16, Z = 25;

TransitionModel trained(const std::vector<Symbol>& seq, std::size_t order = 2) {
  TransitionModel model(order);
  for (std::size_t i = 0; i < seq.size(); ++i) {
    const std::span<const Symbol> history(seq.data() + (i >= order ? i - order : 0), std::min(i, order));
    if (i >= order) {
      model.observe(history, seq[i]);
    } else {
      model.warm_up(history, seq[i]);
    }
  }
  return model;
}

std::vector<Symbol> iid(std::size_t n, Symbol alphabet, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<Symbol> pick(0, alphabet - 1);
  std::vector<Symbol> out(n);
  for (auto& s : out) s = pick(rng);
  return out;
}

std::vector<Symbol> periodic(std::size_t n, std::vector<Symbol> cycle) {
  std::vector<Symbol> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = cycle[i % cycle.size()];
  return out;
}

}  // namespace

TEST_SUITE("markov") {
  TEST_CASE("observe counts transitions") {
    TransitionModel model(2);
    const std::vector<Symbol> ab{A, B};
    model.observe(ab, C);
    CHECK(model.count(ab, C) == 1);
    model.observe(ab, C);
    CHECK(model.count(ab, C) == 2);
    CHECK(model.count(ab, D) == 0);
    CHECK(model.total_observations() == 2);
    CHECK_THROWS_AS(model.observe(std::vector<Symbol>{A}, C), DomainError);
  }

  TEST_CASE("counts never decrease") {
    TransitionModel model(2);
    const auto seq = iid(2000, 5, 3);
    std::vector<std::size_t> snapshot;
    for (std::size_t i = 2; i < seq.size(); ++i) {
      const std::span<const Symbol> ctx(seq.data() + i - 2, 2);
      const auto before = model.count(ctx, seq[i]);
      model.observe(ctx, seq[i]);
      CHECK(model.count(ctx, seq[i]) == before + 1);
      if (i % 97 == 0) {
        for (Symbol a = 0; a < 5; ++a) {
          for (Symbol b = 0; b < 5; ++b) snapshot.push_back(model.count(std::vector<Symbol>{a, b}, seq[i]));
        }
      }
    }
    std::size_t k = 0;
    for (std::size_t i = 2; i < seq.size(); ++i) {
      if (i % 97 != 0) continue;
      for (Symbol a = 0; a < 5; ++a) {
        for (Symbol b = 0; b < 5; ++b) CHECK(model.count(std::vector<Symbol>{a, b}, seq[i]) >= snapshot[k++]);
      }
    }
  }

  TEST_CASE("deterministic cycle prediction") {
    const auto model = trained({A, B, C, A, B, C, A, B, C});
    CHECK(model.predict(std::vector<Symbol>{B, C}) == A);
    CHECK(model.predict(std::vector<Symbol>{C, A}) == B);
  }

  TEST_CASE("ties go to the smallest symbol") {
    TransitionModel model(2);
    const std::vector<Symbol> ab{A, B};
    for (Symbol next : {D, C, D, C}) model.observe(ab, next);
    CHECK(model.predict(ab) == C);
    model.observe(ab, D);
    CHECK(model.predict(ab) == D);
  }

  TEST_CASE("backoff on an unseen context") {
    const auto model = trained({A, B, C, A, B, C});
    // (Z,Q) unseen, (Q) unseen, order 0: A, B, C twice each -> A
    CHECK(model.predict(std::vector<Symbol>{Z, Q}) == A);
    // (Z,B) unseen, (B) -> C
    CHECK(model.predict(std::vector<Symbol>{Z, B}) == C);

    TransitionModel miss(2, UnseenContext::Miss);
    const std::vector<Symbol> seq{A, B, C, A, B, C};
    for (std::size_t i = 2; i < seq.size(); ++i) miss.observe(std::span<const Symbol>(seq.data() + i - 2, 2), seq[i]);
    CHECK_FALSE(miss.predict(std::vector<Symbol>{Z, Q}));
    CHECK(miss.predict(std::vector<Symbol>{B, C}) == A);
  }

  TEST_CASE("an empty model has nothing to predict") {
    TransitionModel model(2);
    CHECK_FALSE(model.predict(std::vector<Symbol>{A, B}));
    CHECK_THROWS_AS(model.predict(std::vector<Symbol>{A}), DomainError);
  }

  TEST_CASE("period-2 sequences are learned") {
    const auto result = evaluate_prequential("u", periodic(1000, {A, B}));
    CHECK(result.accuracy >= 0.99);
    CHECK(result.attempts == 998);
  }

  TEST_CASE("i.i.d. uniform sources score about 1/L") {
    for (Symbol L : {4u, 8u}) {
      for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const auto result = evaluate_prequential("u", iid(10000, L, seed * 7 + L));
        CHECK(std::abs(result.accuracy - 1.0 / L) <= 0.02);
      }
    }
  }

  TEST_CASE("shortest scoreable sequence") {
    // [A,B,C]: position 2 is predicted from (A,B); only the order-0 view has
    // data (A and B once each) so the prediction is A, a miss.
    const auto result = evaluate_prequential("u", std::vector<Symbol>{A, B, C});
    CHECK(result.attempts == 1);
    CHECK(result.hits == 0);
    const auto hit = evaluate_prequential("u", std::vector<Symbol>{A, B, A});
    CHECK(hit.attempts == 1);
    CHECK(hit.hits == 1);
    CHECK_THROWS_AS(evaluate_prequential("u", std::vector<Symbol>{A, B}), DomainError);
  }

  TEST_CASE("attempts = n - k and accuracy in [0, 1]") {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 50; ++trial) {
      const std::size_t k = 1 + rng() % 3;
      const std::size_t n = k + 1 + rng() % 500;
      const auto seq = iid(n, 1 + static_cast<Symbol>(rng() % 5), rng());
      const auto r = evaluate_prequential("u", seq, {.order = k});
      CHECK(r.attempts == n - k);
      CHECK(r.accuracy >= 0.0);
      CHECK(r.accuracy <= 1.0);
      CHECK(r.order == k);
    }
  }

  TEST_CASE("evaluation is deterministic") {
    const auto seq = iid(3000, 6, 8);
    const auto a = evaluate_prequential("u", seq);
    const auto b = evaluate_prequential("u", seq);
    CHECK(a.hits == b.hits);
    CHECK(a.accuracy == b.accuracy);
  }

  TEST_CASE("order-preserving relabeling maps predictions through") {
    const auto seq = iid(2000, 5, 21);
    std::vector<Symbol> shifted(seq.size());
    for (std::size_t i = 0; i < seq.size(); ++i) shifted[i] = 3 * seq[i] + 10;
    const auto a = trained(seq), b = trained(shifted);
    for (Symbol x = 0; x < 5; ++x) {
      for (Symbol y = 0; y < 5; ++y) {
        const auto pa = a.predict(std::vector<Symbol>{x, y});
        const auto pb = b.predict(std::vector<Symbol>{3 * x + 10, 3 * y + 10});
        REQUIRE(pa);
        REQUIRE(pb);
        CHECK(*pb == 3 * *pa + 10);
      }
    }
    CHECK(evaluate_prequential("u", seq).hits == evaluate_prequential("u", shifted).hits);
  }

  TEST_CASE("long deterministic cycles converge to accuracy 1") {
    for (std::size_t p : {2u, 3u, 7u, 12u}) {
      std::vector<Symbol> cycle(p);
      for (std::size_t i = 0; i < p; ++i) cycle[i] = static_cast<Symbol>(i);
      const auto r = evaluate_prequential("u", periodic(20000, cycle), {.order = 1});
      CHECK(r.accuracy > 0.995);
    }
  }

  TEST_CASE("split mode trains on a prefix") {
    const auto seq = periodic(1000, {A, B, C});
    const auto r = evaluate_prequential("u", seq, {.split = 0.7});
    CHECK(r.attempts == 300);
    CHECK(r.accuracy == 1.0);
  }

  TEST_CASE("miss policy and excluding unpredicted steps") {
    const auto seq = iid(500, 20, 4);
    const auto counted = evaluate_prequential("u", seq, {.policy = UnseenContext::Miss});
    const auto excluded =
        evaluate_prequential("u", seq, {.policy = UnseenContext::Miss, .exclude_unpredicted = true});
    CHECK(counted.unpredicted > 0);
    CHECK(counted.attempts == 498);
    CHECK(excluded.attempts == 498 - counted.unpredicted);
    CHECK(excluded.hits == counted.hits);
    CHECK(excluded.accuracy >= counted.accuracy);
  }
}
