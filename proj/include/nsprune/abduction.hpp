#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "nsprune/core.hpp"
#include "nsprune/errors.hpp"

namespace nsprune {

// ---------------------------------------------------------------------------
// Label encodings per theory
// ---------------------------------------------------------------------------
// sum/max: 10 classes, class id == digit value.
// hwf:     12 classes; ids 0..8 are the digits 1..9, ids 9,10,11 are +,-,*.
//          Even positions (0-based) hold digits, odd positions operators.

constexpr int kDigitClassCount = 10;
constexpr int kHwfClassCount = 12;
constexpr int kHwfPlus = 9;
constexpr int kHwfMinus = 10;
constexpr int kHwfTimes = 11;

inline bool hwf_is_digit_class(int cls) { return cls >= 0 && cls <= 8; }
inline int hwf_digit_value(int cls) { return cls + 1; }
inline char hwf_operator_symbol(int cls) {
  switch (cls) {
    case kHwfPlus: return '+';
    case kHwfMinus: return '-';
    case kHwfTimes: return '*';
  }
  throw InvariantError("class id " + std::to_string(cls) + " is not an operator");
}

inline LabelSpace label_space_for(Theory theory) {
  if (theory == Theory::Hwf) {
    LabelSpace ls;
    ls.class_count = kHwfClassCount;
    ls.class_names = {"1", "2", "3", "4", "5", "6", "7", "8", "9", "+", "-", "*"};
    return ls;
  }
  LabelSpace ls;
  ls.class_count = kDigitClassCount;
  return ls;
}

// Per-position allowed class ids (encodes hwf's known digit/operator slots).
struct PositionMask {
  std::vector<std::set<int>> allowed;

  bool admits(const PreImage& p) const {
    if (p.size() != allowed.size()) return false;
    for (std::size_t i = 0; i < p.size(); ++i)
      if (!allowed[i].count(p[i])) return false;
    return true;
  }
};

inline PositionMask position_mask(const Constraint& c) {
  PositionMask mask;
  mask.allowed.resize(c.arity);
  if (c.theory == Theory::Hwf) {
    std::set<int> digits, ops;
    for (int i = 0; i <= 8; ++i) digits.insert(i);
    ops = {kHwfPlus, kHwfMinus, kHwfTimes};
    for (int p = 0; p < c.arity; ++p) mask.allowed[p] = (p % 2 == 0) ? digits : ops;
  } else {
    std::set<int> digits;
    for (int i = 0; i < kDigitClassCount; ++i) digits.insert(i);
    for (int p = 0; p < c.arity; ++p) mask.allowed[p] = digits;
  }
  return mask;
}

// Evaluates an hwf class-id sequence with * binding tighter than +/- and
// left association, in exact integer arithmetic.
inline long long hwf_evaluate(const PreImage& seq) {
  if (seq.empty() || seq.size() % 2 == 0)
    throw InvariantError("hwf sequence must have odd length");
  if (!hwf_is_digit_class(seq[0])) throw InvariantError("hwf sequence must start with a digit");
  long long total = 0;
  long long term = hwf_digit_value(seq[0]);
  for (std::size_t i = 1; i + 1 < seq.size(); i += 2) {
    char op = hwf_operator_symbol(seq[i]);
    if (!hwf_is_digit_class(seq[i + 1]))
      throw InvariantError("hwf operator must be followed by a digit");
    long long v = hwf_digit_value(seq[i + 1]);
    if (op == '*') {
      term *= v;
    } else {
      total += term;
      term = (op == '+') ? v : -v;
    }
  }
  return total + term;
}

// Re-evaluates a label tuple against a constraint (soundness checks, oracles).
inline bool satisfies(const Constraint& c, const PreImage& p) {
  if (static_cast<int>(p.size()) != c.arity) return false;
  if (!position_mask(c).admits(p)) return false;
  switch (c.theory) {
    case Theory::Sum: {
      long long sum = 0;
      for (int v : p) sum += v;
      return sum == c.target;
    }
    case Theory::Max:
      return *std::max_element(p.begin(), p.end()) == c.target;
    case Theory::Hwf:
      return hwf_evaluate(p) == c.target;
  }
  return false;
}

// ---------------------------------------------------------------------------
// Theory enumerators
// ---------------------------------------------------------------------------

struct AbductionOutcome {
  PreImageSet preimages;  // lexicographically sorted by construction
  std::optional<std::string> warning;
};

// All tuples in {0..9}^arity summing to target. Enumeration prunes with
// remaining-sum bounds; generation order is lexicographic.
inline AbductionOutcome abduce_sum(int arity, long long target) {
  if (arity < 1) throw ValidationError("abduce_sum: arity must be >= 1");
  AbductionOutcome out;
  if (target < 0 || target > 9LL * arity) {
    out.warning = "sum target " + std::to_string(target) + " outside [0, " +
                  std::to_string(9 * arity) + "]";
    return out;
  }
  PreImage tuple(arity);
  auto rec = [&](auto&& self, int pos, long long remaining) -> void {
    if (pos == arity) {
      out.preimages.push_back(tuple);
      return;
    }
    const long long slack = 9LL * (arity - 1 - pos);
    const int lo = static_cast<int>(std::max<long long>(0, remaining - slack));
    const int hi = static_cast<int>(std::min<long long>(9, remaining));
    for (int d = lo; d <= hi; ++d) {
      tuple[pos] = d;
      self(self, pos + 1, remaining - d);
    }
  };
  rec(rec, 0, target);
  return out;
}

// All tuples in {0..9}^arity whose maximum equals target.
inline AbductionOutcome abduce_max(int arity, long long target) {
  if (arity < 1) throw ValidationError("abduce_max: arity must be >= 1");
  AbductionOutcome out;
  if (target < 0 || target > 9) {
    out.warning = "max target " + std::to_string(target) + " outside [0, 9]";
    return out;
  }
  PreImage tuple(arity);
  auto rec = [&](auto&& self, int pos, bool hit) -> void {
    if (pos == arity) {
      out.preimages.push_back(tuple);
      return;
    }
    for (int d = 0; d <= static_cast<int>(target); ++d) {
      if (pos == arity - 1 && !hit && d != target) continue;
      tuple[pos] = d;
      self(self, pos + 1, hit || d == target);
    }
  };
  rec(rec, 0, false);
  return out;
}

// All alternating digit/operator sequences of the given odd length whose
// evaluation equals target.
inline AbductionOutcome abduce_hwf(int arity, long long target) {
  if (arity < 1) throw ValidationError("abduce_hwf: arity must be >= 1");
  if (arity % 2 == 0) throw ValidationError("abduce_hwf: arity must be odd");
  AbductionOutcome out;
  PreImage tuple(arity);
  auto rec = [&](auto&& self, int pos) -> void {
    if (pos == arity) {
      if (hwf_evaluate(tuple) == target) out.preimages.push_back(tuple);
      return;
    }
    if (pos % 2 == 0) {
      for (int cls = 0; cls <= 8; ++cls) {
        tuple[pos] = cls;
        self(self, pos + 1);
      }
    } else {
      for (int cls = kHwfPlus; cls <= kHwfTimes; ++cls) {
        tuple[pos] = cls;
        self(self, pos + 1);
      }
    }
  };
  rec(rec, 0);
  if (out.preimages.empty())
    out.warning = "no expression of length " + std::to_string(arity) + " evaluates to " +
                  std::to_string(target);
  return out;
}

// ---------------------------------------------------------------------------
// Sample / dataset dispatch
// ---------------------------------------------------------------------------

struct AbduceSampleResult {
  NesySample sample;
  bool rejected = false;  // constraint admits no pre-image
  std::optional<std::string> warning;
};

namespace detail {

inline void check_label_space(const NesySample& s, const LabelSpace& space) {
  const int expected =
      s.constraint.theory == Theory::Hwf ? kHwfClassCount : kDigitClassCount;
  if (space.class_count != expected)
    fail_sample(s.id, std::string("theory '") + theory_name(s.constraint.theory) +
                          "' needs a " + std::to_string(expected) + "-class label space");
}

}  // namespace detail

// Fills a sample's pre-images from its constraint. An infeasible constraint
// flags the sample rejected; a gold label absent from the enumeration is a
// hard error (the data contradicts its own construction).
inline AbduceSampleResult abduce(const NesySample& sample, const LabelSpace& space,
                                 std::optional<std::size_t> max_preimages = std::nullopt) {
  detail::check_label_space(sample, space);
  AbductionOutcome outcome;
  switch (sample.constraint.theory) {
    case Theory::Sum:
      outcome = abduce_sum(sample.constraint.arity, sample.constraint.target);
      break;
    case Theory::Max:
      outcome = abduce_max(sample.constraint.arity, sample.constraint.target);
      break;
    case Theory::Hwf:
      outcome = abduce_hwf(sample.constraint.arity, sample.constraint.target);
      break;
  }
  if (max_preimages && outcome.preimages.size() > *max_preimages)
    detail::fail_sample(sample.id,
                        std::to_string(outcome.preimages.size()) +
                            " pre-images exceed the cap of " + std::to_string(*max_preimages));

  AbduceSampleResult res;
  res.sample = sample;
  res.sample.preimages = std::move(outcome.preimages);
  if (sample.gold && !contains_preimage(res.sample.preimages, *sample.gold))
    detail::fail_sample(sample.id, "gold pre-image missing after abduction");
  if (res.sample.preimages.empty()) {
    res.rejected = true;
    res.warning = "sample '" + sample.id + "' rejected: " +
                  outcome.warning.value_or("constraint admits no pre-image");
  }
  return res;
}

struct AbduceDatasetResult {
  Dataset dataset;                     // rejected samples removed
  std::vector<std::string> warnings;   // one entry per rejected sample
};

inline AbduceDatasetResult abduce_dataset(const Dataset& input,
                                          std::optional<std::size_t> max_preimages = std::nullopt) {
  validate_dataset(input);
  AbduceDatasetResult res;
  res.dataset.label_space = input.label_space;
  for (const auto& s : input.samples) {
    AbduceSampleResult one = abduce(s, input.label_space, max_preimages);
    if (one.rejected) {
      res.warnings.push_back(*one.warning);
      continue;
    }
    res.dataset.samples.push_back(std::move(one.sample));
  }
  if (res.dataset.samples.empty())
    throw ValidationError("abduction rejected every sample");
  validate_dataset(res.dataset);
  return res;
}

}  // namespace nsprune
