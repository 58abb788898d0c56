#pragma once

#include <bit>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace cohortshap {

// Set of subjects as a packed bitmask over 1:n with a cached cardinality.
// Bits past n in the last word are always zero.
class CohortMask {
 public:
  CohortMask() = default;

  static CohortMask none(std::size_t n);
  static CohortMask all(std::size_t n);

  std::size_t size() const { return size_; }
  std::size_t count() const { return count_; }
  bool empty() const { return count_ == 0; }
  std::span<const std::uint64_t> words() const { return words_; }

  bool contains(std::size_t i) const {
    return (words_[i >> 6] >> (i & 63)) & 1U;
  }
  void set(std::size_t i);

  // Intersection; `other` must cover the same n.
  CohortMask refine(const CohortMask& other) const;
  void refine_in_place(const CohortMask& other);
  // refine_in_place into `out` without allocating when sizes match.
  static void intersect(const CohortMask& a, const CohortMask& b,
                        CohortMask& out);

  bool is_subset_of(const CohortMask& other) const;
  std::optional<std::size_t> first() const;
  std::vector<std::size_t> members() const;

  friend bool operator==(const CohortMask& a, const CohortMask& b) {
    return a.size_ == b.size_ && a.words_ == b.words_;
  }

 private:
  std::size_t size_ = 0;
  std::size_t count_ = 0;
  std::vector<std::uint64_t> words_;
};

// Sums of y over masked subsets. For larger n it precomputes, for every
// byte of the mask, the 256 possible partial sums of its 8 subjects, so a
// masked sum costs n/8 table reads regardless of cohort size.
class MaskedSummer {
 public:
  static constexpr std::size_t kTableThreshold = 256;

  explicit MaskedSummer(std::span<const double> y);

  std::size_t size() const { return y_.size(); }
  std::span<const double> values() const { return y_; }
  double sum(const CohortMask& mask) const;
  double mean(const CohortMask& mask) const {
    return sum(mask) / static_cast<double>(mask.count());
  }
  bool uses_table() const { return !table_.empty(); }

 private:
  std::vector<double> y_;
  std::vector<double> table_;  // (n/8 rounded up) x 256
};

}  // namespace cohortshap
