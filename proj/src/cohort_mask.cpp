#include "cohortshap/cohort_mask.hpp"

#include <cassert>

namespace cohortshap {

CohortMask CohortMask::none(std::size_t n) {
  CohortMask m;
  m.size_ = n;
  m.words_.assign((n + 63) / 64, 0);
  return m;
}

CohortMask CohortMask::all(std::size_t n) {
  CohortMask m = none(n);
  for (auto& w : m.words_) w = ~std::uint64_t{0};
  if (n % 64) m.words_.back() = (std::uint64_t{1} << (n % 64)) - 1;
  m.count_ = n;
  return m;
}

void CohortMask::set(std::size_t i) {
  auto& w = words_[i >> 6];
  const std::uint64_t bit = std::uint64_t{1} << (i & 63);
  if (!(w & bit)) {
    w |= bit;
    ++count_;
  }
}

CohortMask CohortMask::refine(const CohortMask& other) const {
  CohortMask out;
  intersect(*this, other, out);
  return out;
}

void CohortMask::refine_in_place(const CohortMask& other) {
  assert(other.size_ == size_);
  std::size_t c = 0;
  for (std::size_t k = 0; k < words_.size(); ++k) {
    words_[k] &= other.words_[k];
    c += static_cast<std::size_t>(std::popcount(words_[k]));
  }
  count_ = c;
}

void CohortMask::intersect(const CohortMask& a, const CohortMask& b,
                           CohortMask& out) {
  assert(a.size_ == b.size_);
  out.size_ = a.size_;
  out.words_.resize(a.words_.size());
  std::size_t c = 0;
  for (std::size_t k = 0; k < a.words_.size(); ++k) {
    out.words_[k] = a.words_[k] & b.words_[k];
    c += static_cast<std::size_t>(std::popcount(out.words_[k]));
  }
  out.count_ = c;
}

bool CohortMask::is_subset_of(const CohortMask& other) const {
  for (std::size_t k = 0; k < words_.size(); ++k) {
    if (words_[k] & ~other.words_[k]) return false;
  }
  return true;
}

std::optional<std::size_t> CohortMask::first() const {
  for (std::size_t k = 0; k < words_.size(); ++k) {
    if (words_[k]) {
      return k * 64 + static_cast<std::size_t>(std::countr_zero(words_[k]));
    }
  }
  return std::nullopt;
}

std::vector<std::size_t> CohortMask::members() const {
  std::vector<std::size_t> out;
  out.reserve(count_);
  for (std::size_t k = 0; k < words_.size(); ++k) {
    for (std::uint64_t w = words_[k]; w; w &= w - 1) {
      out.push_back(k * 64 + static_cast<std::size_t>(std::countr_zero(w)));
    }
  }
  return out;
}

MaskedSummer::MaskedSummer(std::span<const double> y) : y_(y.begin(), y.end()) {
  if (y_.size() < kTableThreshold) return;
  const std::size_t bytes = (y_.size() + 7) / 8;
  table_.assign(bytes * 256, 0.0);
  for (std::size_t b = 0; b < bytes; ++b) {
    double* t = table_.data() + b * 256;
    for (unsigned pattern = 1; pattern < 256; ++pattern) {
      // Extend the pattern without its lowest bit by that bit's subject.
      const unsigned low = static_cast<unsigned>(std::countr_zero(pattern));
      const std::size_t i = b * 8 + low;
      t[pattern] = t[pattern & (pattern - 1)] + (i < y_.size() ? y_[i] : 0.0);
    }
  }
}

double MaskedSummer::sum(const CohortMask& mask) const {
  assert(mask.size() == y_.size());
  double s = 0.0;
  const auto words = mask.words();
  if (table_.empty()) {
    for (std::size_t k = 0; k < words.size(); ++k) {
      for (std::uint64_t w = words[k]; w; w &= w - 1) {
        s += y_[k * 64 + static_cast<std::size_t>(std::countr_zero(w))];
      }
    }
    return s;
  }
  const double* t = table_.data();
  const std::size_t bytes = table_.size() / 256;
  for (std::size_t k = 0; k < words.size(); ++k) {
    std::uint64_t w = words[k];
    if (!w) continue;
    const std::size_t base = k * 8;
    for (std::size_t b = 0; b < 8 && base + b < bytes; ++b, w >>= 8) {
      s += t[(base + b) * 256 + (w & 0xFF)];
    }
  }
  return s;
}

}  // namespace cohortshap
