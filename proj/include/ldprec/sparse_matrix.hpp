#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "ldprec/rating_domain.hpp"

namespace ldprec {

struct Rating {
  std::uint32_t user;
  std::uint32_t item;
  double value;

  bool operator==(const Rating&) const = default;
};

// Item-major view over the entries of a SparseRatingMatrix.
struct ColumnIndex {
  std::vector<std::size_t> offsets;  // items + 1
  std::vector<std::size_t> entry;    // entry positions grouped by item

  std::span<const std::size_t> column(std::size_t item) const {
    return {entry.data() + offsets[item], offsets[item + 1] - offsets[item]};
  }
};

// Observed (user, item, rating) triples. Entries are kept sorted by
// (user, item); every rating lies in the domain and no cell repeats.
class SparseRatingMatrix {
 public:
  SparseRatingMatrix(std::size_t users, std::size_t items, std::vector<Rating> entries,
                     RatingDomain domain);

  std::size_t users() const noexcept { return users_; }
  std::size_t items() const noexcept { return items_; }
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }
  const RatingDomain& domain() const noexcept { return domain_; }

  std::span<const Rating> entries() const noexcept { return entries_; }
  const Rating& operator[](std::size_t k) const { return entries_[k]; }

  // Entries of one user, contiguous.
  std::span<const Rating> row(std::size_t user) const;
  std::size_t row_begin(std::size_t user) const { return row_offsets_[user]; }
  std::size_t row_end(std::size_t user) const { return row_offsets_[user + 1]; }

  std::optional<std::size_t> find(std::size_t user, std::size_t item) const;
  ColumnIndex column_index() const;

  double mean() const;
  std::vector<double> values() const;

  // Same sparsity pattern, new values (validated against the domain).
  SparseRatingMatrix with_values(std::span<const double> values) const;
  // Keeps the listed entry positions, preserving the user/item index space.
  SparseRatingMatrix select(std::span<const std::size_t> positions) const;

  bool operator==(const SparseRatingMatrix& other) const {
    return users_ == other.users_ && items_ == other.items_ && domain_ == other.domain_ &&
           entries_ == other.entries_;
  }

 private:
  std::size_t users_;
  std::size_t items_;
  std::vector<Rating> entries_;
  std::vector<std::size_t> row_offsets_;
  RatingDomain domain_;
};

}  // namespace ldprec
