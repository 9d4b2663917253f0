#include "ldprec/sparse_matrix.hpp"

#include <algorithm>
#include <string>

#include "ldprec/error.hpp"

namespace ldprec {

SparseRatingMatrix::SparseRatingMatrix(std::size_t users, std::size_t items,
                                       std::vector<Rating> entries, RatingDomain domain)
    : users_(users), items_(items), entries_(std::move(entries)), domain_(domain) {
  for (const Rating& e : entries_) {
    if (e.user >= users_ || e.item >= items_) {
      throw DataError("rating index (" + std::to_string(e.user) + ", " + std::to_string(e.item) +
                      ") outside " + std::to_string(users_) + "x" + std::to_string(items_));
    }
    if (!domain_.contains(e.value)) {
      throw DomainError("rating " + std::to_string(e.value) + " outside [" +
                        std::to_string(domain_.lower()) + ", " + std::to_string(domain_.upper()) +
                        "]");
    }
  }
  std::stable_sort(entries_.begin(), entries_.end(), [](const Rating& a, const Rating& b) {
    return a.user != b.user ? a.user < b.user : a.item < b.item;
  });
  for (std::size_t k = 1; k < entries_.size(); ++k) {
    if (entries_[k].user == entries_[k - 1].user && entries_[k].item == entries_[k - 1].item) {
      throw DataError("duplicate entry for cell (" + std::to_string(entries_[k].user) + ", " +
                      std::to_string(entries_[k].item) + ")");
    }
  }
  row_offsets_.assign(users_ + 1, 0);
  for (const Rating& e : entries_) ++row_offsets_[e.user + 1];
  for (std::size_t i = 0; i < users_; ++i) row_offsets_[i + 1] += row_offsets_[i];
}

std::span<const Rating> SparseRatingMatrix::row(std::size_t user) const {
  return {entries_.data() + row_offsets_[user], row_offsets_[user + 1] - row_offsets_[user]};
}

std::optional<std::size_t> SparseRatingMatrix::find(std::size_t user, std::size_t item) const {
  if (user >= users_ || item >= items_) return std::nullopt;
  const auto first = entries_.begin() + static_cast<std::ptrdiff_t>(row_offsets_[user]);
  const auto last = entries_.begin() + static_cast<std::ptrdiff_t>(row_offsets_[user + 1]);
  const auto it = std::lower_bound(first, last, item,
                                   [](const Rating& e, std::size_t j) { return e.item < j; });
  if (it == last || it->item != item) return std::nullopt;
  return static_cast<std::size_t>(it - entries_.begin());
}

ColumnIndex SparseRatingMatrix::column_index() const {
  ColumnIndex idx;
  idx.offsets.assign(items_ + 1, 0);
  for (const Rating& e : entries_) ++idx.offsets[e.item + 1];
  for (std::size_t j = 0; j < items_; ++j) idx.offsets[j + 1] += idx.offsets[j];
  idx.entry.resize(entries_.size());
  std::vector<std::size_t> cursor(idx.offsets.begin(), idx.offsets.end() - 1);
  for (std::size_t k = 0; k < entries_.size(); ++k) idx.entry[cursor[entries_[k].item]++] = k;
  return idx;
}

double SparseRatingMatrix::mean() const {
  if (entries_.empty()) throw DataError("mean of an empty rating matrix");
  double sum = 0.0;
  for (const Rating& e : entries_) sum += e.value;
  return sum / static_cast<double>(entries_.size());
}

std::vector<double> SparseRatingMatrix::values() const {
  std::vector<double> v(entries_.size());
  for (std::size_t k = 0; k < entries_.size(); ++k) v[k] = entries_[k].value;
  return v;
}

SparseRatingMatrix SparseRatingMatrix::with_values(std::span<const double> values) const {
  if (values.size() != entries_.size()) {
    throw DataError("value count does not match the sparsity pattern");
  }
  std::vector<Rating> out(entries_);
  for (std::size_t k = 0; k < out.size(); ++k) out[k].value = values[k];
  return {users_, items_, std::move(out), domain_};
}

SparseRatingMatrix SparseRatingMatrix::select(std::span<const std::size_t> positions) const {
  std::vector<Rating> out;
  out.reserve(positions.size());
  for (std::size_t k : positions) out.push_back(entries_.at(k));
  return {users_, items_, std::move(out), domain_};
}

}  // namespace ldprec
