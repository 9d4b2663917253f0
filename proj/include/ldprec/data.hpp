#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "ldprec/rating_domain.hpp"
#include "ldprec/sparse_matrix.hpp"

namespace ldprec {

enum class DatasetFormat { kMovielens, kJester, kLibimseti, kCanonical };

struct JesterOptions {
  bool count_column = true;  // first field is the number of rated jokes
  double missing = 99.0;
  double rank_step = 1.0;    // grid used only for noise-distribution work
};

struct DatasetSpec {
  std::string name;
  std::filesystem::path path;
  RatingDomain domain;
  DatasetFormat format;
  JesterOptions jester{};

  // Named datasets carry their published rating scale:
  // movielens [0.5, 5] step 0.5, jester [-10, 10], libimseti [1, 10] step 1.
  // "canonical" reads the domain from the file header.
  static DatasetSpec named(const std::string& name, const std::filesystem::path& path);
};

SparseRatingMatrix load_movielens(std::istream& in);
SparseRatingMatrix load_movielens(const std::filesystem::path& path);
SparseRatingMatrix load_jester(std::istream& in, const JesterOptions& options = {});
SparseRatingMatrix load_jester(const std::filesystem::path& path, const JesterOptions& options = {});
SparseRatingMatrix load_libimseti(std::istream& in);
SparseRatingMatrix load_libimseti(const std::filesystem::path& path);

// Canonical text form: "m,n" and "l,u" (or "l,u,c" with a rank grid)
// header lines, then one "i,j,r" line per entry. Round-trips exactly.
void write_canonical(const SparseRatingMatrix& ratings, std::ostream& out);
SparseRatingMatrix read_canonical(std::istream& in);
SparseRatingMatrix read_canonical(const std::filesystem::path& path);

struct SubsampleSpec {
  std::optional<double> fraction;
  std::optional<std::size_t> max_entries;
};

// Uniform subset of entries (exact count), users/items reindexed densely in
// their original order.
SparseRatingMatrix subsample(const SparseRatingMatrix& ratings, const SubsampleSpec& spec,
                             std::uint64_t seed);

// Empirical distribution of ratings over the rank grid (nearest rank).
std::vector<double> rank_marginal(const SparseRatingMatrix& ratings);

std::string sha256_file(const std::filesystem::path& path);

struct LoadedDataset {
  DatasetSpec spec;
  SparseRatingMatrix ratings;
  std::string sha256;
  std::vector<std::string> notes;
};

LoadedDataset load_dataset(const DatasetSpec& spec);

}  // namespace ldprec
