#include "ldprec/data.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <charconv>
#include <fstream>
#include <iomanip>
#include <istream>
#include <map>
#include <memory>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string_view>

#include "ldprec/error.hpp"
#include "ldprec/random.hpp"

namespace ldprec {
namespace {

const RatingDomain kMovielensDomain = RatingDomain::with_ranks(0.5, 5.0, 0.5);
const RatingDomain kLibimsetiDomain = RatingDomain::with_ranks(1.0, 10.0, 1.0);

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return in;
}

std::vector<std::string_view> split(std::string_view line, std::string_view delims) {
  std::vector<std::string_view> fields;
  std::size_t pos = 0;
  while (pos <= line.size()) {
    const std::size_t next = line.find_first_of(delims, pos);
    const std::size_t end = next == std::string_view::npos ? line.size() : next;
    if (end > pos) fields.push_back(line.substr(pos, end - pos));
    if (next == std::string_view::npos) break;
    pos = next + 1;
  }
  return fields;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.remove_suffix(1);
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  return s;
}

template <class T>
T parse_number(std::string_view field, std::size_t line, const char* what) {
  T value{};
  field = trim(field);
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size()) {
    throw ParseError("cannot parse " + std::string(what) + " '" + std::string(field) + "'", line);
  }
  return value;
}

// Raw (id, id, rating) triples with original ids, remapped densely in
// ascending id order.
struct TripleReader {
  struct Raw {
    std::int64_t user;
    std::int64_t item;
    double value;
    std::size_t line;
  };
  std::vector<Raw> rows;

  SparseRatingMatrix build(const RatingDomain& domain) const {
    if (rows.empty()) throw DataError("empty dataset");
    std::map<std::int64_t, std::uint32_t> users, items;
    for (const Raw& r : rows) {
      users.emplace(r.user, 0);
      items.emplace(r.item, 0);
    }
    std::uint32_t next = 0;
    for (auto& [id, idx] : users) idx = next++;
    next = 0;
    for (auto& [id, idx] : items) idx = next++;
    std::vector<Rating> entries;
    entries.reserve(rows.size());
    for (const Raw& r : rows) {
      if (!domain.contains(r.value)) {
        throw DomainError("rating " + std::to_string(r.value) + " outside [" +
                          std::to_string(domain.lower()) + ", " + std::to_string(domain.upper()) +
                          "] (line " + std::to_string(r.line) + ")");
      }
      entries.push_back({users.at(r.user), items.at(r.item), r.value});
    }
    return {users.size(), items.size(), std::move(entries), domain};
  }
};

SparseRatingMatrix load_triples(std::istream& in, std::string_view delims, std::size_t min_fields,
                                const RatingDomain& domain) {
  TripleReader reader;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string_view view = trim(line);
    if (view.empty()) continue;
    const auto fields = split(view, delims);
    if (fields.size() < min_fields) {
      throw ParseError("expected " + std::to_string(min_fields) + " fields, found " +
                           std::to_string(fields.size()),
                       lineno);
    }
    reader.rows.push_back({parse_number<std::int64_t>(fields[0], lineno, "user id"),
                           parse_number<std::int64_t>(fields[1], lineno, "item id"),
                           parse_number<double>(fields[2], lineno, "rating"), lineno});
  }
  return reader.build(domain);
}

std::string format_double(double v) {
  std::array<char, 32> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ptr);
}

}  // namespace

DatasetSpec DatasetSpec::named(const std::string& name, const std::filesystem::path& path) {
  if (name == "movielens") return {name, path, kMovielensDomain, DatasetFormat::kMovielens};
  if (name == "jester") {
    const JesterOptions opts;
    return {name, path, RatingDomain::with_ranks(-10.0, 10.0, opts.rank_step),
            DatasetFormat::kJester, opts};
  }
  if (name == "libimseti") return {name, path, kLibimsetiDomain, DatasetFormat::kLibimseti};
  if (name == "canonical") {
    return {name, path, RatingDomain(0.0, 1.0), DatasetFormat::kCanonical};
  }
  throw ConfigError("unknown dataset '" + name + "'");
}

SparseRatingMatrix load_movielens(std::istream& in) {
  return load_triples(in, "\t ", 4, kMovielensDomain);
}

SparseRatingMatrix load_movielens(const std::filesystem::path& path) {
  auto in = open_input(path);
  return load_movielens(in);
}

SparseRatingMatrix load_libimseti(std::istream& in) {
  return load_triples(in, ",", 3, kLibimsetiDomain);
}

SparseRatingMatrix load_libimseti(const std::filesystem::path& path) {
  auto in = open_input(path);
  return load_libimseti(in);
}

SparseRatingMatrix load_jester(std::istream& in, const JesterOptions& options) {
  const auto domain = RatingDomain::with_ranks(-10.0, 10.0, options.rank_step);
  std::vector<Rating> entries;
  std::size_t users = 0;
  std::size_t items = 0;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string_view view = trim(line);
    if (view.empty()) continue;
    auto fields = split(view, ",;\t ");
    const std::size_t first = options.count_column ? 1 : 0;
    if (fields.size() <= first) throw ParseError("row has no ratings", lineno);
    const std::size_t row_items = fields.size() - first;
    if (items == 0) items = row_items;
    if (row_items != items) {
      throw ParseError("expected " + std::to_string(items) + " joke columns, found " +
                           std::to_string(row_items),
                       lineno);
    }
    for (std::size_t j = 0; j < row_items; ++j) {
      const double v = parse_number<double>(fields[first + j], lineno, "rating");
      if (v == options.missing) continue;
      if (!domain.contains(v)) {
        throw DomainError("rating " + std::to_string(v) + " outside [-10, 10] (line " +
                          std::to_string(lineno) + ")");
      }
      entries.push_back({static_cast<std::uint32_t>(users), static_cast<std::uint32_t>(j), v});
    }
    ++users;
  }
  if (users == 0) throw DataError("empty dataset");
  return {users, items, std::move(entries), domain};
}

SparseRatingMatrix load_jester(const std::filesystem::path& path, const JesterOptions& options) {
  auto in = open_input(path);
  return load_jester(in, options);
}

void write_canonical(const SparseRatingMatrix& ratings, std::ostream& out) {
  const RatingDomain& d = ratings.domain();
  out << ratings.users() << ',' << ratings.items() << '\n'
      << format_double(d.lower()) << ',' << format_double(d.upper());
  if (d.has_ranks()) out << ',' << format_double(d.step());
  out << '\n';
  for (const Rating& e : ratings.entries()) {
    out << e.user << ',' << e.item << ',' << format_double(e.value) << '\n';
  }
}

SparseRatingMatrix read_canonical(std::istream& in) {
  std::string line;
  std::size_t lineno = 0;
  auto next_line = [&]() -> std::vector<std::string_view> {
    if (!std::getline(in, line)) throw ParseError("truncated header", lineno + 1);
    ++lineno;
    return split(trim(line), ",");
  };
  const auto dims = next_line();
  if (dims.size() != 2) throw ParseError("expected 'm,n'", lineno);
  const auto users = parse_number<std::size_t>(dims[0], lineno, "user count");
  const auto items = parse_number<std::size_t>(dims[1], lineno, "item count");
  const auto bounds = next_line();
  if (bounds.size() != 2 && bounds.size() != 3) throw ParseError("expected 'l,u[,c]'", lineno);
  const double lo = parse_number<double>(bounds[0], lineno, "lower bound");
  const double hi = parse_number<double>(bounds[1], lineno, "upper bound");
  const RatingDomain domain =
      bounds.size() == 3
          ? RatingDomain::with_ranks(lo, hi, parse_number<double>(bounds[2], lineno, "step"))
          : RatingDomain(lo, hi);

  std::vector<Rating> entries;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string_view view = trim(line);
    if (view.empty()) continue;
    const auto f = split(view, ",");
    if (f.size() != 3) throw ParseError("expected 'i,j,r'", lineno);
    const double v = parse_number<double>(f[2], lineno, "rating");
    if (!domain.contains(v)) {
      throw DomainError("rating " + std::to_string(v) + " outside the declared domain (line " +
                        std::to_string(lineno) + ")");
    }
    entries.push_back({parse_number<std::uint32_t>(f[0], lineno, "user index"),
                       parse_number<std::uint32_t>(f[1], lineno, "item index"), v});
  }
  return {users, items, std::move(entries), domain};
}

SparseRatingMatrix read_canonical(const std::filesystem::path& path) {
  auto in = open_input(path);
  return read_canonical(in);
}

SparseRatingMatrix subsample(const SparseRatingMatrix& ratings, const SubsampleSpec& spec,
                             std::uint64_t seed) {
  std::size_t keep = ratings.size();
  if (spec.fraction) {
    if (!(*spec.fraction > 0.0) || *spec.fraction > 1.0) {
      throw ConfigError("subsample fraction must lie in (0, 1]");
    }
    keep = static_cast<std::size_t>(std::llround(*spec.fraction * static_cast<double>(keep)));
  }
  if (spec.max_entries) keep = std::min(keep, *spec.max_entries);

  std::vector<std::size_t> order(ratings.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng = derive_rng(seed, streams::kSubsample, 0);
  std::shuffle(order.begin(), order.end(), rng);
  order.resize(keep);
  std::sort(order.begin(), order.end());

  std::vector<std::uint32_t> user_map(ratings.users(), UINT32_MAX);
  std::vector<std::uint32_t> item_map(ratings.items(), UINT32_MAX);
  for (std::size_t k : order) {
    user_map[ratings[k].user] = 0;
    item_map[ratings[k].item] = 0;
  }
  std::uint32_t users = 0, items = 0;
  for (auto& u : user_map) if (u == 0) u = users++;
  for (auto& i : item_map) if (i == 0) i = items++;

  std::vector<Rating> entries;
  entries.reserve(keep);
  for (std::size_t k : order) {
    entries.push_back({user_map[ratings[k].user], item_map[ratings[k].item], ratings[k].value});
  }
  return {users, items, std::move(entries), ratings.domain()};
}

std::vector<double> rank_marginal(const SparseRatingMatrix& ratings) {
  const RatingDomain& d = ratings.domain();
  std::vector<double> marginal(d.rank_count(), 0.0);
  if (ratings.empty()) throw DataError("rank marginal of an empty rating matrix");
  for (const Rating& e : ratings.entries()) marginal[d.nearest_rank(e.value)] += 1.0;
  for (double& p : marginal) p /= static_cast<double>(ratings.size());
  return marginal;
}

std::string sha256_file(const std::filesystem::path& path) {
  auto in = open_input(path);
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) {
    throw Error("sha256: digest initialisation failed");
  }
  std::array<char, 1 << 16> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), digest.data(), &len);
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) {
    hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
  }
  return hex.str();
}

LoadedDataset load_dataset(const DatasetSpec& spec) {
  std::vector<std::string> notes;
  auto load = [&]() -> SparseRatingMatrix {
    switch (spec.format) {
      case DatasetFormat::kMovielens: {
        auto m = load_movielens(spec.path);
        notes.push_back("movielens: scale taken as [0.5, 5]; the public 100k file only uses 1..5");
        return m;
      }
      case DatasetFormat::kJester: return load_jester(spec.path, spec.jester);
      case DatasetFormat::kLibimseti: return load_libimseti(spec.path);
      case DatasetFormat::kCanonical: return read_canonical(spec.path);
    }
    throw ConfigError("unknown dataset format");
  };
  auto ratings = load();
  DatasetSpec resolved = spec;
  resolved.domain = ratings.domain();
  return {resolved, std::move(ratings), sha256_file(spec.path), std::move(notes)};
}

}  // namespace ldprec
