#include "ldprec/factor_model.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include "ldprec/error.hpp"

namespace ldprec {
namespace {

static_assert(std::endian::native == std::endian::little, "model container assumes little-endian");

constexpr std::array<char, 8> kMagic{'L', 'D', 'P', 'R', 'M', 'F', '0', '1'};

template <class T>
void put(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T take(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw DataError("model container truncated");
  return v;
}

void put_doubles(std::ostream& out, const double* data, std::size_t count) {
  out.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(count * sizeof(double)));
}

void take_doubles(std::istream& in, double* data, std::size_t count) {
  in.read(reinterpret_cast<char*>(data), static_cast<std::streamsize>(count * sizeof(double)));
  if (!in) throw DataError("model container truncated");
}

}  // namespace

double predict(const FactorModel& model, std::size_t user, std::size_t item,
               const std::optional<RatingDomain>& clip) {
  if (user >= static_cast<std::size_t>(model.users.rows()) ||
      item >= static_cast<std::size_t>(model.items.rows())) {
    throw DomainError("predict: index (" + std::to_string(user) + ", " + std::to_string(item) +
                      ") out of range");
  }
  const auto u = static_cast<Eigen::Index>(user);
  const auto j = static_cast<Eigen::Index>(item);
  const double raw = model.users.row(u).dot(model.items.row(j));
  return clip ? clip->clamp(raw) : raw;
}

void write_model(const ModelContainer& model, std::ostream& out) {
  const auto& f = model.factors;
  if (f.users.cols() != f.items.cols()) throw DomainError("U and V latent dimensions differ");
  if (model.pi.size() != model.sigma2.size()) throw DomainError("Pi and Sigma2 sizes differ");
  out.write(kMagic.data(), kMagic.size());
  put<std::uint64_t>(out, static_cast<std::uint64_t>(f.users.rows()));
  put<std::uint64_t>(out, static_cast<std::uint64_t>(f.items.rows()));
  put<std::uint64_t>(out, static_cast<std::uint64_t>(f.users.cols()));
  put<std::uint64_t>(out, model.pi.size());
  put_doubles(out, f.users.data(), static_cast<std::size_t>(f.users.size()));
  put_doubles(out, f.items.data(), static_cast<std::size_t>(f.items.size()));
  put_doubles(out, model.pi.data(), model.pi.size());
  put_doubles(out, model.sigma2.data(), model.sigma2.size());
  put<std::uint64_t>(out, model.meta.iterations);
  put<double>(out, model.meta.log_likelihood);
  put<std::uint64_t>(out, model.meta.seed);
  if (!out) throw DataError("failed to write model container");
}

ModelContainer read_model(std::istream& in) {
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) throw DataError("not a model container");
  const auto m = take<std::uint64_t>(in);
  const auto n = take<std::uint64_t>(in);
  const auto d = take<std::uint64_t>(in);
  const auto k = take<std::uint64_t>(in);
  ModelContainer model;
  model.factors.users.resize(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(d));
  model.factors.items.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  model.pi.resize(k);
  model.sigma2.resize(k);
  take_doubles(in, model.factors.users.data(), m * d);
  take_doubles(in, model.factors.items.data(), n * d);
  take_doubles(in, model.pi.data(), k);
  take_doubles(in, model.sigma2.data(), k);
  model.meta.iterations = take<std::uint64_t>(in);
  model.meta.log_likelihood = take<double>(in);
  model.meta.seed = take<std::uint64_t>(in);
  return model;
}

void save_model(const ModelContainer& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  write_model(model, out);
}

ModelContainer load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return read_model(in);
}

}  // namespace ldprec
