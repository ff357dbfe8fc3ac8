#include "cssdf/dataset.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <random>

#include "cssdf/errors.hpp"

namespace cssdf {

static_assert(std::endian::native == std::endian::little, "binary formats assume little-endian hosts");

namespace {

constexpr std::uint32_t kDatasetVersion = 1;

template <typename T>
void put(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw IoError("dataset file truncated");
  return v;
}

}  // namespace

bool sample_is_consistent(const FieldSample& s, double grad_tol) {
  if (!(s.value != 0.0) || !std::isfinite(s.value)) return false;
  if ((s.value > 0.0) != (s.label == 0)) return false;
  return std::abs(s.grad.norm() - 1.0) <= grad_tol;
}

void Dataset::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write dataset file: " + path);
  out.write("CSD1", 4);
  put<std::uint32_t>(out, kDatasetVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(dof));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(point_dim));
  put<std::uint64_t>(out, static_cast<std::uint64_t>(samples.size()));
  for (const auto& s : samples) {
    for (int i = 0; i < dof; ++i) put<double>(out, s.q[i]);
    for (int i = 0; i < point_dim; ++i) put<double>(out, s.p[i]);
    put<double>(out, s.value);
    put<std::uint8_t>(out, s.label);
    for (int i = 0; i < dof; ++i) put<double>(out, s.grad[i]);
  }
  if (!out) throw IoError("failed writing dataset file: " + path);
}

Dataset Dataset::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open dataset file: " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "CSD1", 4) != 0) throw SchemaError("not a CSD1 dataset file: " + path);
  const auto version = get<std::uint32_t>(in);
  if (version != kDatasetVersion)
    throw VersionMismatchError("dataset version " + std::to_string(version) + " not supported");
  Dataset d;
  d.dof = static_cast<int>(get<std::uint32_t>(in));
  d.point_dim = static_cast<int>(get<std::uint32_t>(in));
  if (d.dof < 1 || d.dof > 64 || (d.point_dim != 2 && d.point_dim != 3))
    throw SchemaError("dataset header has invalid dimensions");
  const auto count = get<std::uint64_t>(in);
  d.samples.resize(count);
  for (auto& s : d.samples) {
    s.q.resize(d.dof);
    s.grad.resize(d.dof);
    for (int i = 0; i < d.dof; ++i) s.q[i] = get<double>(in);
    for (int i = 0; i < d.point_dim; ++i) s.p[i] = get<double>(in);
    s.value = get<double>(in);
    s.label = get<std::uint8_t>(in);
    for (int i = 0; i < d.dof; ++i) s.grad[i] = get<double>(in);
  }
  return d;
}

void Dataset::save_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write CSV file: " + path);
  for (int i = 0; i < dof; ++i) out << "q" << i + 1 << ',';
  for (int i = 0; i < point_dim; ++i) out << "p" << i + 1 << ',';
  out << "value,label";
  for (int i = 0; i < dof; ++i) out << ",g" << i + 1;
  out << '\n' << std::setprecision(17);
  for (const auto& s : samples) {
    for (int i = 0; i < dof; ++i) out << s.q[i] << ',';
    for (int i = 0; i < point_dim; ++i) out << s.p[i] << ',';
    out << s.value << ',' << static_cast<int>(s.label);
    for (int i = 0; i < dof; ++i) out << ',' << s.grad[i];
    out << '\n';
  }
}

double boundary_sample_ratio(const Dataset& data, double band) {
  if (data.samples.empty()) return 0.0;
  std::size_t n = 0;
  for (const auto& s : data.samples) n += std::abs(s.value) <= band ? 1 : 0;
  return 100.0 * static_cast<double>(n) / data.samples.size();
}

double class_ratio(const Dataset& data) {
  if (data.samples.empty()) return 0.0;
  std::size_t col = 0;
  for (const auto& s : data.samples) col += s.label;
  const std::size_t major = std::max(col, data.samples.size() - col);
  return 100.0 * static_cast<double>(major) / data.samples.size();
}

Dataset mix_datasets(const Dataset& self_data, const Dataset& external, double self_fraction,
                     std::size_t total, std::uint64_t seed) {
  if (!(self_fraction >= 0.0 && self_fraction <= 1.0)) throw InvalidInputError("self fraction must lie in [0, 1]");
  if (self_data.dof != external.dof || self_data.point_dim != external.point_dim)
    throw SchemaError("datasets describe different robots");
  const double ns = static_cast<double>(self_data.size()), ne = static_cast<double>(external.size());
  if (total == 0) {
    double cap = ns + ne;
    if (self_fraction > 0.0) cap = std::min(cap, ns / self_fraction);
    if (self_fraction < 1.0) cap = std::min(cap, ne / (1.0 - self_fraction));
    total = static_cast<std::size_t>(cap);
  }
  const auto take_self = static_cast<std::size_t>(std::llround(self_fraction * static_cast<double>(total)));
  const std::size_t take_ext = total - take_self;
  if (take_self > self_data.size() || take_ext > external.size())
    throw InvalidInputError("not enough samples for the requested mix");

  std::mt19937_64 rng(seed);
  Dataset out;
  out.dof = self_data.dof;
  out.point_dim = self_data.point_dim;
  out.samples.reserve(total);
  auto draw = [&](const Dataset& src, std::size_t k) {
    std::vector<std::size_t> idx(src.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::shuffle(idx.begin(), idx.end(), rng);
    for (std::size_t i = 0; i < k; ++i) out.samples.push_back(src.samples[idx[i]]);
  };
  draw(self_data, take_self);
  draw(external, take_ext);
  std::shuffle(out.samples.begin(), out.samples.end(), rng);
  return out;
}

}  // namespace cssdf
