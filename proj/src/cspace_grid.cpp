#include "cssdf/cspace_grid.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iostream>
#include <limits>

#include "cssdf/errors.hpp"
#include "cssdf/geometry_oracle.hpp"

namespace cssdf {

static_assert(std::endian::native == std::endian::little, "binary formats assume little-endian hosts");

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Lower envelope of parabolas (Felzenszwalb & Huttenlocher) with site
// tracking. Entries with f = inf are not sites.
void edt_line(int n, double h, const double* f, const std::int64_t* fidx, double* d,
              std::int64_t* didx, std::vector<int>& v, std::vector<double>& z) {
  v.resize(n);
  z.resize(n + 1);
  int k = -1;
  for (int q = 0; q < n; ++q) {
    if (f[q] == kInf) continue;
    const double xq = q * h;
    if (k < 0) {
      k = 0;
      v[0] = q;
      z[0] = -kInf;
      z[1] = kInf;
      continue;
    }
    while (true) {
      const double xv = v[k] * h;
      const double s = ((f[q] + xq * xq) - (f[v[k]] + xv * xv)) / (2.0 * (xq - xv));
      if (s <= z[k]) {
        --k;
        if (k < 0) {
          k = 0;
          v[0] = q;
          z[0] = -kInf;
          z[1] = kInf;
          break;
        }
      } else {
        ++k;
        v[k] = q;
        z[k] = s;
        z[k + 1] = kInf;
        break;
      }
    }
  }
  if (k < 0) {
    for (int q = 0; q < n; ++q) {
      d[q] = kInf;
      didx[q] = -1;
    }
    return;
  }
  int j = 0;
  for (int q = 0; q < n; ++q) {
    const double x = q * h;
    while (z[j + 1] < x) ++j;
    const double dx = (q - v[j]) * h;
    d[q] = dx * dx + f[v[j]];
    didx[q] = fidx[v[j]];
  }
}

// Squared distance from every cell to the nearest site, with site index.
void squared_edt(const GridSpec& spec, const std::vector<std::uint8_t>& sites, std::vector<double>& dist,
                 std::vector<std::int64_t>& idx) {
  const std::size_t total = spec.cell_count();
  dist.assign(total, kInf);
  idx.assign(total, -1);
  for (std::size_t i = 0; i < total; ++i)
    if (sites[i]) {
      dist[i] = 0.0;
      idx[i] = static_cast<std::int64_t>(i);
    }
  const int dims = spec.dims();
  std::vector<double> f, d;
  std::vector<std::int64_t> fi, di;
  std::vector<int> v;
  std::vector<double> z;
  for (int axis = 0; axis < dims; ++axis) {
    const int n = spec.counts[axis];
    std::size_t stride = 1;
    for (int a = axis + 1; a < dims; ++a) stride *= spec.counts[a];
    const double h = spec.cell_size(axis);
    f.resize(n);
    d.resize(n);
    fi.resize(n);
    di.resize(n);
    for (std::size_t start = 0; start < total; ++start) {
      if ((start / stride) % n != 0) continue;
      for (int q = 0; q < n; ++q) {
        f[q] = dist[start + q * stride];
        fi[q] = idx[start + q * stride];
      }
      edt_line(n, h, f.data(), fi.data(), d.data(), di.data(), v, z);
      for (int q = 0; q < n; ++q) {
        dist[start + q * stride] = d[q];
        idx[start + q * stride] = di[q];
      }
    }
  }
}

template <typename T>
void write_raw(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_raw(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw IoError("grid file truncated");
  return v;
}

}  // namespace

std::size_t GridSpec::cell_count() const {
  std::size_t n = 1;
  for (int c : counts) n *= static_cast<std::size_t>(c);
  return n;
}

double GridSpec::max_cell_size() const {
  double m = 0.0;
  for (int a = 0; a < dims(); ++a) m = std::max(m, cell_size(a));
  return m;
}

std::size_t GridSpec::flat_index(const std::vector<int>& idx) const {
  std::size_t f = 0;
  for (int a = 0; a < dims(); ++a) f = f * counts[a] + idx[a];
  return f;
}

std::vector<int> GridSpec::multi_index(std::size_t flat) const {
  std::vector<int> idx(dims());
  for (int a = dims() - 1; a >= 0; --a) {
    idx[a] = static_cast<int>(flat % counts[a]);
    flat /= counts[a];
  }
  return idx;
}

Configuration GridSpec::cell_center(std::size_t flat) const {
  auto idx = multi_index(flat);
  Configuration q(dims());
  for (int a = 0; a < dims(); ++a) q[a] = lower[a] + (idx[a] + 0.5) * cell_size(a);
  return q;
}

GridSpec default_grid_spec(const RobotModel& model, int cells) {
  if (cells < 2) throw InvalidInputError("grid needs at least 2 cells per axis");
  GridSpec spec;
  spec.counts.assign(model.dof(), cells);
  spec.lower = model.extended_lower();
  spec.upper = model.extended_upper();
  return spec;
}

CSpaceGrid::CSpaceGrid(GridSpec spec, std::vector<double> values, std::vector<std::int64_t> nearest,
                       bool degenerate)
    : spec_(std::move(spec)),
      values_(std::move(values)),
      nearest_(std::move(nearest)),
      degenerate_(degenerate) {
  if (values_.size() != spec_.cell_count()) throw InvalidInputError("grid value count mismatch");
  if (nearest_.empty()) nearest_.assign(values_.size(), -1);
}

double CSpaceGrid::interpolate(const Configuration& q, Eigen::VectorXd* grad) const {
  const int dims = spec_.dims();
  if (q.size() != dims) throw InvalidInputError("grid interpolate: dimension mismatch");
  std::vector<int> base(dims);
  std::vector<double> frac(dims);
  std::vector<bool> clamped(dims, false);
  for (int a = 0; a < dims; ++a) {
    const double h = spec_.cell_size(a);
    double u = (q[a] - spec_.lower[a]) / h - 0.5;
    const double umax = spec_.counts[a] - 1;
    if (u <= 0.0) {
      u = 0.0;
      clamped[a] = true;
    } else if (u >= umax) {
      u = umax;
      clamped[a] = true;
    }
    int i = std::min(static_cast<int>(std::floor(u)), spec_.counts[a] - 2);
    base[a] = i;
    frac[a] = u - i;
  }
  double value = 0.0;
  if (grad) grad->setZero(dims);
  std::vector<int> idx(dims);
  for (int corner = 0; corner < (1 << dims); ++corner) {
    double w = 1.0;
    for (int a = 0; a < dims; ++a) {
      const bool hi = (corner >> a) & 1;
      idx[a] = base[a] + (hi ? 1 : 0);
      w *= hi ? frac[a] : 1.0 - frac[a];
    }
    const double v = values_[spec_.flat_index(idx)];
    value += w * v;
    if (grad) {
      for (int a = 0; a < dims; ++a) {
        if (clamped[a]) continue;
        double wa = 1.0;
        for (int b = 0; b < dims; ++b) {
          const bool hi = (corner >> b) & 1;
          if (b == a)
            wa *= (hi ? 1.0 : -1.0) / spec_.cell_size(a);
          else
            wa *= hi ? frac[b] : 1.0 - frac[b];
        }
        (*grad)[a] += wa * v;
      }
    }
  }
  return value;
}

bool CSpaceGrid::finite_difference_gradient(std::size_t flat, Eigen::VectorXd& grad) const {
  const int dims = spec_.dims();
  auto idx = spec_.multi_index(flat);
  grad.resize(dims);
  for (int a = 0; a < dims; ++a) {
    if (idx[a] == 0 || idx[a] == spec_.counts[a] - 1) return false;
    auto lo = idx, hi = idx;
    --lo[a];
    ++hi[a];
    grad[a] = (values_[spec_.flat_index(hi)] - values_[spec_.flat_index(lo)]) / (2.0 * spec_.cell_size(a));
  }
  return true;
}

void CSpaceGrid::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write grid file: " + path);
  out.write("CSG1", 4);
  write_raw<std::uint32_t>(out, static_cast<std::uint32_t>(spec_.dims()));
  for (int c : spec_.counts) write_raw<std::uint32_t>(out, static_cast<std::uint32_t>(c));
  for (int a = 0; a < spec_.dims(); ++a) {
    write_raw<double>(out, spec_.lower[a]);
    write_raw<double>(out, spec_.upper[a]);
  }
  out.write(reinterpret_cast<const char*>(values_.data()),
            static_cast<std::streamsize>(values_.size() * sizeof(double)));
  if (!out) throw IoError("failed writing grid file: " + path);
}

CSpaceGrid CSpaceGrid::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open grid file: " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "CSG1", 4) != 0) throw SchemaError("not a CSG1 grid file: " + path);
  GridSpec spec;
  const auto dims = read_raw<std::uint32_t>(in);
  if (dims == 0 || dims > 16) throw SchemaError("grid file: bad dof");
  for (std::uint32_t a = 0; a < dims; ++a) spec.counts.push_back(static_cast<int>(read_raw<std::uint32_t>(in)));
  spec.lower.resize(dims);
  spec.upper.resize(dims);
  for (std::uint32_t a = 0; a < dims; ++a) {
    spec.lower[a] = read_raw<double>(in);
    spec.upper[a] = read_raw<double>(in);
  }
  std::vector<double> values(spec.cell_count());
  in.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(values.size() * sizeof(double)));
  if (!in) throw IoError("grid file truncated: " + path);
  return CSpaceGrid(std::move(spec), std::move(values), {}, false);
}

CSpaceGrid signed_distance_grid(const GridSpec& spec, const std::vector<std::uint8_t>& colliding) {
  const std::size_t total = spec.cell_count();
  if (colliding.size() != total) throw InvalidInputError("labelling size does not match grid");
  std::size_t n_col = 0;
  for (auto c : colliding) n_col += c ? 1 : 0;
  std::vector<double> values(total);
  std::vector<std::int64_t> nearest(total, -1);
  if (n_col == 0 || n_col == total) {
    const double diam = spec.diameter();
    std::fill(values.begin(), values.end(), n_col == 0 ? diam : -diam);
    return CSpaceGrid(spec, std::move(values), std::move(nearest), true);
  }
  std::vector<std::uint8_t> safe(total);
  for (std::size_t i = 0; i < total; ++i) safe[i] = colliding[i] ? 0 : 1;
  std::vector<double> to_col, to_safe;
  std::vector<std::int64_t> idx_col, idx_safe;
  squared_edt(spec, colliding, to_col, idx_col);
  squared_edt(spec, safe, to_safe, idx_safe);
  for (std::size_t i = 0; i < total; ++i) {
    if (colliding[i]) {
      values[i] = -std::sqrt(to_safe[i]);
      nearest[i] = idx_safe[i];
    } else {
      values[i] = std::sqrt(to_col[i]);
      nearest[i] = idx_col[i];
    }
  }
  return CSpaceGrid(spec, std::move(values), std::move(nearest), false);
}

std::vector<std::uint8_t> classify_cells(const GridSpec& spec,
                                         const std::function<bool(const Configuration&)>& classifier,
                                         int workers) {
  std::vector<std::uint8_t> labels(spec.cell_count());
  parallel_for(labels.size(), workers, [&](std::size_t b, std::size_t e, int) {
    for (std::size_t i = b; i < e; ++i) labels[i] = classifier(spec.cell_center(i)) ? 1 : 0;
  });
  return labels;
}

namespace {

CSpaceGrid merge_limits(const RobotModel& model, CSpaceGrid grid) {
  bool any_limited = false;
  for (const auto& j : model.joints()) any_limited |= !j.continuous;
  if (!any_limited) return grid;
  std::vector<double> values = grid.values();
  const auto& spec = grid.spec();
  for (std::size_t i = 0; i < values.size(); ++i)
    values[i] = std::min(values[i], model.limit_distance(spec.cell_center(i)));
  return CSpaceGrid(spec, std::move(values), grid.nearest(), grid.degenerate());
}

void warn_degenerate(const CSpaceGrid& grid, const char* what) {
  if (grid.degenerate())
    std::cerr << "warning: " << what << ": grid contains a single class; values clamped to +/- box diameter\n";
}

}  // namespace

CSpaceGrid oracle_self_distance(const RobotModel& model, const GridSpec& spec, int workers) {
  if (spec.dims() != model.dof()) throw InvalidInputError("grid dims must equal robot dof");
  auto labels = classify_cells(spec, [&](const Configuration& q) { return link_self_collision(model, q); }, workers);
  auto grid = signed_distance_grid(spec, labels);
  if (grid.degenerate()) {
    // Link pairs never collide; the limit box may still give a boundary.
    auto merged = merge_limits(model, grid);
    if (merged.values() == grid.values()) warn_degenerate(grid, "oracle_self_distance");
    return merged;
  }
  return merge_limits(model, std::move(grid));
}

CSpaceGrid oracle_point_distance(const RobotModel& model, const GridSpec& spec, const Point& p, int workers) {
  if (spec.dims() != model.dof()) throw InvalidInputError("grid dims must equal robot dof");
  auto labels =
      classify_cells(spec, [&](const Configuration& q) { return collides_with_point(model, q, p); }, workers);
  auto grid = signed_distance_grid(spec, labels);
  warn_degenerate(grid, "oracle_point_distance");
  return grid;
}

CSpaceGrid oracle_scene_distance(const RobotModel& model, const Scene& scene, const GridSpec& spec, int workers,
                                 const std::vector<std::uint8_t>* self_labels) {
  if (spec.dims() != model.dof()) throw InvalidInputError("grid dims must equal robot dof");
  std::vector<std::uint8_t> labels;
  if (self_labels) {
    if (self_labels->size() != spec.cell_count()) throw InvalidInputError("self labelling size mismatch");
    labels = classify_cells(
        spec, [&](const Configuration& q) { return collides_with_scene(model, scene, q); }, workers);
    for (std::size_t i = 0; i < labels.size(); ++i) labels[i] |= (*self_labels)[i];
  } else {
    labels = classify_cells(spec,
                            [&](const Configuration& q) {
                              return link_self_collision(model, q) || collides_with_scene(model, scene, q);
                            },
                            workers);
  }
  return merge_limits(model, signed_distance_grid(spec, labels));
}

}  // namespace cssdf
