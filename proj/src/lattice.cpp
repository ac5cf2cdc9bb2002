#include "homlab/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <istream>
#include <ostream>

#include "homlab/error.hpp"
#include "homlab/io.hpp"

namespace homlab {

TorusGrid::TorusGrid(int dim, int side) : dim_(dim), side_(side), sites_(1) {
  if (dim < 1) throw Error(ErrorCode::InvalidArgument, "lattice dimension must be >= 1");
  if (side < 2) throw Error(ErrorCode::InvalidArgument, "lattice side must be >= 2");
  strides_.assign(static_cast<std::size_t>(dim), 1);
  for (int j = dim - 1; j >= 0; --j) {
    strides_[static_cast<std::size_t>(j)] = sites_;
    sites_ *= static_cast<std::size_t>(side);
  }
}

std::size_t TorusGrid::index(std::span<const int> coords) const {
  if (coords.size() != static_cast<std::size_t>(dim_))
    throw Error(ErrorCode::InvalidArgument, "coordinate count does not match lattice dimension");
  std::size_t idx = 0;
  for (int j = 0; j < dim_; ++j) {
    int c = coords[static_cast<std::size_t>(j)] % side_;
    if (c < 0) c += side_;
    idx += static_cast<std::size_t>(c) * strides_[static_cast<std::size_t>(j)];
  }
  return idx;
}

std::vector<int> TorusGrid::coords(std::size_t index) const {
  std::vector<int> x(static_cast<std::size_t>(dim_));
  for (int j = 0; j < dim_; ++j) x[static_cast<std::size_t>(j)] = coord(index, j);
  return x;
}

std::size_t TorusGrid::shift(std::size_t index, int axis, int step) const noexcept {
  const auto stride = strides_[static_cast<std::size_t>(axis)];
  const int c = coord(index, axis);
  int nc = (c + step) % side_;
  if (nc < 0) nc += side_;
  return index + (static_cast<std::size_t>(nc) - static_cast<std::size_t>(c)) * stride;
}

std::size_t TorusGrid::translate(std::size_t index, std::size_t by) const noexcept {
  std::size_t out = index;
  for (int j = 0; j < dim_; ++j) out = shift(out, j, coord(by, j));
  return out;
}

double TorusGrid::distance(std::size_t a, std::size_t b) const noexcept {
  double s = 0.0;
  for (int j = 0; j < dim_; ++j) {
    int diff = std::abs(coord(a, j) - coord(b, j));
    diff = std::min(diff, side_ - diff);
    s += static_cast<double>(diff) * diff;
  }
  return std::sqrt(s);
}

bool FreqVector::is_zero() const noexcept {
  return std::all_of(k_.begin(), k_.end(), [](int v) { return v == 0; });
}

double FreqVector::angle(int axis, int side) const {
  return 2.0 * std::numbers::pi * k_.at(static_cast<std::size_t>(axis)) / side;
}

cplx FreqVector::q(int axis, int side) const {
  const double xi = angle(axis, side);
  return {std::cos(xi) - 1.0, std::sin(xi)};
}

std::vector<cplx> FreqVector::q_vector(int side) const {
  std::vector<cplx> out(k_.size());
  for (int j = 0; j < dim(); ++j) out[static_cast<std::size_t>(j)] = q(j, side);
  return out;
}

double FreqVector::norm(int side) const {
  double s = 0.0;
  for (int v : k_) {
    int m = ((v % side) + side) % side;
    if (2 * m > side) m -= side;
    const double xi = 2.0 * std::numbers::pi * m / side;
    s += xi * xi;
  }
  return std::sqrt(s);
}

FreqVector FreqVector::negated(int side) const {
  std::vector<int> out(k_.size());
  for (std::size_t j = 0; j < k_.size(); ++j) out[j] = (side - k_[j] % side) % side;
  return FreqVector(std::move(out));
}

std::size_t FreqVector::index(const TorusGrid& grid) const { return grid.index(k_); }

FreqVector frequency_of(const TorusGrid& grid, std::size_t index) {
  return FreqVector(grid.coords(index));
}

ScalarField::ScalarField(TorusGrid grid) : grid_(grid), values_(grid.sites()) {}

ScalarField::ScalarField(TorusGrid grid, std::vector<cplx> values)
    : grid_(grid), values_(std::move(values)) {
  if (values_.size() != grid_.sites())
    throw Error(ErrorCode::InvalidArgument, "field length does not match lattice size");
}

cplx ScalarField::mean() const {
  cplx s = 0.0;
  for (const auto& v : values_) s += v;
  return s / static_cast<double>(values_.size());
}

double ScalarField::max_abs() const {
  double m = 0.0;
  for (const auto& v : values_) m = std::max(m, std::abs(v));
  return m;
}

bool ScalarField::is_mean_zero(double rel_tol) const {
  return std::abs(mean()) <= rel_tol * std::max(max_abs(), 1e-300);
}

VectorField::VectorField(TorusGrid grid)
    : grid_(grid), data_(grid.sites() * static_cast<std::size_t>(grid.dim())) {}

VectorField::VectorField(TorusGrid grid, std::vector<cplx> data) : grid_(grid), data_(std::move(data)) {
  if (data_.size() != grid_.sites() * static_cast<std::size_t>(grid_.dim()))
    throw Error(ErrorCode::InvalidArgument, "vector field length does not match d * N");
}

std::span<cplx> VectorField::component(int j) noexcept {
  return std::span<cplx>(data_).subspan(static_cast<std::size_t>(j) * grid_.sites(), grid_.sites());
}

std::span<const cplx> VectorField::component(int j) const noexcept {
  return std::span<const cplx>(data_).subspan(static_cast<std::size_t>(j) * grid_.sites(),
                                              grid_.sites());
}

cplx inner(std::span<const cplx> a, std::span<const cplx> b) {
  cplx s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::conj(a[i]) * b[i];
  return s;
}

double norm2(std::span<const cplx> a) { return std::sqrt(std::real(inner(a, a))); }

ScalarField plane_wave(const TorusGrid& grid, const FreqVector& k) {
  ScalarField f(grid);
  for (std::size_t x = 0; x < grid.sites(); ++x) {
    // Reduce k.x mod L in integers before taking the angle.
    long phase = 0;
    for (int j = 0; j < grid.dim(); ++j)
      phase += static_cast<long>(k.k()[static_cast<std::size_t>(j)]) * grid.coord(x, j);
    phase %= grid.side();
    const double a = 2.0 * std::numbers::pi * static_cast<double>(phase) / grid.side();
    f[x] = {std::cos(a), std::sin(a)};
  }
  return f;
}

ScalarField delta_field(const TorusGrid& grid, std::size_t site) {
  ScalarField f(grid);
  f[site] = 1.0;
  return f;
}

VectorField grad(const ScalarField& f) {
  const auto& grid = f.grid();
  VectorField g(grid);
  for (int j = 0; j < grid.dim(); ++j) {
    auto out = g.component(j);
    for (std::size_t x = 0; x < grid.sites(); ++x) out[x] = f[grid.shift(x, j, 1)] - f[x];
  }
  return g;
}

ScalarField grad_adjoint(const VectorField& g) {
  const auto& grid = g.grid();
  ScalarField f(grid);
  for (int j = 0; j < grid.dim(); ++j) {
    auto in = g.component(j);
    for (std::size_t x = 0; x < grid.sites(); ++x) f[x] += in[grid.shift(x, j, -1)] - in[x];
  }
  return f;
}

ScalarField neg_laplacian(const ScalarField& f) { return grad_adjoint(grad(f)); }

double laplacian_symbol(const FreqVector& k, int side) {
  double s = 0.0;
  for (int j = 0; j < k.dim(); ++j) s += 2.0 * (1.0 - std::cos(k.angle(j, side)));
  return s;
}

std::vector<cplx> dft(const ScalarField& f) {
  std::vector<cplx> out(f.values().begin(), f.values().end());
  dft_inplace(f.grid(), out);
  return out;
}

ScalarField idft(const TorusGrid& grid, std::vector<cplx> spectrum) {
  idft_inplace(grid, spectrum);
  return ScalarField(grid, std::move(spectrum));
}

std::vector<cplx> dft(const VectorField& g) {
  std::vector<cplx> out(g.data().begin(), g.data().end());
  const auto n = g.grid().sites();
  for (int j = 0; j < g.grid().dim(); ++j)
    dft_inplace(g.grid(), std::span<cplx>(out).subspan(static_cast<std::size_t>(j) * n, n));
  return out;
}

VectorField idft_vector(const TorusGrid& grid, std::vector<cplx> spectrum) {
  const auto n = grid.sites();
  for (int j = 0; j < grid.dim(); ++j)
    idft_inplace(grid, std::span<cplx>(spectrum).subspan(static_cast<std::size_t>(j) * n, n));
  return VectorField(grid, std::move(spectrum));
}

void write_field_csv(std::ostream& out, const ScalarField& f) {
  const auto& grid = f.grid();
  std::vector<std::string> header;
  for (int j = 0; j < grid.dim(); ++j) header.push_back("x_" + std::to_string(j));
  header.insert(header.end(), {"re", "im"});
  write_row(out, header);
  for (std::size_t x = 0; x < grid.sites(); ++x) {
    std::vector<std::string> row;
    for (int j = 0; j < grid.dim(); ++j) row.push_back(std::to_string(grid.coord(x, j)));
    row.push_back(format_double(f[x].real()));
    row.push_back(format_double(f[x].imag()));
    write_row(out, row);
  }
}

ScalarField read_field_csv(std::istream& in, const TorusGrid& grid) {
  const CsvTable table = read_csv(in);
  if (table.rows.size() != grid.sites())
    throw Error(ErrorCode::IoError, "field csv has wrong number of rows");
  ScalarField f(grid);
  std::vector<int> x(static_cast<std::size_t>(grid.dim()));
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    for (int j = 0; j < grid.dim(); ++j)
      x[static_cast<std::size_t>(j)] = static_cast<int>(table.number(r, "x_" + std::to_string(j)));
    f[grid.index(x)] = {table.number(r, "re"), table.number(r, "im")};
  }
  return f;
}

}  // namespace homlab
