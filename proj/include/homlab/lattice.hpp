#pragma once

#include <complex>
#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

namespace homlab {

using cplx = std::complex<double>;

/// Periodic cubic lattice (Z/L)^d. Sites are numbered row-major with x_0 the
/// slowest coordinate, which is also the layout FFTW expects.
class TorusGrid {
 public:
  TorusGrid(int dim, int side);

  int dim() const noexcept { return dim_; }
  int side() const noexcept { return side_; }
  std::size_t sites() const noexcept { return sites_; }

  std::size_t index(std::span<const int> coords) const;
  std::vector<int> coords(std::size_t index) const;
  int coord(std::size_t index, int axis) const noexcept {
    return static_cast<int>((index / strides_[static_cast<std::size_t>(axis)]) %
                            static_cast<std::size_t>(side_));
  }
  /// Site reached from `index` by `step` unit moves along `axis`, mod L.
  std::size_t shift(std::size_t index, int axis, int step) const noexcept;
  /// Translation of `index` by the coordinates of `by`.
  std::size_t translate(std::size_t index, std::size_t by) const noexcept;
  /// Euclidean length of the minimal-image displacement between two sites.
  double distance(std::size_t a, std::size_t b) const noexcept;

  friend bool operator==(const TorusGrid& a, const TorusGrid& b) noexcept {
    return a.dim_ == b.dim_ && a.side_ == b.side_;
  }

 private:
  int dim_;
  int side_;
  std::size_t sites_;
  std::vector<std::size_t> strides_;
};

/// Integer frequency k in {0..L-1}^d with angle xi_j = 2 pi k_j / L.
class FreqVector {
 public:
  FreqVector() = default;
  explicit FreqVector(std::vector<int> k) : k_(std::move(k)) {}

  const std::vector<int>& k() const noexcept { return k_; }
  int dim() const noexcept { return static_cast<int>(k_.size()); }
  bool is_zero() const noexcept;

  double angle(int axis, int side) const;
  /// q_j = e^{i xi_j} - 1, the forward-difference multiplier.
  cplx q(int axis, int side) const;
  std::vector<cplx> q_vector(int side) const;
  /// |xi| for the representative of xi in (-pi, pi]^d.
  double norm(int side) const;
  FreqVector negated(int side) const;
  std::size_t index(const TorusGrid& grid) const;

  friend bool operator==(const FreqVector& a, const FreqVector& b) noexcept {
    return a.k_ == b.k_;
  }

 private:
  std::vector<int> k_;
};

FreqVector frequency_of(const TorusGrid& grid, std::size_t index);

class ScalarField {
 public:
  explicit ScalarField(TorusGrid grid);
  ScalarField(TorusGrid grid, std::vector<cplx> values);

  const TorusGrid& grid() const noexcept { return grid_; }
  std::span<cplx> values() noexcept { return values_; }
  std::span<const cplx> values() const noexcept { return values_; }
  cplx& operator[](std::size_t i) noexcept { return values_[i]; }
  const cplx& operator[](std::size_t i) const noexcept { return values_[i]; }

  cplx mean() const;
  double max_abs() const;
  /// Mean below `rel_tol` times the largest entry.
  bool is_mean_zero(double rel_tol = 1e-12) const;

 private:
  TorusGrid grid_;
  std::vector<cplx> values_;
};

/// d complex components per site, stored component-major so each component
/// is a contiguous length-N block.
class VectorField {
 public:
  explicit VectorField(TorusGrid grid);
  VectorField(TorusGrid grid, std::vector<cplx> data);

  const TorusGrid& grid() const noexcept { return grid_; }
  std::span<cplx> component(int j) noexcept;
  std::span<const cplx> component(int j) const noexcept;
  std::span<cplx> data() noexcept { return data_; }
  std::span<const cplx> data() const noexcept { return data_; }
  cplx& at(int j, std::size_t site) noexcept { return data_[static_cast<std::size_t>(j) * grid_.sites() + site]; }
  const cplx& at(int j, std::size_t site) const noexcept {
    return data_[static_cast<std::size_t>(j) * grid_.sites() + site];
  }

 private:
  TorusGrid grid_;
  std::vector<cplx> data_;
};

cplx inner(std::span<const cplx> a, std::span<const cplx> b);
/// Euclidean norm sqrt(<a, a>).
double norm2(std::span<const cplx> a);

ScalarField plane_wave(const TorusGrid& grid, const FreqVector& k);
ScalarField delta_field(const TorusGrid& grid, std::size_t site);

VectorField grad(const ScalarField& f);
ScalarField grad_adjoint(const VectorField& g);
/// -Delta by stencil, i.e. grad_adjoint(grad f).
ScalarField neg_laplacian(const ScalarField& f);

double laplacian_symbol(const FreqVector& k, int side);

// Unnormalized forward transform; the inverse carries 1/N.
void dft_inplace(const TorusGrid& grid, std::span<cplx> data);
void idft_inplace(const TorusGrid& grid, std::span<cplx> data);
std::vector<cplx> dft(const ScalarField& f);
ScalarField idft(const TorusGrid& grid, std::vector<cplx> spectrum);
std::vector<cplx> dft(const VectorField& g);
VectorField idft_vector(const TorusGrid& grid, std::vector<cplx> spectrum);

/// Columns x_0..x_{d-1},re,im with a header row, lexicographic site order.
void write_field_csv(std::ostream& out, const ScalarField& f);
ScalarField read_field_csv(std::istream& in, const TorusGrid& grid);

}  // namespace homlab
