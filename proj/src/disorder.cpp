#include "homlab/disorder.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "homlab/error.hpp"
#include "homlab/io.hpp"
#include "homlab/parallel.hpp"

namespace homlab {

DistributionSpec::DistributionSpec(DistributionKind kind, double a, double p, double vp, double vm)
    : kind_(kind), a_(a), p_(p), v_plus_(vp), v_minus_(vm) {
  switch (kind_) {
    case DistributionKind::Rademacher:
      bound_ = 1.0;
      variance_ = 1.0;
      break;
    case DistributionKind::UniformSymmetric:
      if (!(a_ > 0.0) || !std::isfinite(a_))
        throw Error(ErrorCode::InvalidSpec, "uniform half-width must be positive and finite");
      bound_ = a_;
      variance_ = a_ * a_ / 3.0;
      break;
    case DistributionKind::TwoPoint: {
      if (!(p_ > 0.0 && p_ < 1.0)) throw Error(ErrorCode::InvalidSpec, "two-point probability must lie in (0,1)");
      if (!std::isfinite(v_plus_) || !std::isfinite(v_minus_))
        throw Error(ErrorCode::InvalidSpec, "two-point support must be finite");
      bound_ = std::max(std::abs(v_plus_), std::abs(v_minus_));
      const double mean = p_ * v_plus_ + (1.0 - p_) * v_minus_;
      if (std::abs(mean) > 1e-12 * std::max(bound_, 1.0))
        throw Error(ErrorCode::InvalidSpec, "two-point law has nonzero mean " + format_double(mean));
      variance_ = p_ * v_plus_ * v_plus_ + (1.0 - p_) * v_minus_ * v_minus_;
      if (!(variance_ > 0.0)) throw Error(ErrorCode::InvalidSpec, "two-point law is degenerate");
      break;
    }
  }
}

DistributionSpec DistributionSpec::rademacher() {
  return DistributionSpec(DistributionKind::Rademacher, 0, 0, 0, 0);
}

DistributionSpec DistributionSpec::uniform_symmetric(double half_width) {
  return DistributionSpec(DistributionKind::UniformSymmetric, half_width, 0, 0, 0);
}

DistributionSpec DistributionSpec::two_point(double p, double v_plus, double v_minus) {
  return DistributionSpec(DistributionKind::TwoPoint, 0, p, v_plus, v_minus);
}

bool DistributionSpec::symmetric() const noexcept {
  if (kind_ != DistributionKind::TwoPoint) return true;
  return p_ == 0.5 && v_plus_ == -v_minus_;
}

std::vector<Atom> DistributionSpec::atoms() const {
  switch (kind_) {
    case DistributionKind::Rademacher: return {{-1.0, 0.5}, {1.0, 0.5}};
    case DistributionKind::TwoPoint: return {{v_minus_, 1.0 - p_}, {v_plus_, p_}};
    case DistributionKind::UniformSymmetric: return {};
  }
  return {};
}

std::string DistributionSpec::describe() const {
  switch (kind_) {
    case DistributionKind::Rademacher: return "rademacher";
    case DistributionKind::UniformSymmetric: return "uniform(" + format_double(a_) + ")";
    case DistributionKind::TwoPoint:
      return "two_point(" + format_double(p_) + ";" + format_double(v_plus_) + ";" + format_double(v_minus_) + ")";
  }
  return "?";
}

double DistributionSpec::draw(std::uint64_t bits) const noexcept {
  // 53 high bits -> uniform in [0, 1).
  const double u = static_cast<double>(bits >> 11) * 0x1.0p-53;
  switch (kind_) {
    case DistributionKind::Rademacher: return (bits >> 63) ? 1.0 : -1.0;
    case DistributionKind::UniformSymmetric: return a_ * (2.0 * u - 1.0);
    case DistributionKind::TwoPoint: return u < p_ ? v_plus_ : v_minus_;
  }
  return 0.0;
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  // splitmix64 finalizer over a Weyl step indexed by the sample number.
  std::uint64_t z = master + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

DisorderSample sample_sigma(const TorusGrid& grid, const DistributionSpec& spec, std::uint64_t seed) {
  std::mt19937_64 engine(seed);
  std::vector<double> sigma(grid.sites());
  for (auto& s : sigma) s = spec.draw(engine());
  return DisorderSample(grid, std::move(sigma), spec.bound());
}

Ensemble make_ensemble(const TorusGrid& grid, const DistributionSpec& spec, std::size_t count,
                       std::uint64_t master_seed, int workers) {
  if (count < 2) throw Error(ErrorCode::EnsembleTooSmall, "an ensemble needs at least 2 samples");
  std::vector<std::optional<DisorderSample>> slots(count);
  parallel_for(count, workers, [&](std::size_t m) {
    slots[m].emplace(sample_sigma(grid, spec, derive_seed(master_seed, m)));
  });
  Ensemble e{grid, spec, {}, std::vector<double>(count, 1.0 / static_cast<double>(count)), false, master_seed};
  e.samples.reserve(count);
  for (auto& s : slots) e.samples.push_back(std::move(*s));
  return e;
}

Ensemble ensemble_from_samples(const TorusGrid& grid, std::vector<DisorderSample> samples) {
  if (samples.size() < 2) throw Error(ErrorCode::EnsembleTooSmall, "an ensemble needs at least 2 samples");
  for (const auto& s : samples)
    if (!(s.grid == grid)) throw Error(ErrorCode::InvalidArgument, "sample grid mismatch");
  const double w = 1.0 / static_cast<double>(samples.size());
  Ensemble e{grid, std::nullopt, std::move(samples), {}, false, 0};
  e.weights.assign(e.samples.size(), w);
  return e;
}

Ensemble enumerate_ensemble(const TorusGrid& grid, const DistributionSpec& spec, std::size_t cap) {
  const auto atoms = spec.atoms();
  if (atoms.empty()) throw Error(ErrorCode::InvalidSpec, "exhaustive enumeration needs a finite-support law");
  const std::size_t n = grid.sites();
  std::size_t total = 1;
  for (std::size_t x = 0; x < n; ++x) {
    if (total > cap / atoms.size()) throw Error(ErrorCode::TooLarge, "configuration count exceeds cap");
    total *= atoms.size();
  }
  Ensemble e{grid, spec, {}, {}, true, 0};
  e.samples.reserve(total);
  e.weights.reserve(total);
  std::vector<double> sigma(n);
  for (std::size_t c = 0; c < total; ++c) {
    std::size_t rest = c;
    double w = 1.0;
    // Site 0 is the most significant digit.
    for (std::size_t x = n; x-- > 0;) {
      const auto& a = atoms[rest % atoms.size()];
      rest /= atoms.size();
      sigma[x] = a.value;
      w *= a.probability;
    }
    e.samples.emplace_back(grid, sigma, spec.bound());
    e.weights.push_back(w);
  }
  return e;
}

void center_stage(std::span<cplx> stacked, std::size_t count, std::size_t stride,
                  std::span<const double> weights, int workers) {
  if (count < 2) throw Error(ErrorCode::EnsembleTooSmall, "centering needs at least 2 samples");
  if (stacked.size() != count * stride || weights.size() != count)
    throw Error(ErrorCode::InvalidArgument, "centering input has wrong shape");
  constexpr std::size_t kBlock = 256;
  const std::size_t blocks = (stride + kBlock - 1) / kBlock;
  parallel_for(blocks, workers, [&](std::size_t b) {
    const std::size_t lo = b * kBlock;
    const std::size_t hi = std::min(stride, lo + kBlock);
    for (std::size_t i = lo; i < hi; ++i) {
      cplx mean = 0.0;
      for (std::size_t m = 0; m < count; ++m) mean += weights[m] * stacked[m * stride + i];
      for (std::size_t m = 0; m < count; ++m) stacked[m * stride + i] -= mean;
    }
  });
}

namespace {

template <class Field>
std::vector<Field> center_fields(std::vector<Field> fields) {
  if (fields.size() < 2) throw Error(ErrorCode::EnsembleTooSmall, "centering needs at least 2 samples");
  const auto stride = fields.front().data().size();
  std::vector<cplx> stacked;
  stacked.reserve(fields.size() * stride);
  for (const auto& f : fields) {
    if (f.data().size() != stride) throw Error(ErrorCode::InvalidArgument, "fields differ in shape");
    stacked.insert(stacked.end(), f.data().begin(), f.data().end());
  }
  std::vector<double> w(fields.size(), 1.0 / static_cast<double>(fields.size()));
  center_stage(stacked, fields.size(), stride, w);
  for (std::size_t m = 0; m < fields.size(); ++m)
    std::copy_n(stacked.begin() + static_cast<std::ptrdiff_t>(m * stride), stride, fields[m].data().begin());
  return fields;
}

// ScalarField exposes values(); give it the same face as VectorField here.
struct ScalarAdapter {
  ScalarField field;
  std::span<cplx> data() { return field.values(); }
  std::span<const cplx> data() const { return field.values(); }
};

}  // namespace

std::vector<ScalarField> center_stage(std::vector<ScalarField> fields) {
  std::vector<ScalarAdapter> wrapped;
  wrapped.reserve(fields.size());
  for (auto& f : fields) wrapped.push_back({std::move(f)});
  wrapped = center_fields(std::move(wrapped));
  std::vector<ScalarField> out;
  out.reserve(wrapped.size());
  for (auto& w : wrapped) out.push_back(std::move(w.field));
  return out;
}

std::vector<VectorField> center_stage(std::vector<VectorField> fields) {
  return center_fields(std::move(fields));
}

}  // namespace homlab
