#include "lightk/kde.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "lightk/errors.hpp"

namespace lightk {

KdeModel KdeModel::fit(std::span<const double> samples) {
  if (samples.size() < 2) throw ArgumentError("fit_kde: need at least 2 samples");
  KdeModel model;
  model.sorted_.assign(samples.begin(), samples.end());
  std::sort(model.sorted_.begin(), model.sorted_.end());

  const auto m = static_cast<double>(samples.size());
  model.mean_ = std::accumulate(samples.begin(), samples.end(), 0.0) / m;
  double ss = 0.0;
  for (double s : samples) ss += (s - model.mean_) * (s - model.mean_);
  const double sigma = std::sqrt(ss / (m - 1.0));

  model.degenerate_ = model.sorted_.front() == model.sorted_.back();
  const double floor = 1e-3 * std::max(1.0, std::abs(model.mean_));
  model.bandwidth_ = std::max(sigma * std::pow(m, -0.2), floor);
  return model;
}

double KdeModel::density(double x) const {
  const double h = bandwidth_;
  const auto lo = std::lower_bound(sorted_.begin(), sorted_.end(), x - kCutoff * h);
  const auto hi = std::upper_bound(lo, sorted_.end(), x + kCutoff * h);
  double sum = 0.0;
  for (auto it = lo; it != hi; ++it) {
    const double u = (x - *it) / h;
    sum += std::exp(-0.5 * u * u);
  }
  const double norm = 1.0 / (static_cast<double>(sorted_.size()) * h * std::sqrt(2.0 * std::numbers::pi));
  return std::max(sum * norm, kDensityFloor);
}

std::vector<double> KdeModel::density_sorted(std::span<const double> xs) const {
  const double h = bandwidth_;
  const double norm = 1.0 / (static_cast<double>(sorted_.size()) * h * std::sqrt(2.0 * std::numbers::pi));
  std::vector<double> out(xs.size());
  std::size_t lo = 0;
  std::size_t hi = 0;
  const std::size_t m = sorted_.size();
  for (std::size_t q = 0; q < xs.size(); ++q) {
    const double x = xs[q];
    while (lo < m && sorted_[lo] < x - kCutoff * h) ++lo;
    if (hi < lo) hi = lo;
    while (hi < m && sorted_[hi] <= x + kCutoff * h) ++hi;
    double sum = 0.0;
    for (std::size_t s = lo; s < hi; ++s) {
      const double u = (x - sorted_[s]) / h;
      sum += std::exp(-0.5 * u * u);
    }
    out[q] = std::max(sum * norm, kDensityFloor);
  }
  return out;
}

namespace {

double trapezoid(std::span<const double> y, double dx) {
  if (y.size() < 2) return 0.0;
  double s = 0.5 * (y.front() + y.back());
  for (std::size_t i = 1; i + 1 < y.size(); ++i) s += y[i];
  return s * dx;
}

}  // namespace

double kl_divergence(const KdeModel& p, const KdeModel& q, int grid_points, double pad_bandwidths) {
  if (grid_points < 2) throw ArgumentError("kl_divergence: need at least 2 grid points");
  const double pad = pad_bandwidths * std::max(p.bandwidth(), q.bandwidth());
  const double lo = std::min(p.min(), q.min()) - pad;
  const double hi = std::max(p.max(), q.max()) + pad;
  const double dx = (hi - lo) / static_cast<double>(grid_points - 1);

  std::vector<double> grid(static_cast<std::size_t>(grid_points));
  for (std::size_t i = 0; i < grid.size(); ++i) grid[i] = lo + dx * static_cast<double>(i);

  auto pd = p.density_sorted(grid);
  auto qd = q.density_sorted(grid);
  const double zp = trapezoid(pd, dx);
  const double zq = trapezoid(qd, dx);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    pd[i] = std::max(pd[i] / zp, KdeModel::kDensityFloor);
    qd[i] = std::max(qd[i] / zq, KdeModel::kDensityFloor);
  }
  std::vector<double> integrand(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) integrand[i] = pd[i] * std::log(pd[i] / qd[i]);
  return trapezoid(integrand, dx);
}

}  // namespace lightk
