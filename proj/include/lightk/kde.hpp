#pragma once

#include <span>
#include <vector>

namespace lightk {

/// One-dimensional Gaussian kernel density estimate.
///
/// Bandwidth follows Scott's rule, h = sigma * m^(-1/5) with the sample
/// standard deviation sigma, floored at 1e-3 * max(1, |mean|). Queries return
/// max(kde(x), density_floor). Samples are kept sorted so each query only
/// visits kernels within `kCutoff` bandwidths.
class KdeModel {
 public:
  static constexpr double kDensityFloor = 1e-12;
  static constexpr double kCutoff = 9.0;

  /// Throws ArgumentError for fewer than two samples. Identical samples
  /// produce a model flagged `degenerate()` that still answers queries with
  /// the floored bandwidth.
  static KdeModel fit(std::span<const double> samples);

  double bandwidth() const noexcept { return bandwidth_; }
  bool degenerate() const noexcept { return degenerate_; }
  double mean() const noexcept { return mean_; }
  double min() const noexcept { return sorted_.front(); }
  double max() const noexcept { return sorted_.back(); }
  std::size_t sample_count() const noexcept { return sorted_.size(); }

  double density(double x) const;
  /// Densities at ascending query points (linear sweep over samples).
  std::vector<double> density_sorted(std::span<const double> xs) const;

 private:
  std::vector<double> sorted_;
  double bandwidth_ = 1.0;
  double mean_ = 0.0;
  bool degenerate_ = false;
};

inline KdeModel fit_kde(std::span<const double> samples) { return KdeModel::fit(samples); }

/// KL(p || q) by trapezoid integration on a uniform grid spanning the union
/// of both supports extended by `pad_bandwidths` bandwidths. Both densities
/// are renormalized on the grid and floored at KdeModel::kDensityFloor.
double kl_divergence(const KdeModel& p, const KdeModel& q, int grid_points = 512,
                     double pad_bandwidths = 3.0);

}  // namespace lightk
