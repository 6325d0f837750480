#include "lightk/kinfo.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>
#include <random>

#include "lightk/errors.hpp"
#include "lightk/kde.hpp"

namespace lightk {

EntropyTable::EntropyTable(int k_max, std::size_t channels, std::vector<NodeRef> rows,
                           std::vector<bool> degenerate)
    : k_max_(k_max),
      channels_(channels),
      rows_(std::move(rows)),
      degenerate_(std::move(degenerate)),
      h_(rows_.size() * channels_ * static_cast<std::size_t>(k_max + 1), 0.0),
      sizes_(rows_.size() * static_cast<std::size_t>(k_max + 1), 0) {}

std::size_t EntropyTable::informative_channels() const {
  return static_cast<std::size_t>(std::count(degenerate_.begin(), degenerate_.end(), false));
}

std::vector<double> EntropyTable::samples(std::size_t c, int k) const {
  std::vector<double> out(rows_.size());
  for (std::size_t r = 0; r < rows_.size(); ++r) out[r] = at(r, c, k);
  return out;
}

namespace {

// -sum p log p with p = g / sum(g).
double normalized_entropy(std::span<const double> g) {
  if (g.size() <= 1) return 0.0;
  const double total = std::accumulate(g.begin(), g.end(), 0.0);
  double h = 0.0;
  for (double v : g) {
    const double p = v / total;
    if (p > 0.0) h -= p * std::log(p);
  }
  return std::max(h, 0.0);
}

std::vector<EntropyTable::NodeRef> pick_rows(const Dataset& ds, const KinfoOptions& options) {
  std::vector<EntropyTable::NodeRef> all;
  all.reserve(ds.total_nodes());
  for (std::size_t g = 0; g < ds.graphs.size(); ++g) {
    for (std::size_t i = 0; i < ds.graphs[g].num_nodes(); ++i) {
      all.push_back({static_cast<std::uint32_t>(g), static_cast<NodeId>(i)});
    }
  }
  if (options.node_cap == 0 || all.size() <= options.node_cap) return all;
  std::vector<std::size_t> order(all.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(options.seed);
  std::shuffle(order.begin(), order.end(), rng);
  order.resize(options.node_cap);
  std::sort(order.begin(), order.end());
  std::vector<EntropyTable::NodeRef> picked;
  picked.reserve(order.size());
  for (std::size_t idx : order) picked.push_back(all[idx]);
  return picked;
}

}  // namespace

EntropyTable local_entropy(const Dataset& ds, int k_max, const KinfoOptions& options) {
  if (k_max < 1) throw ArgumentError("local_entropy: k_max must be >= 1");
  const std::size_t d = ds.num_features;
  const std::size_t total = ds.total_nodes();
  if (total < 2) throw ArgumentError("local_entropy: dataset needs at least 2 nodes");

  // Global density of every node's value, per channel: density[g][node * d + c].
  std::vector<bool> degenerate(d, false);
  std::vector<std::vector<double>> density(ds.graphs.size());
  for (std::size_t g = 0; g < ds.graphs.size(); ++g) density[g].resize(ds.graphs[g].num_nodes() * d);

  std::vector<double> column(total);
  for (std::size_t c = 0; c < d; ++c) {
    std::size_t pos = 0;
    for (const auto& graph : ds.graphs) {
      for (Eigen::Index i = 0; i < graph.features().rows(); ++i) {
        column[pos++] = graph.features()(i, static_cast<Eigen::Index>(c));
      }
    }
    const KdeModel kde = KdeModel::fit(column);
    degenerate[c] = kde.degenerate();
    if (degenerate[c]) continue;

    std::vector<double> unique = column;
    std::sort(unique.begin(), unique.end());
    unique.erase(std::unique(unique.begin(), unique.end()), unique.end());
    const std::vector<double> unique_density = kde.density_sorted(unique);
    for (std::size_t g = 0; g < ds.graphs.size(); ++g) {
      const Matrix& x = ds.graphs[g].features();
      for (Eigen::Index i = 0; i < x.rows(); ++i) {
        const double v = x(i, static_cast<Eigen::Index>(c));
        const auto it = std::lower_bound(unique.begin(), unique.end(), v);
        density[g][static_cast<std::size_t>(i) * d + c] =
            unique_density[static_cast<std::size_t>(it - unique.begin())];
      }
    }
  }

  EntropyTable table(k_max, d, pick_rows(ds, options), degenerate);
  std::vector<std::vector<double>> members(d);
  std::vector<std::vector<double>> seen_values(d);
  for (std::size_t r = 0; r < table.rows(); ++r) {
    const auto ref = table.row_refs()[r];
    const Graph& graph = ds.graphs[ref.graph];
    const auto shells = hop_shells(graph, ref.node, k_max);
    const auto& dens = density[ref.graph];
    for (auto& m : members) m.clear();
    for (auto& s : seen_values) s.clear();
    std::size_t count = 0;
    for (int k = 0; k <= k_max; ++k) {
      const auto& shell = shells[static_cast<std::size_t>(k)];
      count += shell.size();
      table.neighborhood_size(r, k) = count;
      for (std::size_t c = 0; c < d; ++c) {
        if (degenerate[c]) continue;
        if (shell.empty() && k > 0) {
          // Saturated neighborhood: the multiset did not change.
          table.at(r, c, k) = table.at(r, c, k - 1);
          continue;
        }
        for (NodeId v : shell) {
          if (options.distinct_values) {
            const double value = graph.features()(v, static_cast<Eigen::Index>(c));
            auto& seen = seen_values[c];
            const auto pos = std::lower_bound(seen.begin(), seen.end(), value);
            if (pos != seen.end() && *pos == value) continue;
            seen.insert(pos, value);
          }
          members[c].push_back(dens[static_cast<std::size_t>(v) * d + c]);
        }
        table.at(r, c, k) = normalized_entropy(members[c]);
      }
    }
  }
  return table;
}

IgCurve ig_curve(const EntropyTable& table, int k_max) {
  if (k_max < 1 || k_max > table.k_max()) {
    throw ArgumentError("ig_curve: k_max must lie in 1.." + std::to_string(table.k_max()));
  }
  if (table.informative_channels() == 0) throw ArgumentError("dataset has constant features");

  IgCurve curve;
  curve.ig.assign(static_cast<std::size_t>(k_max) + 1, 0.0);
  for (std::size_t c = 0; c < table.channels(); ++c) {
    if (table.degenerate(c)) continue;
    curve.channels.push_back(c);
    std::vector<double> kl(static_cast<std::size_t>(k_max) + 1, 0.0);
    KdeModel previous = KdeModel::fit(table.samples(c, 0));
    for (int k = 1; k <= k_max; ++k) {
      KdeModel current = KdeModel::fit(table.samples(c, k));
      kl[static_cast<std::size_t>(k)] = std::max(kl_divergence(current, previous), 0.0);
      previous = std::move(current);
    }
    curve.channel_kl.push_back(std::move(kl));
  }
  const auto channels = static_cast<double>(curve.channels.size());
  for (int k = 1; k <= k_max; ++k) {
    double sum = 0.0;
    for (const auto& kl : curve.channel_kl) sum += kl[static_cast<std::size_t>(k)];
    curve.ig[static_cast<std::size_t>(k)] = sum / channels;
  }
  return curve;
}

ExpFit fit_exponential(const IgCurve& curve, int k_lo, int k_hi) {
  std::vector<double> ks;
  std::vector<double> ys;
  ExpFit fit;
  for (int k = std::max(k_lo, 0); k <= std::min(k_hi, curve.k_max()); ++k) {
    const double v = curve.ig[static_cast<std::size_t>(k)];
    if (!(v > 0.0)) {
      std::clog << "warning: fit_exponential: skipping k=" << k << " (IG=" << v << ")\n";
      continue;
    }
    ks.push_back(k);
    ys.push_back(v);
    fit.used_k.push_back(k);
  }
  if (ks.size() < 3) {
    throw FitError("fit_exponential: need at least 3 positive IG points, found " +
                   std::to_string(ks.size()));
  }
  const auto m = static_cast<double>(ks.size());
  const double mean_k = std::accumulate(ks.begin(), ks.end(), 0.0) / m;
  double mean_log = 0.0;
  for (double y : ys) mean_log += std::log(y);
  mean_log /= m;
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < ks.size(); ++i) {
    sxy += (ks[i] - mean_k) * (std::log(ys[i]) - mean_log);
    sxx += (ks[i] - mean_k) * (ks[i] - mean_k);
  }
  const double slope = sxy / sxx;
  fit.b = -slope;
  fit.a = std::exp(mean_log - slope * mean_k);

  const double mean_y = std::accumulate(ys.begin(), ys.end(), 0.0) / m;
  double ss_res = 0.0;
  double ss_tot = 0.0;
  for (std::size_t i = 0; i < ks.size(); ++i) {
    const double r = ys[i] - fit.a * std::exp(-fit.b * ks[i]);
    ss_res += r * r;
    ss_tot += (ys[i] - mean_y) * (ys[i] - mean_y);
  }
  fit.mse = ss_res / m;
  fit.r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : (ss_res == 0.0 ? 1.0 : 0.0);
  return fit;
}

KSelection select_k(double b, double epsilon) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw ArgumentError("select_k: epsilon must lie in (0, 1)");
  if (!(b > 0.0)) throw ArgumentError("select_k: decay rate b must be positive");
  // The 1e-12 slack keeps exact boundary cases (exp(-b k) == epsilon) at k.
  int k = static_cast<int>(std::ceil(std::log(1.0 / epsilon) / b - 1e-12));
  k = std::max(k, 1);
  return {k, std::exp(-b * k)};
}

void write_ig_csv(std::ostream& out, const IgCurve& curve) {
  const auto old = out.precision(17);
  out << "k,ig\n";
  for (std::size_t k = 0; k < curve.ig.size(); ++k) out << k << ',' << curve.ig[k] << '\n';
  out.precision(old);
}

void write_fit_csv(std::ostream& out, const std::string& dataset, const ExpFit& fit,
                   const KSelection& sel, double epsilon) {
  const auto old = out.precision(17);
  out << "dataset,a,b,r2,mse,k_hat,epsilon,loss_achieved\n";
  out << dataset << ',' << fit.a << ',' << fit.b << ',' << fit.r2 << ',' << fit.mse << ','
      << sel.k_hat << ',' << epsilon << ',' << sel.loss << '\n';
  out.precision(old);
}

}  // namespace lightk
