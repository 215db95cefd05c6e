#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>

#include "safegame/kernels.h"

namespace safegame::kernels {
namespace {

std::atomic<Backend> g_backend{Backend::kOpenMP};

}  // namespace

Backend default_backend() { return g_backend.load(); }
void set_default_backend(Backend b) { g_backend.store(b); }

void map_indices(Backend b, std::size_t n,
                 const std::function<void(std::size_t)>& body) {
  if (b == Backend::kSerial) {
    serial::map_indices(n, body);
  } else {
    omp::map_indices(n, body);
  }
}

void backup(Backend b, const BackupInput& in, BackupOutput& out) {
  if (b == Backend::kSerial) {
    serial::backup(in, out);
  } else {
    omp::backup(in, out);
  }
}

namespace detail {

double interpolate(const game::StateGrid& grid, const std::vector<double>& v,
                   int layers, int layer, const double* x) {
  const std::size_t d = grid.dim();
  // Per axis: lower node index and weight of the upper node.
  int lower[8];
  double frac[8];
  for (std::size_t a = 0; a < d; ++a) {
    const auto& iv = grid.box()[a];
    const double slack = 1e-12 * iv.width();
    if (!(x[a] >= iv.lo - slack && x[a] <= iv.hi + slack)) return 0.0;
    const int pts = grid.points()[a];
    double t = (x[a] - iv.lo) / grid.spacing(a);
    t = std::clamp(t, 0.0, static_cast<double>(pts - 1));
    int i = static_cast<int>(std::floor(t));
    if (i >= pts - 1) i = pts - 2;
    lower[a] = i;
    frac[a] = t - i;
  }
  double acc = 0.0;
  int idx[8];
  for (unsigned corner = 0; corner < (1u << d); ++corner) {
    double w = 1.0;
    for (std::size_t a = 0; a < d; ++a) {
      const bool up = (corner >> a) & 1u;
      idx[a] = lower[a] + (up ? 1 : 0);
      w *= up ? frac[a] : 1.0 - frac[a];
    }
    if (w == 0.0) continue;
    const std::size_t node = grid.flat(std::span<const int>(idx, d));
    acc += w * v[node * layers + layer];
  }
  return acc;
}

void prepare(const BackupInput& in, BackupOutput& out) {
  const std::size_t items = in.grid->size() * in.layers;
  out.value.assign(items, 0.0);
  out.ud_choice.assign(items, 0);
  out.ua_response.assign(items * in.ud_lattice->size(), 0);
}

void backup_item(const BackupInput& in, std::size_t item, BackupOutput& out) {
  const std::size_t node = item / in.layers;
  const int target = (*in.next_layer)[item];
  const std::size_t n_ud = in.ud_lattice->size();
  if (target < 0) {
    out.value[item] = 0.0;
    out.ud_choice[item] = 0;
    for (std::size_t j = 0; j < n_ud; ++j) out.ua_response[item * n_ud + j] = 0;
    return;
  }
  const auto& grid = *in.grid;
  const std::size_t n = grid.dim();
  const auto& dyn = *in.dynamics;
  std::vector<double> point(in.universe_size, 0.0);
  const auto x = grid.node(node);
  std::copy(x.begin(), x.end(), point.begin());
  std::vector<double> next(n);

  double best = -std::numeric_limits<double>::infinity();
  int best_ud = 0;
  for (std::size_t i = 0; i < n_ud; ++i) {
    const auto& ud = (*in.ud_lattice)[i];
    std::copy(ud.begin(), ud.end(), point.begin() + in.ud_offset);
    double worst = std::numeric_limits<double>::infinity();
    int worst_ua = 0;
    for (std::size_t j = 0; j < in.ua_lattice->size(); ++j) {
      const auto& ua = (*in.ua_lattice)[j];
      std::copy(ua.begin(), ua.end(), point.begin() + in.ua_offset);
      double expect = 0.0;
      for (std::size_t q = 0; q < in.w_nodes->size(); ++q) {
        const auto& w = (*in.w_nodes)[q];
        std::copy(w.begin(), w.end(), point.begin() + in.w_offset);
        for (std::size_t c = 0; c < n; ++c) next[c] = dyn[c].eval(point.data());
        expect += (*in.w_weights)[q] *
                  interpolate(grid, *in.v_next, in.layers, target, next.data());
      }
      if (expect < worst) {
        worst = expect;
        worst_ua = static_cast<int>(j);
      }
    }
    out.ua_response[item * n_ud + i] = worst_ua;
    if (worst > best) {
      best = worst;
      best_ud = static_cast<int>(i);
    }
  }
  out.value[item] = std::clamp(best, 0.0, 1.0);
  out.ud_choice[item] = best_ud;
}

}  // namespace detail

namespace serial {

void map_indices(std::size_t n, const std::function<void(std::size_t)>& body) {
  for (std::size_t i = 0; i < n; ++i) body(i);
}

void backup(const BackupInput& in, BackupOutput& out) {
  detail::prepare(in, out);
  const std::size_t items = in.grid->size() * in.layers;
  for (std::size_t i = 0; i < items; ++i) detail::backup_item(in, i, out);
}

}  // namespace serial
}  // namespace safegame::kernels
