// Data-parallel kernels with a serial reference and an OpenMP version. Both
// run the same per-item code, so their outputs agree bit for bit.

#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "safegame/game.h"
#include "safegame/polynomial.h"

namespace safegame::kernels {

enum class Backend { kSerial, kOpenMP };

/// Process-wide default used by the library entry points.
Backend default_backend();
void set_default_backend(Backend b);
/// 0 leaves the OpenMP runtime default.
void set_num_threads(int threads);

/// Calls body(i) for i in [0, n). Bodies must only write state owned by i.
void map_indices(Backend b, std::size_t n,
                 const std::function<void(std::size_t)>& body);

/// One max-min Bellman backup over every (node, layer) pair.
///
/// Layer l at node x continues in layer next_layer[x * layers + l]
/// (-1: value 0). The continuation value is the quadrature average of the
/// multilinear interpolant of that layer of v_next at f(x, u_d, u_a, w);
/// successors outside the grid are worth 0. Defender maximises over the
/// u_d lattice, adversary minimises over the u_a lattice after seeing u_d;
/// ties go to the smallest index.
struct BackupInput {
  const game::StateGrid* grid = nullptr;
  const std::vector<poly::CompiledPolynomial>* dynamics = nullptr;
  std::size_t universe_size = 0;
  std::size_t ud_offset = 0, ua_offset = 0, w_offset = 0;
  const std::vector<std::vector<double>>* ud_lattice = nullptr;
  const std::vector<std::vector<double>>* ua_lattice = nullptr;
  const std::vector<std::vector<double>>* w_nodes = nullptr;
  const std::vector<double>* w_weights = nullptr;
  int layers = 1;
  const std::vector<int>* next_layer = nullptr;  // nodes x layers
  const std::vector<double>* v_next = nullptr;   // nodes x layers
};

struct BackupOutput {
  std::vector<double> value;       // nodes x layers
  std::vector<int> ud_choice;      // nodes x layers
  std::vector<int> ua_response;    // (nodes x layers) x |ud lattice|
};

void backup(Backend b, const BackupInput& in, BackupOutput& out);

namespace serial {
void map_indices(std::size_t n, const std::function<void(std::size_t)>& body);
void backup(const BackupInput& in, BackupOutput& out);
}  // namespace serial

namespace omp {
void map_indices(std::size_t n, const std::function<void(std::size_t)>& body);
void backup(const BackupInput& in, BackupOutput& out);
}  // namespace omp

namespace detail {
void prepare(const BackupInput& in, BackupOutput& out);
/// Backs up item `item` = node * layers + layer.
void backup_item(const BackupInput& in, std::size_t item, BackupOutput& out);
/// Multilinear interpolation of layer `layer` of `v` at x; 0 off-grid.
double interpolate(const game::StateGrid& grid, const std::vector<double>& v,
                   int layers, int layer, const double* x);
}  // namespace detail

}  // namespace safegame::kernels
