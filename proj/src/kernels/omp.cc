#include <omp.h>

#include <cstdint>
#include <exception>

#include "safegame/kernels.h"

namespace safegame::kernels {

void set_num_threads(int threads) {
  if (threads > 0) omp_set_num_threads(threads);
}

namespace omp {

void map_indices(std::size_t n, const std::function<void(std::size_t)>& body) {
  const auto count = static_cast<std::int64_t>(n);
  // Exceptions may not cross the parallel region; the first one is rethrown.
  std::exception_ptr error;
#pragma omp parallel for schedule(dynamic, 16)
  for (std::int64_t i = 0; i < count; ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
#pragma omp critical(safegame_map_error)
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
}

void backup(const BackupInput& in, BackupOutput& out) {
  detail::prepare(in, out);
  const auto items = static_cast<std::int64_t>(in.grid->size() * in.layers);
#pragma omp parallel for schedule(dynamic, 8)
  for (std::int64_t i = 0; i < items; ++i)
    detail::backup_item(in, static_cast<std::size_t>(i), out);
}

}  // namespace omp
}  // namespace safegame::kernels
