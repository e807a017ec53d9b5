#pragma once

#include <cstddef>
#include <functional>

namespace defreg {

// Work is always split into fixed blocks whose boundaries do not depend on
// the worker count; reductions combine per-block partials in block order,
// so results are bit-identical for any thread setting.
inline constexpr std::size_t kBlockSize = 256;

void set_max_threads(unsigned n);
unsigned max_threads();

// Calls fn(b) once for every b in [0, n_blocks). Exceptions thrown by fn
// are rethrown on the calling thread (the first one wins).
void parallel_for_blocks(std::size_t n_blocks, const std::function<void(std::size_t)>& fn);

inline std::size_t block_count(std::size_t n_items, std::size_t block = kBlockSize) {
    return (n_items + block - 1) / block;
}

}  // namespace defreg
