#pragma once

#include <cstdint>

namespace sada {

// Every compute kernel routes its element loop through parallel_for, which
// either runs the plain serial loop or an OpenMP one. Each loop body writes
// a disjoint output element and performs its own reduction in a fixed order,
// so the two backends produce bit-identical results; the unit tests assert
// that and the benchmark target compares their throughput.
enum class Backend { serial, openmp };

Backend& kernel_backend();

// Loops shorter than this stay serial under the openmp backend; the fork
// overhead dwarfs the work for tiny tensors.
constexpr std::int64_t kParallelGrain = 4096;

template <class F>
void parallel_for(std::int64_t n, F&& body) {
    if (kernel_backend() == Backend::openmp && n >= kParallelGrain) {
#pragma omp parallel for schedule(static)
        for (std::int64_t i = 0; i < n; ++i) body(i);
    } else {
        for (std::int64_t i = 0; i < n; ++i) body(i);
    }
}

}  // namespace sada
