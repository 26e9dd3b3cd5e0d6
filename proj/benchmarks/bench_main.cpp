#include <benchmark/benchmark.h>

// The distribution's benchmark_main archive is LTO bytecode from another
// compiler release, so the entry point lives here.
BENCHMARK_MAIN();
