#pragma once

namespace profet {

// Execution policy for the data-parallel kernels (forest fitting, MLP dense
// layers, evaluation cells). Every parallel path is written so its results
// are bit-identical to the serial reference; tests assert that equivalence,
// and the benchmark target compares their throughput.
enum class ExecPolicy { Serial, Parallel };

inline ExecPolicy default_exec_policy() {
#ifdef _OPENMP
    return ExecPolicy::Parallel;
#else
    return ExecPolicy::Serial;
#endif
}

}  // namespace profet
