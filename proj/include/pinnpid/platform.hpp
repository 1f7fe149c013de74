#pragma once

namespace pinnpid {

/// Keeps large temporary buffers on the heap instead of fresh mmap pages.
/// Batched network passes allocate multi-megabyte matrices every iteration;
/// with glibc's default threshold each one costs a round of page faults.
/// No-op on other C libraries. Safe to call repeatedly.
void tune_allocator();

}  // namespace pinnpid
