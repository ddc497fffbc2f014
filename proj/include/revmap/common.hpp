#pragma once

#include <atomic>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace revmap {

// Raised for malformed inputs (files, indices, dimension mismatches). Maps to
// CLI exit code 2.
struct InputError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Raised when a numerical routine cannot proceed (singular system, eigensolver
// breakdown). Maps to CLI exit code 3.
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Global worker count for parallel_for. 0 means hardware concurrency.
void set_thread_count(int threads);
int thread_count();

// Chunked parallel loop over [begin, end). Body must write disjoint outputs.
// Runs inline when the range is small or a single worker is configured.
void parallel_for(int begin, int end, const std::function<void(int)>& body,
                  int grain = 64);

} // namespace revmap
