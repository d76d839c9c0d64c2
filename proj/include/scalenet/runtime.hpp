#pragma once

#if defined(__GLIBC__)
#include <malloc.h>
#endif

namespace scalenet {

// Training allocates and frees the same few hundred-kilobyte matrices every
// epoch. glibc serves those with mmap and hands them straight back, which
// costs more than the arithmetic; keep them on the heap instead.
inline void tune_allocator() {
#if defined(__GLIBC__)
  mallopt(M_MMAP_THRESHOLD, 256 << 20);
  mallopt(M_TRIM_THRESHOLD, 512 << 20);
#endif
}

}  // namespace scalenet
