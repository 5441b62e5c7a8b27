#include "w4/runtime.hpp"

#include <malloc.h>

namespace w4 {

void configure_allocator()
{
    // Fields run to hundreds of MB; keep freed blocks in the heap instead of unmapping and
    // faulting them back in on the next allocation.
    mallopt(M_MMAP_THRESHOLD, 1 << 30);
    mallopt(M_TRIM_THRESHOLD, 1 << 30);
}

}  // namespace w4
