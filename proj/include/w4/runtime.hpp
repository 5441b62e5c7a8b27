#pragma once

namespace w4 {

// Process-wide allocator settings for large field temporaries. Call once from main.
void configure_allocator();

}  // namespace w4
