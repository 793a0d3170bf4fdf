#pragma once

#include "revive/bytes.hpp"

namespace revive {

/// Raw deflate stream exactly as GNU gzip 1.x produces it for `input` at
/// `level` (1-9), optionally with --rsyncable.
Bytes gnu_deflate(ByteView input, int level, bool rsyncable = false);

/// Whether gnu_deflate(input, level, rsyncable) == expected; stops at the
/// first block that differs.
bool gnu_deflate_reproduces(ByteView input, ByteView expected, int level, bool rsyncable = false);

/// The XFL byte GNU gzip writes for `level`.
inline std::uint8_t gnu_deflate_xfl(int level)
{
    return level == 1 ? 4 : level == 9 ? 2 : 0;
}

} // namespace revive
