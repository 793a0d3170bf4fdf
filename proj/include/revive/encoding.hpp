#pragma once

#include <string>
#include <string_view>

#include "revive/bytes.hpp"

namespace revive {

// The base32 variant used by package definitions: alphabet without e, o, u
// and t, and the digest bytes are consumed from the end.
std::string nix_base32_encode(ByteView data);
Bytes nix_base32_decode(std::string_view text);

std::string base64_encode(ByteView data);
Bytes base64_decode(std::string_view text);

} // namespace revive
