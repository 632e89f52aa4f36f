#pragma once

#include <string>
#include <string_view>

namespace profet {

// SHA-256 of the given bytes, returned as 64 lowercase hex characters.
// Self-contained so bundle checksums do not pull in a crypto library.
std::string sha256_hex(std::string_view bytes);

}  // namespace profet
