#pragma once

#include <string>

namespace entrobound {

/// Hex digest of the SHA-256 of a byte string (content hashes for
/// report provenance and abstraction cache keys).
std::string sha256_hex(const std::string& data);

}  // namespace entrobound
