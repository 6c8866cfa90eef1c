#pragma once

#include "ibse/bytes.hpp"
#include "ibse/selfenc.hpp"

namespace ibse::datamap {

/// Checks the structural invariants: at least 3 chunks, indices exactly
/// 0..N-1 in order, src sizes summing to file_size, and the PKCS#7 dst
/// size rule. Throws invalid_map on violation.
void validate(const DataMap& map);

/// Canonical JSON rendering: fields in fixed order, no insignificant
/// whitespace, digests as 64-char lowercase hex. Injective on valid maps.
Bytes serialize(const DataMap& map);

/// Strict inverse of serialize. Throws malformed_map on syntax errors,
/// unsupported_version on a version tag other than "idse-v1", and
/// invalid_map when the document breaks an invariant.
DataMap parse(ByteView bytes);

}  // namespace ibse::datamap
