#pragma once

#include "ibse/bytes.hpp"

namespace ibse {

Digest sha256(ByteView data);

}  // namespace ibse
