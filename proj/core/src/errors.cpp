#include "ibse/errors.hpp"

namespace ibse {

const char* errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::input_too_small: return "InputTooSmall";
    case Errc::empty_identity: return "EmptyIdentity";
    case Errc::empty_source: return "EmptySource";
    case Errc::index_out_of_range: return "IndexOutOfRange";
    case Errc::cipher_error: return "CipherError";
    case Errc::bad_length: return "BadLength";
    case Errc::integrity_error: return "IntegrityError";
    case Errc::identity_mismatch: return "IdentityMismatch";
    case Errc::malformed_map: return "MalformedMap";
    case Errc::unsupported_version: return "UnsupportedVersion";
    case Errc::invalid_map: return "InvalidMap";
    case Errc::not_found: return "NotFound";
    case Errc::file_not_found: return "FileNotFound";
    case Errc::corrupt_object: return "CorruptObject";
    case Errc::storage_failure: return "StorageFailure";
    case Errc::already_exists: return "AlreadyExists";
    case Errc::empty_cids: return "EmptyCids";
    case Errc::out_of_memory: return "OutOfMemory";
    case Errc::invalid_free: return "InvalidFree";
    case Errc::unknown_function: return "UnknownFunction";
    case Errc::kind_mismatch: return "KindMismatch";
    case Errc::invocation_error: return "InvocationError";
    case Errc::insufficient_data: return "InsufficientData";
  }
  return "UnknownError";
}

}  // namespace ibse
