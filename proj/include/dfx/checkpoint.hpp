#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "dfx/autodiff.hpp"

namespace dfx::nn {

// Checkpoint container, magic "DFXCKPT1":
//   bytes 0..7   magic
//   u32 LE       header length
//   header       JSON: version, sha256 digest of the payload, per-parameter
//                name/shape/frozen/offset/nbytes
//   payload      concatenated little-endian float32 arrays
//
// The digest is over the payload bytes only, so it doubles as the
// freeze-invariance fingerprint of the parameter values.

std::vector<std::uint8_t> parameter_payload(const std::vector<Parameter>& params);

// SHA-256 hex digest of the float32 payload of `params`.
std::string parameter_digest(const std::vector<Parameter>& params);

void save_checkpoint(const std::filesystem::path& p, const std::vector<Parameter>& params);

std::vector<Parameter> load_checkpoint(const std::filesystem::path& p);

// Rounds every parameter value through float32 so the in-memory state is
// bit-identical to a checkpoint round trip. Applied at model finalization.
void quantize_to_f32(std::vector<Parameter>& params);

}  // namespace dfx::nn
