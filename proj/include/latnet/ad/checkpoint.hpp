#pragma once

#include "latnet/ad/graph.hpp"
#include "latnet/util/keyvalue.hpp"

#include <string>
#include <vector>

namespace latnet::ad {

/// "LNCK" checkpoint. Byte layout (all little-endian):
///   4 bytes   magic "LNCK"
///   u16       format version (1)
///   u32       header length H
///   H bytes   UTF-8 key=value header (model and training metadata)
///   u32       parameter count P
///   P times:
///     u32     name length L, then L bytes UTF-8 name
///     u16     rank R, then R x u32 dims
///     N x f32 values   (N = product of dims)
///     N x f32 Adam first moment m
///     N x f32 Adam second moment v
///     u64     Adam step counter
/// Values stored at 32-bit precision regardless of the in-memory type.
struct Checkpoint {
    static constexpr std::uint16_t kVersion = 1;

    util::KeyValue header;
    std::vector<Parameter<float>> params;

    const Parameter<float>* find(const std::string& name) const;
};

template <typename T>
std::vector<char> encode_checkpoint(const util::KeyValue& header, const std::vector<const Parameter<T>*>& params);

/// Throws FormatError with the failing byte offset, or VersionError.
Checkpoint decode_checkpoint(const std::vector<char>& bytes);

template <typename T>
void save_checkpoint(const std::string& path, const util::KeyValue& header,
                     const std::vector<const Parameter<T>*>& params);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace latnet::ad
