#pragma once

#include "latnet/lbm/lattice.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace latnet::lbm {

/// "LBLT" container: a float32 array with up to 2^16 - 1 dims.
///
/// Byte layout (all little-endian):
///   0   4 bytes  magic "LBLT"
///   4   u16      format version (1)
///   6   u16      rank
///   8   rank x u32 dims
///   ..  prod(dims) x f32 values, row-major (first dim outermost)
struct Snapshot {
    static constexpr std::uint16_t kVersion = 1;

    std::vector<std::uint32_t> dims;
    std::vector<float> values;

    std::size_t element_count() const;
    bool operator==(const Snapshot&) const = default;
};

std::vector<char> encode_snapshot(const Snapshot& snap);
/// Throws FormatError (with byte offset) or VersionError.
Snapshot decode_snapshot(const std::vector<char>& bytes);

void write_snapshot(const std::string& path, const Snapshot& snap);
Snapshot read_snapshot(const std::string& path);

/// (nx, ny, 9); doubles are narrowed to float.
Snapshot to_snapshot(const LatticeState& state);
/// (nx, ny, 1) with values 0.0 / 1.0.
Snapshot to_snapshot(const BoundaryMask& mask);

LatticeState lattice_from_snapshot(const Snapshot& snap);
/// Throws FormatError if a value is not exactly 0 or 1.
BoundaryMask mask_from_snapshot(const Snapshot& snap);

}  // namespace latnet::lbm
