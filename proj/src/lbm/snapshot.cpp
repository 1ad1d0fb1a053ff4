#include "latnet/lbm/snapshot.hpp"

#include "latnet/error.hpp"
#include "latnet/util/binary.hpp"

namespace latnet::lbm {
namespace {

constexpr char kMagic[] = "LBLT";
constexpr std::size_t kHeaderPrefix = 8;

}  // namespace

std::size_t Snapshot::element_count() const {
    std::size_t n = 1;
    for (auto d : dims) n *= d;
    return n;
}

std::vector<char> encode_snapshot(const Snapshot& snap) {
    if (snap.values.size() != snap.element_count()) {
        throw ShapeError("snapshot holds " + std::to_string(snap.values.size()) + " values but dims need " +
                         std::to_string(snap.element_count()));
    }
    util::ByteWriter w;
    w.bytes(std::string_view(kMagic, 4));
    w.u16(Snapshot::kVersion);
    w.u16(static_cast<std::uint16_t>(snap.dims.size()));
    for (auto d : snap.dims) w.u32(d);
    for (float v : snap.values) w.f32(v);
    return w.data();
}

Snapshot decode_snapshot(const std::vector<char>& bytes) {
    util::ByteReader r(bytes.data(), bytes.size());
    if (r.bytes(4, "magic") != std::string_view(kMagic, 4)) throw FormatError("bad magic, expected LBLT", 0);
    const std::uint16_t version = r.u16("version");
    if (version != Snapshot::kVersion) throw VersionError("LBLT", version, Snapshot::kVersion);
    const std::uint16_t rank = r.u16("rank");
    Snapshot snap;
    snap.dims.reserve(rank);
    std::uint64_t count = 1;
    for (std::uint16_t k = 0; k < rank; ++k) {
        snap.dims.push_back(r.u32("dims"));
        count *= snap.dims.back();
        if (count > (std::uint64_t{1} << 40)) throw FormatError("implausible snapshot size", r.offset());
    }
    r.need(static_cast<std::size_t>(count) * 4, "values");
    snap.values.resize(static_cast<std::size_t>(count));
    for (auto& v : snap.values) v = r.f32("values");
    if (r.remaining() != 0) throw FormatError("trailing bytes after snapshot values", r.offset());
    return snap;
}

void write_snapshot(const std::string& path, const Snapshot& snap) {
    util::write_file_bytes(path, encode_snapshot(snap));
}

Snapshot read_snapshot(const std::string& path) { return decode_snapshot(util::read_file_bytes(path)); }

Snapshot to_snapshot(const LatticeState& state) {
    Snapshot snap;
    snap.dims = {static_cast<std::uint32_t>(state.nx), static_cast<std::uint32_t>(state.ny),
                 static_cast<std::uint32_t>(D2Q9::Q)};
    snap.values.assign(state.f.begin(), state.f.end());
    return snap;
}

Snapshot to_snapshot(const BoundaryMask& mask) {
    Snapshot snap;
    snap.dims = {static_cast<std::uint32_t>(mask.nx), static_cast<std::uint32_t>(mask.ny), 1u};
    snap.values.reserve(mask.solid.size());
    for (auto s : mask.solid) snap.values.push_back(s ? 1.0f : 0.0f);
    return snap;
}

LatticeState lattice_from_snapshot(const Snapshot& snap) {
    if (snap.dims.size() != 3 || snap.dims[2] != D2Q9::Q) {
        throw ShapeError("lattice snapshot must have dims (nx, ny, 9)");
    }
    LatticeState s(static_cast<int>(snap.dims[0]), static_cast<int>(snap.dims[1]));
    s.f.assign(snap.values.begin(), snap.values.end());
    return s;
}

BoundaryMask mask_from_snapshot(const Snapshot& snap) {
    if (snap.dims.size() != 3 || snap.dims[2] != 1) throw ShapeError("mask snapshot must have dims (nx, ny, 1)");
    BoundaryMask m(static_cast<int>(snap.dims[0]), static_cast<int>(snap.dims[1]));
    for (std::size_t k = 0; k < snap.values.size(); ++k) {
        const float v = snap.values[k];
        if (v != 0.0f && v != 1.0f) {
            throw FormatError("mask value is neither 0 nor 1", kHeaderPrefix + 4 * snap.dims.size() + 4 * k);
        }
        m.solid[k] = v == 1.0f ? 1 : 0;
    }
    return m;
}

}  // namespace latnet::lbm
