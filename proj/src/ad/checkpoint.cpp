#include "latnet/ad/checkpoint.hpp"

#include "latnet/error.hpp"
#include "latnet/util/binary.hpp"

#include <filesystem>

namespace latnet::ad {
namespace {

constexpr char kMagic[] = "LNCK";

}  // namespace

const Parameter<float>* Checkpoint::find(const std::string& name) const {
    for (const auto& p : params) {
        if (p.name == name) return &p;
    }
    return nullptr;
}

template <typename T>
std::vector<char> encode_checkpoint(const util::KeyValue& header, const std::vector<const Parameter<T>*>& params) {
    util::ByteWriter w;
    w.bytes(std::string_view(kMagic, 4));
    w.u16(Checkpoint::kVersion);
    const std::string text = header.to_string();
    w.u32(static_cast<std::uint32_t>(text.size()));
    w.bytes(text);
    w.u32(static_cast<std::uint32_t>(params.size()));
    for (const Parameter<T>* p : params) {
        w.u32(static_cast<std::uint32_t>(p->name.size()));
        w.bytes(p->name);
        w.u16(static_cast<std::uint16_t>(p->value.shape.size()));
        for (auto d : p->value.shape) w.u32(static_cast<std::uint32_t>(d));
        const std::size_t n = p->value.size();
        auto put = [&](const Tensor<T>& t) {
            for (std::size_t i = 0; i < n; ++i) w.f32(i < t.size() ? static_cast<float>(t.data[i]) : 0.0f);
        };
        put(p->value);
        put(p->m);
        put(p->v);
        w.u64(p->step);
    }
    return w.data();
}

Checkpoint decode_checkpoint(const std::vector<char>& bytes) {
    util::ByteReader r(bytes.data(), bytes.size());
    if (r.bytes(4, "magic") != std::string_view(kMagic, 4)) throw FormatError("bad magic, expected LNCK", 0);
    const std::uint16_t version = r.u16("version");
    if (version != Checkpoint::kVersion) throw VersionError("LNCK", version, Checkpoint::kVersion);
    Checkpoint ck;
    const std::uint32_t header_len = r.u32("header length");
    const std::size_t header_at = r.offset();
    const std::string text = r.bytes(header_len, "header");
    try {
        ck.header = util::KeyValue::parse(text);
    } catch (const FormatError& e) {
        throw FormatError(std::string("bad checkpoint header: ") + e.what(), header_at + e.offset());
    }
    const std::uint32_t count = r.u32("parameter count");
    for (std::uint32_t k = 0; k < count; ++k) {
        Parameter<float> p;
        const std::uint32_t name_len = r.u32("name length");
        p.name = r.bytes(name_len, "name");
        const std::uint16_t rank = r.u16("rank");
        Shape shape;
        std::uint64_t n = 1;
        for (std::uint16_t d = 0; d < rank; ++d) {
            shape.push_back(r.u32("dims"));
            n *= shape.back();
            if (n > (std::uint64_t{1} << 36)) throw FormatError("implausible parameter size", r.offset());
        }
        r.need(static_cast<std::size_t>(n) * 12, "parameter arrays");
        auto get = [&](const char* what) {
            Tensor<float> t(shape);
            for (auto& v : t.data) v = r.f32(what);
            return t;
        };
        p.value = get("values");
        p.m = get("adam m");
        p.v = get("adam v");
        p.step = r.u64("adam step");
        p.grad = Tensor<float>(shape);
        ck.params.push_back(std::move(p));
    }
    if (r.remaining() != 0) throw FormatError("trailing bytes after checkpoint", r.offset());
    return ck;
}

template <typename T>
void save_checkpoint(const std::string& path, const util::KeyValue& header,
                     const std::vector<const Parameter<T>*>& params) {
    // Write-then-rename so an interrupted save never clobbers the previous file.
    const std::string tmp = path + ".tmp";
    util::write_file_bytes(tmp, encode_checkpoint(header, params));
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw IoError("cannot move checkpoint into '" + path + "': " + ec.message());
}

Checkpoint load_checkpoint(const std::string& path) { return decode_checkpoint(util::read_file_bytes(path)); }

template std::vector<char> encode_checkpoint<float>(const util::KeyValue&, const std::vector<const Parameter<float>*>&);
template std::vector<char> encode_checkpoint<double>(const util::KeyValue&,
                                                     const std::vector<const Parameter<double>*>&);
template void save_checkpoint<float>(const std::string&, const util::KeyValue&,
                                     const std::vector<const Parameter<float>*>&);
template void save_checkpoint<double>(const std::string&, const util::KeyValue&,
                                      const std::vector<const Parameter<double>*>&);

}  // namespace latnet::ad
