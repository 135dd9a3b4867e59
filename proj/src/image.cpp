#include "pulp/image.hpp"

#include <algorithm>
#include <fstream>

namespace pulp {

namespace {

constexpr char kMagic[4] = {'P', 'U', 'L', 'P'};
constexpr uint16_t kVersion = 1;

void put_u16(std::vector<uint8_t>& out, uint16_t v) {
    out.push_back(v & 0xFF);
    out.push_back(v >> 8);
}

void put_u32(std::vector<uint8_t>& out, uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back((v >> (8 * i)) & 0xFF);
}

struct Reader {
    const std::vector<uint8_t>& buf;
    size_t pos = 0;

    bool eof() const { return pos >= buf.size(); }
    uint8_t u8() {
        if (pos + 1 > buf.size()) throw ImageError("truncated image file");
        return buf[pos++];
    }
    uint16_t u16() {
        uint16_t lo = u8();
        return static_cast<uint16_t>(lo | (uint16_t(u8()) << 8));
    }
    uint32_t u32() {
        uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= uint32_t(u8()) << (8 * i);
        return v;
    }
};

}  // namespace

void ProgramImage::validate() const {
    if (primary_start >= primary_end)
        throw ImageError("primary range is empty or inverted");
    if ((primary_start & 3) || (primary_end & 3))
        throw ImageError("primary range must be 4-byte aligned");
    std::vector<Segment> sorted = segments;
    std::sort(sorted.begin(), sorted.end(),
              [](const Segment& a, const Segment& b) { return a.base < b.base; });
    for (size_t i = 1; i < sorted.size(); ++i) {
        if (sorted[i - 1].end() > sorted[i].base)
            throw ImageError("segments overlap");
    }
    bool entry_ok = false;
    for (const auto& seg : sorted)
        if (entry >= seg.base && entry < seg.end()) entry_ok = true;
    if (!entry_ok) throw ImageError("entry point is not inside any segment");
}

std::vector<uint8_t> serialize_image(const ProgramImage& image) {
    if (image.segments.size() > 0xFFFF) throw ImageError("too many segments");
    std::vector<uint8_t> out;
    out.insert(out.end(), kMagic, kMagic + 4);
    put_u16(out, kVersion);
    put_u32(out, image.entry);
    put_u32(out, image.primary_start);
    put_u32(out, image.primary_end);
    put_u16(out, static_cast<uint16_t>(image.segments.size()));
    for (const auto& seg : image.segments) {
        put_u32(out, seg.base);
        put_u32(out, static_cast<uint32_t>(seg.bytes.size()));
        out.insert(out.end(), seg.bytes.begin(), seg.bytes.end());
    }
    if (!image.symbols.empty()) {
        put_u32(out, static_cast<uint32_t>(image.symbols.size()));
        for (const auto& [name, addr] : image.symbols) {
            if (name.size() > 0xFFFF) throw ImageError("symbol name too long");
            put_u16(out, static_cast<uint16_t>(name.size()));
            out.insert(out.end(), name.begin(), name.end());
            put_u32(out, addr);
        }
    }
    return out;
}

ProgramImage parse_image(const std::vector<uint8_t>& bytes) {
    Reader r{bytes};
    char magic[4];
    for (char& c : magic) c = static_cast<char>(r.u8());
    if (!std::equal(magic, magic + 4, kMagic)) throw ImageError("bad magic");
    uint16_t version = r.u16();
    if (version != kVersion) throw ImageError("unsupported image version");

    ProgramImage image;
    image.entry = r.u32();
    image.primary_start = r.u32();
    image.primary_end = r.u32();
    uint16_t seg_count = r.u16();
    for (uint16_t i = 0; i < seg_count; ++i) {
        Segment seg;
        seg.base = r.u32();
        uint32_t len = r.u32();
        if (r.pos + len > bytes.size()) throw ImageError("truncated segment payload");
        seg.bytes.assign(bytes.begin() + r.pos, bytes.begin() + r.pos + len);
        r.pos += len;
        image.segments.push_back(std::move(seg));
    }
    if (!r.eof()) {
        uint32_t sym_count = r.u32();
        for (uint32_t i = 0; i < sym_count; ++i) {
            uint16_t len = r.u16();
            if (r.pos + len > bytes.size()) throw ImageError("truncated symbol name");
            std::string name(bytes.begin() + r.pos, bytes.begin() + r.pos + len);
            r.pos += len;
            image.symbols[name] = r.u32();
        }
        if (!r.eof()) throw ImageError("trailing bytes after symbol section");
    }
    image.validate();
    return image;
}

void write_image_file(const ProgramImage& image, const std::string& path) {
    auto bytes = serialize_image(image);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ImageError("cannot open output file: " + path);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw ImageError("write failed: " + path);
}

ProgramImage read_image_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ImageError("cannot open image file: " + path);
    std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                               std::istreambuf_iterator<char>());
    return parse_image(bytes);
}

}  // namespace pulp
