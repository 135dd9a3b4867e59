#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace pulp {

struct Segment {
    uint32_t base = 0;
    std::vector<uint8_t> bytes;

    uint64_t end() const { return uint64_t(base) + bytes.size(); }
};

// Loadable binary produced by the assembler. primary_start/primary_end is the
// half-open PC range the loader writes into PPCR.
struct ProgramImage {
    uint32_t entry = 0;
    uint32_t primary_start = 0;
    uint32_t primary_end = 0;
    std::vector<Segment> segments;            // sorted by base, non-overlapping
    std::map<std::string, uint32_t> symbols;  // optional

    // Throws ImageError when an invariant is broken.
    void validate() const;
};

struct ImageError : std::runtime_error {
    explicit ImageError(const std::string& what) : std::runtime_error(what) {}
};

// Binary image file, little-endian:
//   magic "PULP", version u16 = 1,
//   entry u32, primary_start u32, primary_end u32,
//   segment_count u16, per segment { base u32, len u32, bytes },
//   optional symbol section: sym_count u32, per symbol { name_len u16, name, addr u32 }.
// A file that ends right after the last segment has no symbols.
std::vector<uint8_t> serialize_image(const ProgramImage& image);
ProgramImage parse_image(const std::vector<uint8_t>& bytes);

void write_image_file(const ProgramImage& image, const std::string& path);
ProgramImage read_image_file(const std::string& path);

}  // namespace pulp
