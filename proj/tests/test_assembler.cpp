#include <doctest.h>

#include <filesystem>
#include <string>

#include "pulp/assembler.hpp"
#include "pulp/isa.hpp"

using namespace pulp;

namespace {

uint8_t byte_at(const ProgramImage& image, uint32_t addr) {
    for (const Segment& seg : image.segments) {
        if (addr >= seg.base && addr < seg.base + seg.bytes.size())
            return seg.bytes[addr - seg.base];
    }
    FAIL("no segment covers address ", addr);
    return 0;
}

uint32_t word_at(const ProgramImage& image, uint32_t addr) {
    uint32_t w = 0;
    for (int i = 0; i < 4; ++i) w |= uint32_t(byte_at(image, addr + uint32_t(i))) << (8 * i);
    return w;
}

uint32_t sym(const ProgramImage& image, const std::string& name) {
    auto it = image.symbols.find(name);
    REQUIRE(it != image.symbols.end());
    return it->second;
}

// Value produced by a lui+addi pair (the wide li expansion).
uint32_t wide_li_value(const ProgramImage& image, uint32_t addr) {
    Instruction hi = decode(word_at(image, addr));
    Instruction lo = decode(word_at(image, addr + 4));
    REQUIRE(hi.op == Opcode::Lui);
    REQUIRE(lo.op == Opcode::AluImm);
    REQUIRE(lo.alu == AluOp::Add);
    return (uint32_t(hi.imm) << 12) + uint32_t(lo.imm);
}

AsmError capture_error(const std::string& source) {
    try {
        assemble(source);
    } catch (const AsmError& e) {
        return e;
    }
    FAIL("expected the source to be rejected");
    throw std::logic_error("unreachable");
}

}  // namespace

TEST_CASE("minimal program: entry, primary range, encoded word") {
    ProgramImage image = assemble(R"(
.org 0x0
.primary_start
main:
    addi x1, x0, 5
.primary_end
)");
    CHECK(image.entry == 0);
    CHECK(image.primary_start == 0);
    CHECK(image.primary_end == 4);
    CHECK(sym(image, "main") == 0);

    Instruction in = decode(word_at(image, 0));
    CHECK(in.op == Opcode::AluImm);
    CHECK(in.rd == 1);
    CHECK(in.rs1 == 0);
    CHECK(in.imm == 5);
}

TEST_CASE("labels resolve forward and backward in branch offsets") {
    ProgramImage image = assemble(R"(
.org 0x0
.primary_start
start:
    beq x0, x0, done
    addi x1, x1, 1
done:
    jal x0, start
    li a7, 93
    li a0, 0
    ecall
.primary_end
)");
    Instruction beq = decode(word_at(image, 0));
    CHECK(beq.op == Opcode::Branch);
    CHECK(beq.imm == 8);  // forward to 'done'
    Instruction jal = decode(word_at(image, 8));
    CHECK(jal.op == Opcode::Jal);
    CHECK(jal.imm == -8);  // back to 'start'
}

TEST_CASE("li sizing: narrow for 12-bit literals, wide otherwise") {
    ProgramImage image = assemble(R"(
.org 0x0
.primary_start
a:  li t0, 2047
b:  li t0, -2048
c:  li t0, 2048
d:  li t0, -2049
e:  li t0, 0x12345678
f:  la t0, a
g:  li t0, sizeof(blob)
h:  nop
.primary_end
blob: .space 12
)");
    CHECK(sym(image, "b") - sym(image, "a") == 4);   // narrow
    CHECK(sym(image, "c") - sym(image, "b") == 4);   // narrow at the low edge
    CHECK(sym(image, "d") - sym(image, "c") == 8);   // wide just past the range
    CHECK(sym(image, "e") - sym(image, "d") == 8);
    CHECK(sym(image, "f") - sym(image, "e") == 8);
    CHECK(sym(image, "g") - sym(image, "f") == 8);   // la is always wide
    CHECK(sym(image, "h") - sym(image, "g") == 8);   // sizeof is always wide

    CHECK(decode(word_at(image, sym(image, "a"))).imm == 2047);
    CHECK(decode(word_at(image, sym(image, "b"))).imm == -2048);
    CHECK(wide_li_value(image, sym(image, "c")) == 2048);
    CHECK(wide_li_value(image, sym(image, "d")) == uint32_t(-2049));
    CHECK(wide_li_value(image, sym(image, "e")) == 0x12345678);
    CHECK(wide_li_value(image, sym(image, "f")) == sym(image, "a"));
    CHECK(wide_li_value(image, sym(image, "g")) == 12);
}

TEST_CASE("data directives produce exact bytes") {
    ProgramImage image = assemble(R"(
.org 0x0
.primary_start
main:
    nop
.primary_end
words:  .word 0x11223344, tail
bytes:  .byte 1, 2, 0xFF
text:   .asciz "A\tB\x41\\"
gap:    .space 2, 0xAA
.align 8
tail:   .word 1
)");
    uint32_t w = sym(image, "words");
    CHECK(word_at(image, w) == 0x11223344);
    CHECK(word_at(image, w + 4) == sym(image, "tail"));

    uint32_t b = sym(image, "bytes");
    CHECK(byte_at(image, b) == 1);
    CHECK(byte_at(image, b + 1) == 2);
    CHECK(byte_at(image, b + 2) == 0xFF);

    uint32_t t = sym(image, "text");
    const char expect[] = {'A', '\t', 'B', 'A', '\\', 0};
    for (size_t i = 0; i < sizeof expect; ++i)
        CHECK(byte_at(image, t + uint32_t(i)) == uint8_t(expect[i]));

    uint32_t g = sym(image, "gap");
    CHECK(byte_at(image, g) == 0xAA);
    CHECK(byte_at(image, g + 1) == 0xAA);

    // Layout: text ends at 21, gap at [21,23), so align pads [23,24).
    CHECK(sym(image, "tail") % 8 == 0);
    CHECK(sym(image, "tail") - g == 3);
    CHECK(byte_at(image, sym(image, "tail") - 1) == 0);
}

TEST_CASE("declared sizes come from the directive following the label") {
    ProgramImage image = assemble(R"(
.org 0x0
.primary_start
main:
    li a0, sizeof(buf)
    li a1, sizeof(msg)
    li a2, sizeof(table)
.primary_end
buf:   .space 64
msg:   .asciz "hey"
table: .word 1, 2, 3
)");
    CHECK(wide_li_value(image, 0) == 64);
    CHECK(wide_li_value(image, 8) == 4);   // three chars plus NUL
    CHECK(wide_li_value(image, 16) == 12);
}

TEST_CASE("explicit entry and primary range by symbol") {
    ProgramImage image = assemble(R"(
.org 0x0
.entry boot
.primary_start code0
.primary_end code9
code0:
boot:
    nop
code9:
store: .word 0
)");
    CHECK(image.entry == sym(image, "boot"));
    CHECK(image.primary_start == sym(image, "code0"));
    CHECK(image.primary_end == sym(image, "code9"));
}

TEST_CASE("multiple org segments, non-overlapping") {
    ProgramImage image = assemble(R"(
.org 0x0
.primary_start
main:
    nop
.primary_end
.org 0x200
far: .word 0xCAFE
)");
    REQUIRE(image.segments.size() == 2);
    CHECK(sym(image, "far") == 0x200);
    CHECK(word_at(image, 0x200) == 0xCAFE);
}

TEST_CASE("identical source assembles to identical bytes") {
    const std::string source = R"(
.org 0x0
.primary_start
main:
    %protect_call f, (buf, RW, 0)
    li a7, 93
    li a0, 0
    ecall
.primary_end
f:
    ret
buf: .space 16
)";
    ProgramImage a = assemble(source);
    ProgramImage b = assemble(source);
    CHECK(serialize_image(a) == serialize_image(b));
}

TEST_CASE("image container format is frozen") {
    // A minimal image spelled out byte for byte. Any container change breaks
    // every archived image, so the layout is pinned here, not just round-tripped.
    ProgramImage image;
    image.entry = 0;
    image.primary_start = 0;
    image.primary_end = 8;
    image.segments.push_back({0, {0x13, 0x00, 0x00, 0x00,     // nop
                                  0x73, 0x00, 0x00, 0x00}});  // ecall
    image.symbols = {{"hi", 4}, {"main", 0}};

    const std::vector<uint8_t> golden = {
        'P', 'U', 'L', 'P',                              // magic
        0x01, 0x00,                                      // version
        0x00, 0x00, 0x00, 0x00,                          // entry
        0x00, 0x00, 0x00, 0x00,                          // primary start
        0x08, 0x00, 0x00, 0x00,                          // primary end
        0x01, 0x00,                                      // segment count
        0x00, 0x00, 0x00, 0x00,                          // segment base
        0x08, 0x00, 0x00, 0x00,                          // segment length
        0x13, 0x00, 0x00, 0x00, 0x73, 0x00, 0x00, 0x00,  // payload
        0x02, 0x00, 0x00, 0x00,                          // symbol count
        0x02, 0x00, 'h', 'i', 0x04, 0x00, 0x00, 0x00,    // hi = 4
        0x04, 0x00, 'm', 'a', 'i', 'n', 0x00, 0x00, 0x00, 0x00,  // main = 0
    };
    CHECK(serialize_image(image) == golden);

    SUBCASE("parses back field for field") {
        ProgramImage back = parse_image(golden);
        CHECK(back.entry == image.entry);
        CHECK(back.primary_start == image.primary_start);
        CHECK(back.primary_end == image.primary_end);
        REQUIRE(back.segments.size() == 1);
        CHECK(back.segments[0].base == 0);
        CHECK(back.segments[0].bytes == image.segments[0].bytes);
        CHECK(back.symbols == image.symbols);
    }
    SUBCASE("survives a file round trip") {
        const std::string path =
            (std::filesystem::temp_directory_path() / "pulp_minimal_test.img").string();
        write_image_file(image, path);
        ProgramImage back = read_image_file(path);
        CHECK(serialize_image(back) == golden);
        std::filesystem::remove(path);
    }
    SUBCASE("malformed inputs are rejected") {
        std::vector<uint8_t> bad = golden;
        bad[0] = 'Q';
        CHECK_THROWS_AS(parse_image(bad), ImageError);

        bad = golden;
        bad[4] = 0x02;  // unsupported version
        CHECK_THROWS_AS(parse_image(bad), ImageError);

        bad.assign(golden.begin(), golden.begin() + 30);  // cut mid-payload
        CHECK_THROWS_AS(parse_image(bad), ImageError);

        bad = golden;
        bad.push_back(0x00);  // trailing garbage
        CHECK_THROWS_AS(parse_image(bad), ImageError);

        bad = golden;
        bad[14] = 0x00;  // primary end 0: empty range fails validation
        CHECK_THROWS_AS(parse_image(bad), ImageError);
    }
}

TEST_CASE("error reporting carries kind and line") {
    SUBCASE("duplicate label") {
        AsmError e = capture_error(".org 0\n.primary_start\nx:\nx:\n nop\n.primary_end\n");
        CHECK(e.kind == AsmErrorKind::SyntaxError);
        CHECK(e.line == 4);
        CHECK(std::string(e.what()).find("line 4") == 0);
    }
    SUBCASE("unresolved label") {
        AsmError e =
            capture_error(".org 0\n.primary_start\n jal x0, nowhere\n.primary_end\n");
        CHECK(e.kind == AsmErrorKind::UnresolvedLabel);
        CHECK(e.line == 3);
    }
    SUBCASE("missing primary range") {
        AsmError e = capture_error(".org 0\n nop\n");
        CHECK(e.kind == AsmErrorKind::MissingPrimaryRange);
    }
    SUBCASE("overlapping segments") {
        AsmError e = capture_error(
            ".org 0\n.primary_start\n nop\n nop\n.primary_end\n.org 4\n.word 1\n");
        CHECK(e.kind == AsmErrorKind::OverlappingSegments);
    }
    SUBCASE("immediate out of range") {
        AsmError e =
            capture_error(".org 0\n.primary_start\n addi x1, x0, 5000\n.primary_end\n");
        CHECK(e.kind == AsmErrorKind::ImmediateOutOfRange);
        CHECK(e.line == 3);
    }
    SUBCASE("macro group index out of range") {
        AsmError e = capture_error(
            ".org 0\n.primary_start\n %protect_call f, (b, R, 9)\n.primary_end\nf: ret\n"
            "b: .space 4\n");
        CHECK(e.kind == AsmErrorKind::IndexOutOfRange);
    }
    SUBCASE("macro expansion outside the primary range") {
        AsmError e = capture_error(
            ".org 0\n.primary_start\n nop\n.primary_end\nlate:\n %end_protect(0)\n ret\n");
        CHECK(e.kind == AsmErrorKind::StaticRegionError);
    }
    SUBCASE("protect tuple with underivable length") {
        AsmError e = capture_error(
            ".org 0\n.primary_start\n %protect_call f, (t3, R, 0)\n.primary_end\nf: ret\n");
        CHECK(e.kind == AsmErrorKind::UnknownLength);
    }
    SUBCASE("unknown mnemonic") {
        AsmError e = capture_error(".org 0\n.primary_start\n frobnicate x1\n.primary_end\n");
        CHECK(e.kind == AsmErrorKind::SyntaxError);
        CHECK(e.line == 3);
    }
    SUBCASE("unreadable file") {
        try {
            assemble_file("/nonexistent/path.s");
            FAIL("expected an error");
        } catch (const AsmError& e) {
            CHECK(e.line == 0);
        }
    }
}

TEST_CASE("comments and blank lines are ignored") {
    ProgramImage image = assemble(R"(
# full-line comment
.org 0x0
.primary_start
main:           ; trailing form
    nop         # both markers work
.primary_end
)");
    CHECK(decode(word_at(image, 0)).op == Opcode::AluImm);  // nop == addi x0,x0,0
}

TEST_CASE("expressions combine labels, integers and sizeof") {
    ProgramImage image = assemble(R"(
.org 0x0
.primary_start
main:
    li a0, buf+8
    li a1, end-4
    li a2, sizeof(buf)+buf
.primary_end
buf: .space 32
end: .word 0
)");
    CHECK(wide_li_value(image, 0) == sym(image, "buf") + 8);
    CHECK(wide_li_value(image, 8) == sym(image, "end") - 4);
    CHECK(wide_li_value(image, 16) == sym(image, "buf") + 32);
}

TEST_CASE("pulp csr names assemble to the documented addresses") {
    ProgramImage image = assemble(R"(
.org 0x0
.primary_start
main:
    csrw smar0_lo, t0
    csrw smar7_cfg, t0
    csrr t1, rar
    csrr t2, cycle
    csrr t3, instret
.primary_end
)");
    CHECK(decode(word_at(image, 0)).csr == 0x7C2);
    CHECK(decode(word_at(image, 4)).csr == 0x7D9);
    CHECK(decode(word_at(image, 8)).csr == 0x7E0);
    CHECK(decode(word_at(image, 12)).csr == 0xC00);
    CHECK(decode(word_at(image, 16)).csr == 0xC02);
    // csrr expands to csrrs rd, csr, x0 so the read has no write side.
    Instruction rd = decode(word_at(image, 8));
    CHECK(rd.op == Opcode::CsrReadSet);
    CHECK(rd.rs1 == 0);
}
