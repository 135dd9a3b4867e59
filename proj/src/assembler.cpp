#include "pulp/assembler.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <sstream>
#include <vector>

#include "pulp/isa.hpp"
#include "pulp/regs.hpp"
#include "pulp/runtime.hpp"
#include "pulp/text.hpp"

namespace pulp {

namespace {

constexpr uint16_t kCsrCycle = 0xC00;
constexpr uint16_t kCsrInstret = 0xC02;

bool is_ident_start(char c) {
    return std::isalpha(static_cast<unsigned char>(c)) || c == '_';
}
bool is_ident_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

bool is_ident(std::string_view s) {
    if (s.empty() || !is_ident_start(s[0])) return false;
    for (char c : s)
        if (!is_ident_char(c)) return false;
    return true;
}

// Strips a trailing comment, honoring string literals.
std::string_view strip_comment(std::string_view line) {
    bool in_string = false;
    for (size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (in_string) {
            if (c == '\\') ++i;
            else if (c == '"') in_string = false;
        } else if (c == '"') {
            in_string = true;
        } else if (c == '#' || c == ';') {
            return line.substr(0, i);
        }
    }
    return line;
}

// Splits on commas at parenthesis depth 0, outside string literals.
std::vector<std::string> split_top_commas(std::string_view s) {
    std::vector<std::string> out;
    int depth = 0;
    bool in_string = false;
    size_t start = 0;
    for (size_t i = 0; i < s.size(); ++i) {
        char c = s[i];
        if (in_string) {
            if (c == '\\') ++i;
            else if (c == '"') in_string = false;
        } else if (c == '"') {
            in_string = true;
        } else if (c == '(') {
            ++depth;
        } else if (c == ')') {
            --depth;
        } else if (c == ',' && depth == 0) {
            out.emplace_back(trim(s.substr(start, i - start)));
            start = i + 1;
        }
    }
    out.emplace_back(trim(s.substr(start)));
    if (out.size() == 1 && out[0].empty()) out.clear();
    return out;
}

struct Stmt {
    enum class Kind : uint8_t { Instr, Word, Byte, Asciz, Space, Align } kind = Kind::Instr;
    int line = 0;
    uint32_t addr = 0;
    uint32_t size = 0;
    int segment = 0;
    std::string mnemonic;
    std::vector<std::string> operands;
    std::string text;  // Asciz payload, unescaped
    uint8_t fill = 0;  // Space fill byte
};

class Assembler {
public:
    ProgramImage run(std::string_view source) {
        pass1(source);
        resolve_layout();
        return pass2();
    }

private:
    std::vector<Stmt> stmts_;
    std::map<std::string, uint32_t> symbols_;
    std::map<std::string, uint32_t> sizes_;
    std::vector<std::string> pending_size_labels_;

    uint32_t lc_ = 0;
    int segment_ = 0;
    int line_no_ = 0;

    std::string entry_expr_, primary_start_expr_, primary_end_expr_;
    int entry_line_ = 0, primary_start_line_ = 0, primary_end_line_ = 0;

    struct MacroSite {
        int line;
        uint32_t start, end;
    };
    std::vector<MacroSite> macro_sites_;

    uint32_t primary_start_ = 0, primary_end_ = 0, entry_ = 0;

    [[noreturn]] void fail(AsmErrorKind kind, const std::string& what) const {
        throw AsmError(kind, line_no_, what);
    }

    // ---- pass 1: layout ----

    void pass1(std::string_view source) {
        size_t pos = 0;
        while (pos <= source.size()) {
            size_t nl = source.find('\n', pos);
            std::string_view raw = nl == std::string_view::npos
                                       ? source.substr(pos)
                                       : source.substr(pos, nl - pos);
            pos = nl == std::string_view::npos ? source.size() + 1 : nl + 1;
            ++line_no_;

            std::string_view body = trim(strip_comment(raw));
            while (true) {
                size_t i = 0;
                while (i < body.size() && is_ident_char(body[i])) ++i;
                if (i > 0 && i < body.size() && body[i] == ':' && is_ident(body.substr(0, i))) {
                    define_label(std::string(body.substr(0, i)));
                    body = trim(body.substr(i + 1));
                    continue;
                }
                break;
            }
            if (body.empty()) continue;

            if (body[0] == '%') expand_macro(body);
            else if (body[0] == '.') directive(body);
            else add_instruction(body);
        }
    }

    void define_label(const std::string& name) {
        if (symbols_.count(name)) fail(AsmErrorKind::SyntaxError, "duplicate label '" + name + "'");
        symbols_[name] = lc_;
        pending_size_labels_.push_back(name);
    }

    void note_statement_size(Stmt::Kind kind, uint32_t size) {
        // A label's declared size comes from the data directive immediately
        // after it; instructions and layout directives clear the association.
        if (kind == Stmt::Kind::Word || kind == Stmt::Kind::Byte ||
            kind == Stmt::Kind::Asciz || kind == Stmt::Kind::Space) {
            for (const auto& name : pending_size_labels_) sizes_[name] = size;
        }
        pending_size_labels_.clear();
    }

    void push_stmt(Stmt stmt) {
        stmt.line = line_no_;
        stmt.addr = lc_;
        stmt.segment = segment_;
        note_statement_size(stmt.kind, stmt.size);
        lc_ += stmt.size;
        stmts_.push_back(std::move(stmt));
    }

    uint32_t const_operand(std::string_view text, const char* what) {
        auto v = parse_int(trim(text));
        if (!v || *v < 0 || *v > 0xFFFFFFFFll)
            fail(AsmErrorKind::SyntaxError, std::string(what) + " needs a constant, got '" +
                                                std::string(text) + "'");
        return static_cast<uint32_t>(*v);
    }

    void directive(std::string_view body) {
        size_t sp = body.find_first_of(" \t");
        std::string_view name = sp == std::string_view::npos ? body : body.substr(0, sp);
        std::string_view rest = sp == std::string_view::npos ? std::string_view{}
                                                             : trim(body.substr(sp + 1));
        if (name == ".org") {
            lc_ = const_operand(rest, ".org");
            ++segment_;
            pending_size_labels_.clear();
        } else if (name == ".entry") {
            if (rest.empty()) fail(AsmErrorKind::SyntaxError, ".entry needs an operand");
            entry_expr_ = std::string(rest);
            entry_line_ = line_no_;
        } else if (name == ".primary_start") {
            primary_start_expr_ = rest.empty() ? std::to_string(lc_) : std::string(rest);
            primary_start_line_ = line_no_;
        } else if (name == ".primary_end") {
            primary_end_expr_ = rest.empty() ? std::to_string(lc_) : std::string(rest);
            primary_end_line_ = line_no_;
        } else if (name == ".word" || name == ".byte") {
            Stmt stmt;
            stmt.kind = name == ".word" ? Stmt::Kind::Word : Stmt::Kind::Byte;
            stmt.operands = split_top_commas(rest);
            if (stmt.operands.empty())
                fail(AsmErrorKind::SyntaxError, std::string(name) + " needs values");
            stmt.size = static_cast<uint32_t>(stmt.operands.size()) * (name == ".word" ? 4 : 1);
            push_stmt(std::move(stmt));
        } else if (name == ".asciz") {
            auto text = unquote_string(rest);
            if (!text) fail(AsmErrorKind::SyntaxError, ".asciz needs a string literal");
            Stmt stmt;
            stmt.kind = Stmt::Kind::Asciz;
            stmt.text = *text;
            stmt.size = static_cast<uint32_t>(text->size()) + 1;
            push_stmt(std::move(stmt));
        } else if (name == ".space") {
            auto args = split_top_commas(rest);
            if (args.empty() || args.size() > 2)
                fail(AsmErrorKind::SyntaxError, ".space needs a size and optional fill byte");
            Stmt stmt;
            stmt.kind = Stmt::Kind::Space;
            stmt.size = const_operand(args[0], ".space");
            if (args.size() == 2) {
                uint32_t fill = const_operand(args[1], ".space fill");
                if (fill > 0xFF) fail(AsmErrorKind::ImmediateOutOfRange, "fill byte out of range");
                stmt.fill = static_cast<uint8_t>(fill);
            }
            push_stmt(std::move(stmt));
        } else if (name == ".align") {
            uint32_t n = const_operand(rest, ".align");
            if (n == 0 || (n & (n - 1)) != 0 || n > 4096)
                fail(AsmErrorKind::SyntaxError, ".align needs a power of two up to 4096");
            Stmt stmt;
            stmt.kind = Stmt::Kind::Align;
            stmt.size = (n - lc_ % n) % n;
            push_stmt(std::move(stmt));
        } else {
            fail(AsmErrorKind::SyntaxError, "unknown directive '" + std::string(name) + "'");
        }
    }

    // True when `li` with this operand fits one addi, decided syntactically so
    // both passes agree without knowing symbol values.
    static bool narrow_li(std::string_view operand) {
        auto v = parse_int(trim(operand));
        return v && *v >= -2048 && *v <= 2047;
    }

    void add_instruction(std::string_view body) {
        size_t sp = body.find_first_of(" \t");
        Stmt stmt;
        stmt.kind = Stmt::Kind::Instr;
        stmt.mnemonic = std::string(sp == std::string_view::npos ? body : body.substr(0, sp));
        if (sp != std::string_view::npos) stmt.operands = split_top_commas(body.substr(sp + 1));
        for (char& c : stmt.mnemonic) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));

        uint32_t instructions = 1;
        if (stmt.mnemonic == "la") instructions = 2;
        else if (stmt.mnemonic == "li") {
            if (stmt.operands.size() != 2) fail(AsmErrorKind::SyntaxError, "li needs rd, value");
            instructions = narrow_li(stmt.operands[1]) ? 1 : 2;
        }
        stmt.size = 4 * instructions;
        push_stmt(std::move(stmt));
    }

    // ---- macros ----

    ProtectSpec parse_tuple(std::string_view tuple) {
        tuple = trim(tuple);
        if (tuple.size() < 2 || tuple.front() != '(' || tuple.back() != ')')
            fail(AsmErrorKind::SyntaxError, "expected (addr, len, cfg, index) tuple");
        auto args = split_top_commas(tuple.substr(1, tuple.size() - 2));
        ProtectSpec spec;
        try {
            if (args.size() == 4) {
                spec.addr = args[0];
                spec.len = args[1];
                spec.cfg = parse_cfg(args[2]);
                spec.index = tuple_index(args[3]);
            } else if (args.size() == 3) {
                spec.addr = args[0];
                spec.cfg = parse_cfg(args[1]);
                spec.index = tuple_index(args[2]);
            } else {
                fail(AsmErrorKind::SyntaxError, "protect tuple needs 3 or 4 elements");
            }
        } catch (const RuntimeError& e) {
            rethrow_runtime(e);
        }
        spec.len = resolve_len(spec);
        return spec;
    }

    int tuple_index(std::string_view text) {
        auto v = parse_int(trim(text));
        if (!v) fail(AsmErrorKind::SyntaxError, "group index must be a constant");
        if (*v < -1000 || *v > 1000) return kSmarGroups;  // clamp into the range check
        return static_cast<int>(*v);
    }

    // Fills an omitted length from the addr symbol's declared size. Sizes may
    // not be known yet (forward references), so symbols defer to sizeof() in
    // the expansion and resolve in pass 2.
    std::string resolve_len(const ProtectSpec& spec) {
        std::string_view len = trim(spec.len);
        if (!len.empty()) {
            if (len.front() == '"') {
                try {
                    return effective_length(spec, [](std::string_view) { return std::nullopt; });
                } catch (const RuntimeError& e) {
                    rethrow_runtime(e);
                }
            }
            return std::string(len);
        }
        std::string_view addr = trim(spec.addr);
        if (is_ident(addr) && !parse_register(addr))
            return "sizeof(" + std::string(addr) + ")";
        fail(AsmErrorKind::UnknownLength,
             "no length annotation for '" + std::string(addr) + "'");
    }

    [[noreturn]] void rethrow_runtime(const RuntimeError& e) const {
        AsmErrorKind kind = AsmErrorKind::SyntaxError;
        if (e.kind == RuntimeErrorKind::IndexOutOfRange) kind = AsmErrorKind::IndexOutOfRange;
        if (e.kind == RuntimeErrorKind::UnknownLength) kind = AsmErrorKind::UnknownLength;
        throw AsmError(kind, line_no_, e.what());
    }

    void expand_macro(std::string_view body) {
        const uint32_t start = lc_;
        std::vector<std::string> lines;
        try {
            if (body.rfind("%start_protect", 0) == 0) {
                std::string_view rest = trim(body.substr(14));
                lines = expand_start_protect(parse_tuple(rest));
            } else if (body.rfind("%end_protect", 0) == 0) {
                std::string_view rest = trim(body.substr(12));
                if (rest.size() < 2 || rest.front() != '(' || rest.back() != ')')
                    fail(AsmErrorKind::SyntaxError, "%end_protect needs (index)");
                lines = expand_end_protect(tuple_index(rest.substr(1, rest.size() - 2)));
            } else if (body.rfind("%protect_call", 0) == 0) {
                auto parts = split_top_commas(trim(body.substr(13)));
                if (parts.empty() || !is_ident(parts[0]))
                    fail(AsmErrorKind::SyntaxError, "%protect_call needs a callee label");
                CallSiteSpec site;
                site.callee = parts[0];
                for (size_t i = 1; i < parts.size(); ++i)
                    site.protects.push_back(parse_tuple(parts[i]));
                lines = instrument_call(site);
            } else {
                fail(AsmErrorKind::SyntaxError, "unknown macro '" + std::string(body) + "'");
            }
        } catch (const RuntimeError& e) {
            rethrow_runtime(e);
        }
        pending_size_labels_.clear();
        for (const auto& line : lines) add_instruction(line);
        macro_sites_.push_back({line_no_, start, lc_});
    }

    // ---- between passes ----

    void resolve_layout() {
        line_no_ = 0;
        if (primary_start_expr_.empty() || primary_end_expr_.empty())
            throw AsmError(AsmErrorKind::MissingPrimaryRange, 0,
                           "source needs .primary_start and .primary_end");
        primary_start_ = eval_addr(primary_start_expr_, primary_start_line_);
        primary_end_ = eval_addr(primary_end_expr_, primary_end_line_);
        if (primary_start_ % 4 || primary_end_ % 4 || primary_start_ >= primary_end_)
            throw AsmError(AsmErrorKind::SyntaxError, primary_start_line_,
                           "primary range must be non-empty and 4-byte aligned");
        entry_ = entry_expr_.empty() ? primary_start_ : eval_addr(entry_expr_, entry_line_);

        for (const auto& site : macro_sites_)
            if (site.start < primary_start_ || site.end > primary_end_)
                throw AsmError(AsmErrorKind::StaticRegionError, site.line,
                               "protection macro expands outside the primary range");
    }

    uint32_t eval_addr(const std::string& expr, int line) {
        line_no_ = line;
        int64_t v = eval_expr(expr);
        if (v < 0 || v > 0xFFFFFFFFll)
            fail(AsmErrorKind::ImmediateOutOfRange, "address out of 32-bit range");
        return static_cast<uint32_t>(v);
    }

    // ---- expressions ----

    int64_t eval_atom(std::string_view atom) {
        atom = trim(atom);
        if (atom.empty()) fail(AsmErrorKind::SyntaxError, "empty expression term");
        if (auto v = parse_int(atom)) return *v;
        if (atom.rfind("sizeof", 0) == 0) {
            std::string_view inner = trim(atom.substr(6));
            if (inner.size() >= 2 && inner.front() == '(' && inner.back() == ')') {
                std::string name(trim(inner.substr(1, inner.size() - 2)));
                if (!symbols_.count(name))
                    fail(AsmErrorKind::UnresolvedLabel, "unknown symbol '" + name + "'");
                auto it = sizes_.find(name);
                if (it == sizes_.end())
                    fail(AsmErrorKind::UnknownLength, "'" + name + "' has no declared size");
                return it->second;
            }
        }
        if (!is_ident(atom))
            fail(AsmErrorKind::SyntaxError, "bad expression term '" + std::string(atom) + "'");
        auto it = symbols_.find(std::string(atom));
        if (it == symbols_.end())
            fail(AsmErrorKind::UnresolvedLabel, "unknown symbol '" + std::string(atom) + "'");
        return it->second;
    }

    int64_t eval_expr(std::string_view expr) {
        expr = trim(expr);
        if (expr.empty()) fail(AsmErrorKind::SyntaxError, "empty expression");
        int64_t value = 0;
        char op = '+';
        size_t start = 0;
        if (expr[0] == '+' || expr[0] == '-') {  // leading sign applies to zero
            op = expr[0];
            start = 1;
        }
        int depth = 0;
        auto apply = [&](std::string_view atom) {
            int64_t v = eval_atom(atom);
            value = op == '+' ? value + v : value - v;
        };
        for (size_t i = start; i < expr.size(); ++i) {
            char c = expr[i];
            if (c == '(') ++depth;
            else if (c == ')') --depth;
            else if ((c == '+' || c == '-') && depth == 0) {
                apply(expr.substr(start, i - start));
                op = c;
                start = i + 1;
            }
        }
        apply(expr.substr(start));
        return value;
    }

    // ---- pass 2: emission ----

    int parse_reg(std::string_view text) {
        auto r = parse_register(trim(text));
        if (!r) fail(AsmErrorKind::SyntaxError, "expected register, got '" + std::string(text) + "'");
        return *r;
    }

    uint16_t parse_csr(std::string_view text) {
        text = trim(text);
        if (auto v = parse_int(text)) {
            if (*v < 0 || *v > 0xFFF) fail(AsmErrorKind::ImmediateOutOfRange, "CSR address out of range");
            return static_cast<uint16_t>(*v);
        }
        if (text == "cycle") return kCsrCycle;
        if (text == "instret") return kCsrInstret;
        if (auto csr = pulp_csr_by_name(text)) return *csr;
        fail(AsmErrorKind::SyntaxError, "unknown CSR '" + std::string(text) + "'");
    }

    int32_t eval_imm(std::string_view expr) {
        int64_t v = eval_expr(expr);
        if (v < INT32_MIN || v > int64_t(UINT32_MAX))
            fail(AsmErrorKind::ImmediateOutOfRange, "value out of 32-bit range");
        return static_cast<int32_t>(v);
    }

    // off(rs) | (rs) | off — returns {offset expr, reg}.
    std::pair<int32_t, int> parse_mem_operand(std::string_view text) {
        text = trim(text);
        size_t open = text.rfind('(');
        if (open == std::string_view::npos || text.back() != ')')
            fail(AsmErrorKind::SyntaxError, "expected off(reg), got '" + std::string(text) + "'");
        std::string_view off = trim(text.substr(0, open));
        int reg = parse_reg(text.substr(open + 1, text.size() - open - 2));
        int32_t offset = off.empty() ? 0 : eval_imm(off);
        return {offset, reg};
    }

    void need_operands(const Stmt& stmt, size_t count) {
        if (stmt.operands.size() != count)
            fail(AsmErrorKind::SyntaxError, stmt.mnemonic + " needs " + std::to_string(count) +
                                                " operands, got " +
                                                std::to_string(stmt.operands.size()));
    }

    uint32_t encode_checked(const Instruction& inst) {
        try {
            return encode(inst);
        } catch (const EncodeError& e) {
            fail(AsmErrorKind::ImmediateOutOfRange, e.what());
        }
    }

    // Appends every instruction the statement stands for.
    void emit_instruction(const Stmt& stmt, std::vector<uint32_t>& words) {
        static const std::map<std::string_view, AluOp> kAluReg = {
            {"add", AluOp::Add}, {"sub", AluOp::Sub}, {"sll", AluOp::Sll},
            {"slt", AluOp::Slt}, {"sltu", AluOp::Sltu}, {"xor", AluOp::Xor},
            {"srl", AluOp::Srl}, {"sra", AluOp::Sra}, {"or", AluOp::Or},
            {"and", AluOp::And}};
        static const std::map<std::string_view, AluOp> kAluImm = {
            {"addi", AluOp::Add}, {"slti", AluOp::Slt}, {"sltiu", AluOp::Sltu},
            {"xori", AluOp::Xor}, {"ori", AluOp::Or},   {"andi", AluOp::And},
            {"slli", AluOp::Sll}, {"srli", AluOp::Srl}, {"srai", AluOp::Sra}};
        static const std::map<std::string_view, std::pair<int, bool>> kLoads = {
            {"lb", {1, false}}, {"lh", {2, false}}, {"lw", {4, false}},
            {"lbu", {1, true}}, {"lhu", {2, true}}};
        static const std::map<std::string_view, int> kStores = {
            {"sb", 1}, {"sh", 2}, {"sw", 4}};
        static const std::map<std::string_view, BranchCond> kBranches = {
            {"beq", BranchCond::Eq},  {"bne", BranchCond::Ne},
            {"blt", BranchCond::Lt},  {"bge", BranchCond::Ge},
            {"bltu", BranchCond::Ltu}, {"bgeu", BranchCond::Geu}};

        const std::string& m = stmt.mnemonic;
        Instruction inst;

        auto branch_offset = [&](std::string_view target) -> int32_t {
            int64_t addr = eval_expr(target);
            return static_cast<int32_t>(addr - int64_t(stmt.addr));
        };
        auto wide_li = [&](int rd, uint32_t value) {
            uint32_t hi = ((value + 0x800) >> 12) & 0xFFFFF;
            int32_t lo = static_cast<int32_t>(value - (hi << 12));
            Instruction a;
            a.op = Opcode::Lui;
            a.rd = static_cast<uint8_t>(rd);
            a.imm = static_cast<int32_t>(hi);
            words.push_back(encode_checked(a));
            Instruction b;
            b.op = Opcode::AluImm;
            b.alu = AluOp::Add;
            b.rd = b.rs1 = static_cast<uint8_t>(rd);
            b.imm = lo;
            words.push_back(encode_checked(b));
        };

        if (auto it = kAluReg.find(m); it != kAluReg.end()) {
            need_operands(stmt, 3);
            inst.op = Opcode::AluReg;
            inst.alu = it->second;
            inst.rd = static_cast<uint8_t>(parse_reg(stmt.operands[0]));
            inst.rs1 = static_cast<uint8_t>(parse_reg(stmt.operands[1]));
            inst.rs2 = static_cast<uint8_t>(parse_reg(stmt.operands[2]));
        } else if (auto it2 = kAluImm.find(m); it2 != kAluImm.end()) {
            need_operands(stmt, 3);
            inst.op = Opcode::AluImm;
            inst.alu = it2->second;
            inst.rd = static_cast<uint8_t>(parse_reg(stmt.operands[0]));
            inst.rs1 = static_cast<uint8_t>(parse_reg(stmt.operands[1]));
            inst.imm = eval_imm(stmt.operands[2]);
        } else if (auto it3 = kLoads.find(m); it3 != kLoads.end()) {
            need_operands(stmt, 2);
            inst.op = Opcode::Load;
            inst.width = static_cast<uint8_t>(it3->second.first);
            inst.load_unsigned = it3->second.second;
            inst.rd = static_cast<uint8_t>(parse_reg(stmt.operands[0]));
            auto [offset, reg] = parse_mem_operand(stmt.operands[1]);
            inst.imm = offset;
            inst.rs1 = static_cast<uint8_t>(reg);
        } else if (auto it4 = kStores.find(m); it4 != kStores.end()) {
            need_operands(stmt, 2);
            inst.op = Opcode::Store;
            inst.width = static_cast<uint8_t>(it4->second);
            inst.rs2 = static_cast<uint8_t>(parse_reg(stmt.operands[0]));
            auto [offset, reg] = parse_mem_operand(stmt.operands[1]);
            inst.imm = offset;
            inst.rs1 = static_cast<uint8_t>(reg);
        } else if (auto it5 = kBranches.find(m); it5 != kBranches.end()) {
            need_operands(stmt, 3);
            inst.op = Opcode::Branch;
            inst.cond = it5->second;
            inst.rs1 = static_cast<uint8_t>(parse_reg(stmt.operands[0]));
            inst.rs2 = static_cast<uint8_t>(parse_reg(stmt.operands[1]));
            inst.imm = branch_offset(stmt.operands[2]);
        } else if (m == "lui" || m == "auipc") {
            need_operands(stmt, 2);
            inst.op = m == "lui" ? Opcode::Lui : Opcode::Auipc;
            inst.rd = static_cast<uint8_t>(parse_reg(stmt.operands[0]));
            inst.imm = eval_imm(stmt.operands[1]);
        } else if (m == "jal") {
            if (stmt.operands.size() == 1) {
                inst.rd = 1;
                inst.imm = branch_offset(stmt.operands[0]);
            } else {
                need_operands(stmt, 2);
                inst.rd = static_cast<uint8_t>(parse_reg(stmt.operands[0]));
                inst.imm = branch_offset(stmt.operands[1]);
            }
            inst.op = Opcode::Jal;
        } else if (m == "jalr") {
            inst.op = Opcode::Jalr;
            if (stmt.operands.size() == 1) {
                inst.rd = 1;
                inst.rs1 = static_cast<uint8_t>(parse_reg(stmt.operands[0]));
            } else {
                need_operands(stmt, 2);
                inst.rd = static_cast<uint8_t>(parse_reg(stmt.operands[0]));
                std::string_view rhs = trim(stmt.operands[1]);
                if (rhs.find('(') != std::string_view::npos) {
                    auto [offset, reg] = parse_mem_operand(rhs);
                    inst.imm = offset;
                    inst.rs1 = static_cast<uint8_t>(reg);
                } else {
                    inst.rs1 = static_cast<uint8_t>(parse_reg(rhs));
                }
            }
        } else if (m == "csrrw" || m == "csrrs") {
            need_operands(stmt, 3);
            inst.op = m == "csrrw" ? Opcode::CsrReadWrite : Opcode::CsrReadSet;
            inst.rd = static_cast<uint8_t>(parse_reg(stmt.operands[0]));
            inst.csr = parse_csr(stmt.operands[1]);
            inst.rs1 = static_cast<uint8_t>(parse_reg(stmt.operands[2]));
        } else if (m == "csrr") {
            need_operands(stmt, 2);
            inst.op = Opcode::CsrReadSet;
            inst.rd = static_cast<uint8_t>(parse_reg(stmt.operands[0]));
            inst.csr = parse_csr(stmt.operands[1]);
        } else if (m == "csrw") {
            need_operands(stmt, 2);
            inst.op = Opcode::CsrReadWrite;
            inst.csr = parse_csr(stmt.operands[0]);
            inst.rs1 = static_cast<uint8_t>(parse_reg(stmt.operands[1]));
        } else if (m == "ecall") {
            need_operands(stmt, 0);
            inst.op = Opcode::Ecall;
        } else if (m == "ebreak") {
            need_operands(stmt, 0);
            inst.op = Opcode::Ebreak;
        } else if (m == "nop") {
            need_operands(stmt, 0);
            inst.op = Opcode::AluImm;
        } else if (m == "mv") {
            need_operands(stmt, 2);
            inst.op = Opcode::AluImm;
            inst.rd = static_cast<uint8_t>(parse_reg(stmt.operands[0]));
            inst.rs1 = static_cast<uint8_t>(parse_reg(stmt.operands[1]));
        } else if (m == "li" || m == "la") {
            need_operands(stmt, 2);
            int rd = parse_reg(stmt.operands[0]);
            if (stmt.size == 8) {
                wide_li(rd, static_cast<uint32_t>(eval_imm(stmt.operands[1])));
                return;
            }
            inst.op = Opcode::AluImm;
            inst.rd = static_cast<uint8_t>(rd);
            inst.imm = eval_imm(stmt.operands[1]);
        } else if (m == "j") {
            need_operands(stmt, 1);
            inst.op = Opcode::Jal;
            inst.imm = branch_offset(stmt.operands[0]);
        } else if (m == "call") {
            need_operands(stmt, 1);
            inst.op = Opcode::Jal;
            inst.rd = 1;
            if (!is_ident(trim(stmt.operands[0])))
                fail(AsmErrorKind::SyntaxError, "call needs a label");
            inst.imm = branch_offset(stmt.operands[0]);
        } else if (m == "ret") {
            need_operands(stmt, 0);
            inst.op = Opcode::Jalr;
            inst.rs1 = 1;
        } else {
            fail(AsmErrorKind::SyntaxError, "unknown mnemonic '" + m + "'");
        }
        words.push_back(encode_checked(inst));
    }

    ProgramImage pass2() {
        // segment id -> {base, bytes}
        std::map<int, Segment> segments;
        for (const Stmt& stmt : stmts_) {
            line_no_ = stmt.line;
            auto it = segments.find(stmt.segment);
            if (it == segments.end()) {
                Segment seg;
                seg.base = stmt.addr;
                it = segments.emplace(stmt.segment, std::move(seg)).first;
            }
            std::vector<uint8_t>& bytes = it->second.bytes;
            auto put_u32 = [&bytes](uint32_t v) {
                bytes.push_back(static_cast<uint8_t>(v));
                bytes.push_back(static_cast<uint8_t>(v >> 8));
                bytes.push_back(static_cast<uint8_t>(v >> 16));
                bytes.push_back(static_cast<uint8_t>(v >> 24));
            };
            switch (stmt.kind) {
            case Stmt::Kind::Instr: {
                std::vector<uint32_t> words;
                emit_instruction(stmt, words);
                if (words.size() * 4 != stmt.size)
                    fail(AsmErrorKind::SyntaxError, "internal: instruction size mismatch");
                for (uint32_t w : words) put_u32(w);
                break;
            }
            case Stmt::Kind::Word:
                for (const auto& expr : stmt.operands)
                    put_u32(static_cast<uint32_t>(eval_imm(expr)));
                break;
            case Stmt::Kind::Byte:
                for (const auto& expr : stmt.operands) {
                    int64_t v = eval_expr(expr);
                    if (v < -128 || v > 255)
                        fail(AsmErrorKind::ImmediateOutOfRange, "byte value out of range");
                    bytes.push_back(static_cast<uint8_t>(v));
                }
                break;
            case Stmt::Kind::Asciz:
                bytes.insert(bytes.end(), stmt.text.begin(), stmt.text.end());
                bytes.push_back(0);
                break;
            case Stmt::Kind::Space:
                bytes.insert(bytes.end(), stmt.size, stmt.fill);
                break;
            case Stmt::Kind::Align:
                bytes.insert(bytes.end(), stmt.size, 0);
                break;
            }
        }

        ProgramImage image;
        image.entry = entry_;
        image.primary_start = primary_start_;
        image.primary_end = primary_end_;
        for (auto& [id, seg] : segments) {
            (void)id;
            if (!seg.bytes.empty()) image.segments.push_back(std::move(seg));
        }
        image.symbols = symbols_;

        std::vector<std::pair<uint64_t, uint64_t>> spans;
        for (const auto& seg : image.segments) spans.push_back({seg.base, seg.end()});
        std::sort(spans.begin(), spans.end());
        for (size_t i = 1; i < spans.size(); ++i)
            if (spans[i].first < spans[i - 1].second)
                throw AsmError(AsmErrorKind::OverlappingSegments, 0,
                               "segments overlap at address " + std::to_string(spans[i].first));

        try {
            image.validate();
        } catch (const ImageError& e) {
            throw AsmError(AsmErrorKind::SyntaxError, 0, e.what());
        }
        return image;
    }
};

}  // namespace

const char* asm_error_name(AsmErrorKind kind) {
    switch (kind) {
    case AsmErrorKind::SyntaxError: return "SyntaxError";
    case AsmErrorKind::UnresolvedLabel: return "UnresolvedLabel";
    case AsmErrorKind::MissingPrimaryRange: return "MissingPrimaryRange";
    case AsmErrorKind::OverlappingSegments: return "OverlappingSegments";
    case AsmErrorKind::ImmediateOutOfRange: return "ImmediateOutOfRange";
    case AsmErrorKind::IndexOutOfRange: return "IndexOutOfRange";
    case AsmErrorKind::StaticRegionError: return "StaticRegionError";
    case AsmErrorKind::UnknownLength: return "UnknownLength";
    }
    return "?";
}

ProgramImage assemble(std::string_view source) { return Assembler{}.run(source); }

ProgramImage assemble_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw AsmError(AsmErrorKind::SyntaxError, 0, "cannot read " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return assemble(buf.str());
}

}  // namespace pulp
