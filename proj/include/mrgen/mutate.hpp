#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include "mrgen/mulang.hpp"
#include "mrgen/rng.hpp"

// Seeds one-node faults into a checked subject program a la classical
// mutation operators: arithmetic / relational / logical operator
// replacement, constant replacement, boolean literal flips, and statement
// deletion. Variants that no longer type check are stillborn and dropped.

namespace mrgen {

struct Mutant {
    std::string id; // name@opcode:node-id[:variant]
    std::string base_name;
    std::string opcode;
    int node = -1;
    int variant = -1;
    int line = 0, col = 0;
    std::string original_token;
    std::string mutated_token;
    SubjectProgram program;
};

struct MutantSet {
    std::vector<Mutant> train;
    std::vector<Mutant> eval;
    std::string warning; // nonempty when the split degenerated
};

namespace detail {

inline Expr* find_expr_in(Expr& e, int id) {
    if (e.id == id) return &e;
    for (Expr& k : e.kids)
        if (Expr* hit = find_expr_in(k, id)) return hit;
    return nullptr;
}

inline Expr* find_expr(std::vector<Stmt>& body, int id);

inline Expr* find_expr(Stmt& s, int id) {
    if (s.value)
        if (Expr* hit = find_expr_in(*s.value, id)) return hit;
    if (Expr* hit = find_expr(s.then_body, id)) return hit;
    return find_expr(s.else_body, id);
}

inline Expr* find_expr(std::vector<Stmt>& body, int id) {
    for (Stmt& s : body)
        if (Expr* hit = find_expr(s, id)) return hit;
    return nullptr;
}

inline bool delete_stmt(std::vector<Stmt>& body, int id) {
    for (std::size_t i = 0; i < body.size(); ++i) {
        if (body[i].id == id) {
            body.erase(body.begin() + static_cast<std::ptrdiff_t>(i));
            return true;
        }
        if (delete_stmt(body[i].then_body, id)) return true;
        if (delete_stmt(body[i].else_body, id)) return true;
    }
    return false;
}

inline std::string squash_ws(const std::string& s) {
    std::string out;
    bool in_ws = false;
    for (char c : s) {
        if (c == ' ' || c == '\n' || c == '\t') {
            in_ws = true;
            continue;
        }
        if (in_ws && !out.empty()) out += ' ';
        in_ws = false;
        out += c;
    }
    return out;
}

inline int opcode_rank(const std::string& op) {
    static const char* order[] = {"AOR", "ROR", "LOR", "CRP", "BLF", "STD"};
    for (int i = 0; i < 6; ++i)
        if (op == order[i]) return i;
    return 6;
}

struct Candidate {
    std::string opcode;
    int node;
    int variant; // -1 when the site has a single variant
    int line, col;
    std::string original_token;
    std::string mutated_token;
    // how to apply, resolved when materializing
    enum class Kind { BinOpSwap, ConstReplace, BoolFlip, StmtDelete } kind;
    BinOp new_bin = BinOp::Add;
    double new_const = 0.0;
};

inline void collect_expr_sites(const Expr& e, std::vector<Candidate>& out) {
    if (e.kind == ExprKind::Binary) {
        auto add = [&](const char* opcode, BinOp nb, int variant) {
            Candidate c;
            c.opcode = opcode;
            c.node = e.id;
            c.variant = variant;
            c.line = e.line;
            c.col = e.col;
            c.original_token = binop_token(e.bin);
            c.mutated_token = binop_token(nb);
            c.kind = Candidate::Kind::BinOpSwap;
            c.new_bin = nb;
            out.push_back(std::move(c));
        };
        switch (e.bin) {
        case BinOp::Add: add("AOR", BinOp::Sub, -1); break;
        case BinOp::Sub: add("AOR", BinOp::Add, -1); break;
        case BinOp::Mul: add("AOR", BinOp::Div, -1); break;
        case BinOp::Div: add("AOR", BinOp::Mul, -1); break;
        case BinOp::And: add("LOR", BinOp::Or, -1); break;
        case BinOp::Or: add("LOR", BinOp::And, -1); break;
        case BinOp::Eq:
        case BinOp::Ne:
        case BinOp::Lt:
        case BinOp::Gt:
        case BinOp::Le:
        case BinOp::Ge: {
            static const BinOp rel[] = {BinOp::Eq, BinOp::Ne, BinOp::Lt,
                                        BinOp::Gt, BinOp::Le, BinOp::Ge};
            int variant = 0;
            for (BinOp target : rel) {
                if (target == e.bin) continue;
                add("ROR", target, variant++);
            }
            break;
        }
        default: break; // %, &, >> are left alone
        }
    } else if (e.kind == ExprKind::NumLit) {
        std::vector<double> replacements;
        for (double r : {e.num + 1, e.num - 1, 0.0, -e.num}) {
            if (r == e.num) continue;
            if (std::find(replacements.begin(), replacements.end(), r) !=
                replacements.end())
                continue;
            replacements.push_back(r);
        }
        int variant = 0;
        for (double r : replacements) {
            Candidate c;
            c.opcode = "CRP";
            c.node = e.id;
            c.variant = variant++;
            c.line = e.line;
            c.col = e.col;
            c.original_token = render_num(e.num);
            c.mutated_token = render_num(r);
            c.kind = Candidate::Kind::ConstReplace;
            c.new_const = r;
            out.push_back(std::move(c));
        }
    } else if (e.kind == ExprKind::BoolLit) {
        Candidate c;
        c.opcode = "BLF";
        c.node = e.id;
        c.variant = -1;
        c.line = e.line;
        c.col = e.col;
        c.original_token = e.bval ? "true" : "false";
        c.mutated_token = e.bval ? "false" : "true";
        c.kind = Candidate::Kind::BoolFlip;
        out.push_back(std::move(c));
    }
    for (const Expr& k : e.kids) collect_expr_sites(k, out);
}

inline void collect_stmt_sites(const Stmt& s, std::vector<Candidate>& out) {
    if (s.kind != StmtKind::Return && s.kind != StmtKind::Let) {
        Candidate c;
        c.opcode = "STD";
        c.node = s.id;
        c.variant = -1;
        c.line = s.line;
        c.col = s.col;
        c.original_token = squash_ws(render_stmt_text(s));
        c.mutated_token = "";
        c.kind = Candidate::Kind::StmtDelete;
        out.push_back(std::move(c));
    }
    if (s.value) collect_expr_sites(*s.value, out);
    for (const Stmt& k : s.then_body) collect_stmt_sites(k, out);
    for (const Stmt& k : s.else_body) collect_stmt_sites(k, out);
}

inline bool recheck(SubjectProgram& p) {
    try {
        detail::typecheck::Checker checker(p.signature);
        checker.check_body(p.body, p.signature.output);
        return true;
    } catch (const MulangError&) {
        return false;
    }
}

} // namespace detail

/// Applies every applicable mutation operator at every site, dropping
/// stillborn variants. Deterministic order: (node-id, opcode, variant).
/// Node ids of surviving nodes are shared with the base program.
inline std::vector<Mutant> generate_mutants(const SubjectProgram& program) {
    std::vector<detail::Candidate> sites;
    for (const Stmt& s : program.body) detail::collect_stmt_sites(s, sites);

    std::sort(sites.begin(), sites.end(),
              [](const detail::Candidate& a, const detail::Candidate& b) {
                  if (a.node != b.node) return a.node < b.node;
                  int ra = detail::opcode_rank(a.opcode);
                  int rb = detail::opcode_rank(b.opcode);
                  if (ra != rb) return ra < rb;
                  return a.variant < b.variant;
              });

    std::vector<Mutant> out;
    for (const detail::Candidate& c : sites) {
        SubjectProgram variant = program;
        bool applied = false;
        switch (c.kind) {
        case detail::Candidate::Kind::BinOpSwap:
        case detail::Candidate::Kind::ConstReplace:
        case detail::Candidate::Kind::BoolFlip: {
            Expr* e = detail::find_expr(variant.body, c.node);
            if (!e) break;
            if (c.kind == detail::Candidate::Kind::BinOpSwap)
                e->bin = c.new_bin;
            else if (c.kind == detail::Candidate::Kind::ConstReplace)
                e->num = c.new_const;
            else
                e->bval = !e->bval;
            applied = true;
            break;
        }
        case detail::Candidate::Kind::StmtDelete:
            applied = detail::delete_stmt(variant.body, c.node);
            break;
        }
        if (!applied || !detail::recheck(variant)) continue; // stillborn

        Mutant m;
        m.base_name = program.name;
        m.opcode = c.opcode;
        m.node = c.node;
        m.variant = c.variant;
        m.line = c.line;
        m.col = c.col;
        m.original_token = c.original_token;
        m.mutated_token = c.mutated_token;
        m.id = program.name + "@" + c.opcode + ":" + std::to_string(c.node);
        if (c.variant >= 0) m.id += ":" + std::to_string(c.variant);
        m.program = std::move(variant);
        m.program.name = program.name;
        out.push_back(std::move(m));
    }
    return out;
}

/// Seeded disjoint train/eval partition. Both sides are nonempty whenever
/// at least two mutants exist; otherwise everything trains and a warning is
/// reported.
inline MutantSet split_mutants(std::vector<Mutant> mutants,
                               double eval_fraction, std::uint64_t seed) {
    if (!(eval_fraction > 0.0 && eval_fraction < 1.0))
        throw std::invalid_argument("eval_fraction must be in (0, 1)");
    MutantSet set;
    std::size_t n = mutants.size();
    if (n < 2) {
        set.train = std::move(mutants);
        set.warning = "fewer than 2 mutants; evaluation split is empty";
        return set;
    }
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    Rng rng(derive_seed(seed, "mutant-split"));
    for (std::size_t i = n - 1; i > 0; --i)
        std::swap(idx[i], idx[rng.next_index(i + 1)]);

    auto eval_count = static_cast<std::size_t>(
        std::llround(eval_fraction * static_cast<double>(n)));
    eval_count = std::clamp<std::size_t>(eval_count, 1, n - 1);
    for (std::size_t i = 0; i < n; ++i) {
        if (i < eval_count)
            set.eval.push_back(std::move(mutants[idx[i]]));
        else
            set.train.push_back(std::move(mutants[idx[i]]));
    }
    auto by_id = [](const Mutant& a, const Mutant& b) { return a.id < b.id; };
    std::sort(set.train.begin(), set.train.end(), by_id);
    std::sort(set.eval.begin(), set.eval.end(), by_id);
    return set;
}

// ---------------------------------------------------------------------------
// Manifest: one line per mutant,
// id <TAB> operator <TAB> source-location <TAB> original -> mutated

inline std::string manifest_line(const Mutant& m) {
    return m.id + "\t" + m.opcode + "\t" + std::to_string(m.line) + ":" +
           std::to_string(m.col) + "\t" + m.original_token + " -> " +
           m.mutated_token;
}

inline std::string render_manifest(const std::vector<Mutant>& mutants) {
    std::string out;
    for (const Mutant& m : mutants) {
        out += manifest_line(m);
        out += "\n";
    }
    return out;
}

} // namespace mrgen
