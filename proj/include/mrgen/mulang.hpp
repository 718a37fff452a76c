#pragma once

#include <cctype>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "mrgen/value.hpp"

// Parser, type checker, and renderer for the small imperative language the
// subject functions are written in. One function per file; statements are
// let/assign, if/else, while, return, throw, and nested blocks; numbers are
// IEEE doubles (bitwise built-ins truncate toward zero first).

namespace mrgen {

struct MulangError : std::runtime_error {
    MulangError(std::string msg, int line, int col)
        : std::runtime_error(std::move(msg)), line(line), col(col) {}
    int line;
    int col;
};

enum class ExprKind { NumLit, BoolLit, SeqLit, Var, Unary, Binary, Index, Slice, Len };
enum class UnOp { Neg, Not };
enum class BinOp { Add, Sub, Mul, Div, Mod, BitAnd, Shr, Eq, Ne, Lt, Gt, Le, Ge, And, Or };

struct Expr {
    int id = -1;
    int line = 0, col = 0;
    ExprKind kind = ExprKind::NumLit;
    double num = 0.0;        // NumLit
    bool bval = false;       // BoolLit
    std::string name;        // Var
    UnOp un = UnOp::Neg;     // Unary
    BinOp bin = BinOp::Add;  // Binary
    std::vector<Expr> kids;  // operands / sequence elements
    TypeTag type = TypeTag::Num; // set by the type checker
};

enum class StmtKind { Let, Assign, If, While, Return, Throw, Block };

struct Stmt {
    int id = -1;
    int line = 0, col = 0;
    StmtKind kind = StmtKind::Block;
    std::string name;             // let/assign target, throw error kind
    std::optional<Expr> value;    // rhs / condition / return value
    std::vector<Stmt> then_body;  // if-then, while body, block statements
    std::vector<Stmt> else_body;  // if-else
};

struct SubjectProgram {
    std::string name;
    Signature signature;
    std::vector<Stmt> body;
    std::string source_text;
    int node_count = 0; // node ids are 0 .. node_count-1, preorder
};

inline const char* binop_token(BinOp op) {
    switch (op) {
    case BinOp::Add: return "+";
    case BinOp::Sub: return "-";
    case BinOp::Mul: return "*";
    case BinOp::Div: return "/";
    case BinOp::Mod: return "%";
    case BinOp::BitAnd: return "&";
    case BinOp::Shr: return ">>";
    case BinOp::Eq: return "==";
    case BinOp::Ne: return "!=";
    case BinOp::Lt: return "<";
    case BinOp::Gt: return ">";
    case BinOp::Le: return "<=";
    case BinOp::Ge: return ">=";
    case BinOp::And: return "&&";
    case BinOp::Or: return "||";
    }
    return "?";
}

// ---------------------------------------------------------------------------
// Lexer

namespace detail {

enum class TokKind { Ident, Number, Punct, End };

struct Token {
    TokKind kind = TokKind::End;
    std::string text;
    double num = 0.0;
    int line = 1, col = 1;
};

class Lexer {
public:
    explicit Lexer(std::string_view src) : src_(src) { advance(); }

    const Token& peek() const { return tok_; }

    Token take() {
        Token t = tok_;
        advance();
        return t;
    }

private:
    void advance() {
        skip_ws();
        tok_.line = line_;
        tok_.col = col_;
        if (pos_ >= src_.size()) {
            tok_.kind = TokKind::End;
            tok_.text = "<end>";
            return;
        }
        char c = src_[pos_];
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t start = pos_;
            while (pos_ < src_.size() &&
                   (std::isalnum(static_cast<unsigned char>(src_[pos_])) ||
                    src_[pos_] == '_'))
                bump();
            tok_.kind = TokKind::Ident;
            tok_.text = std::string(src_.substr(start, pos_ - start));
            return;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) ||
            (c == '.' && pos_ + 1 < src_.size() &&
             std::isdigit(static_cast<unsigned char>(src_[pos_ + 1])))) {
            std::size_t start = pos_;
            while (pos_ < src_.size() &&
                   (std::isdigit(static_cast<unsigned char>(src_[pos_])) ||
                    src_[pos_] == '.' || src_[pos_] == 'e' || src_[pos_] == 'E' ||
                    ((src_[pos_] == '+' || src_[pos_] == '-') && pos_ > start &&
                     (src_[pos_ - 1] == 'e' || src_[pos_ - 1] == 'E'))))
                bump();
            tok_.kind = TokKind::Number;
            tok_.text = std::string(src_.substr(start, pos_ - start));
            try {
                tok_.num = parse_num(tok_.text);
            } catch (const std::exception&) {
                throw MulangError("malformed number '" + tok_.text + "'", tok_.line,
                                  tok_.col);
            }
            return;
        }
        // multi-char punctuation first
        static const char* two[] = {"->", "==", "!=", "<=", ">=", "&&", "||", ">>"};
        for (const char* p : two) {
            if (src_.substr(pos_, 2) == p) {
                tok_.kind = TokKind::Punct;
                tok_.text = p;
                bump();
                bump();
                return;
            }
        }
        static const std::string_view singles = "(){}[],;:=<>+-*/%&!";
        if (singles.find(c) != std::string_view::npos) {
            tok_.kind = TokKind::Punct;
            tok_.text = std::string(1, c);
            bump();
            return;
        }
        throw MulangError(std::string("unexpected character '") + c + "'", line_,
                          col_);
    }

    void skip_ws() {
        while (pos_ < src_.size()) {
            char c = src_[pos_];
            if (c == '/' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '/') {
                while (pos_ < src_.size() && src_[pos_] != '\n') bump();
            } else if (std::isspace(static_cast<unsigned char>(c))) {
                bump();
            } else {
                break;
            }
        }
    }

    void bump() {
        if (src_[pos_] == '\n') {
            ++line_;
            col_ = 1;
        } else {
            ++col_;
        }
        ++pos_;
    }

    std::string_view src_;
    std::size_t pos_ = 0;
    int line_ = 1, col_ = 1;
    Token tok_;
};

// ---------------------------------------------------------------------------
// Parser

class Parser {
public:
    explicit Parser(std::string_view src) : lex_(src) {}

    SubjectProgram parse() {
        SubjectProgram p;
        expect_ident("fn");
        p.name = take_name("function name");
        expect_punct("(");
        while (true) {
            std::string pname = take_name("parameter name");
            expect_punct(":");
            TypeTag tag = take_type();
            for (const auto& prev : p.signature.params)
                if (prev.first == pname)
                    err("duplicate parameter '" + pname + "'");
            p.signature.params.emplace_back(pname, tag);
            if (peek_punct(",")) {
                lex_.take();
                continue;
            }
            break;
        }
        expect_punct(")");
        expect_punct("->");
        p.signature.output = take_type();
        p.body = parse_block();
        if (lex_.peek().kind != detail::TokKind::End)
            err("trailing input after function body");
        return p;
    }

private:
    [[noreturn]] void err(const std::string& msg) {
        const Token& t = lex_.peek();
        throw MulangError(msg + " (got '" + t.text + "')", t.line, t.col);
    }

    bool peek_punct(std::string_view p) {
        return lex_.peek().kind == TokKind::Punct && lex_.peek().text == p;
    }
    bool peek_ident(std::string_view name) {
        return lex_.peek().kind == TokKind::Ident && lex_.peek().text == name;
    }
    Token expect_punct(std::string_view p) {
        if (!peek_punct(p)) err("expected '" + std::string(p) + "'");
        return lex_.take();
    }
    void expect_ident(std::string_view name) {
        if (!peek_ident(name)) err("expected '" + std::string(name) + "'");
        lex_.take();
    }
    std::string take_name(const char* what) {
        if (lex_.peek().kind != TokKind::Ident)
            err(std::string("expected ") + what);
        if (is_keyword(lex_.peek().text))
            err("'" + lex_.peek().text + "' is a keyword");
        return lex_.take().text;
    }
    static bool is_keyword(const std::string& s) {
        static const char* kw[] = {"fn", "let", "if", "else", "while", "return",
                                   "throw", "true", "false", "num", "bool",
                                   "seq", "len"};
        for (const char* k : kw)
            if (s == k) return true;
        return false;
    }
    TypeTag take_type() {
        if (peek_ident("num")) return lex_.take(), TypeTag::Num;
        if (peek_ident("bool")) return lex_.take(), TypeTag::Bool;
        if (peek_ident("seq")) return lex_.take(), TypeTag::Seq;
        err("expected a type (num, bool, seq)");
    }

    std::vector<Stmt> parse_block() {
        expect_punct("{");
        std::vector<Stmt> out;
        while (!peek_punct("}")) out.push_back(parse_stmt());
        lex_.take();
        return out;
    }

    Stmt parse_stmt() {
        Stmt s;
        s.line = lex_.peek().line;
        s.col = lex_.peek().col;
        if (peek_ident("let")) {
            lex_.take();
            s.kind = StmtKind::Let;
            s.name = take_name("variable name");
            expect_punct("=");
            s.value = parse_expr();
            expect_punct(";");
            return s;
        }
        if (peek_ident("if")) {
            lex_.take();
            s.kind = StmtKind::If;
            expect_punct("(");
            s.value = parse_expr();
            expect_punct(")");
            s.then_body = parse_block();
            if (peek_ident("else")) {
                lex_.take();
                if (peek_ident("if")) {
                    s.else_body.push_back(parse_stmt());
                } else {
                    s.else_body = parse_block();
                }
            }
            return s;
        }
        if (peek_ident("while")) {
            lex_.take();
            s.kind = StmtKind::While;
            expect_punct("(");
            s.value = parse_expr();
            expect_punct(")");
            s.then_body = parse_block();
            return s;
        }
        if (peek_ident("return")) {
            lex_.take();
            s.kind = StmtKind::Return;
            s.value = parse_expr();
            expect_punct(";");
            return s;
        }
        if (peek_ident("throw")) {
            lex_.take();
            s.kind = StmtKind::Throw;
            s.name = take_name("error kind");
            expect_punct(";");
            return s;
        }
        if (peek_punct("{")) {
            s.kind = StmtKind::Block;
            s.then_body = parse_block();
            return s;
        }
        if (lex_.peek().kind == TokKind::Ident) {
            s.kind = StmtKind::Assign;
            s.name = take_name("assignment target");
            expect_punct("=");
            s.value = parse_expr();
            expect_punct(";");
            return s;
        }
        err("expected a statement");
    }

    Expr parse_expr() { return parse_or(); }

    Expr mk_bin(BinOp op, Expr lhs, Expr rhs, int line, int col) {
        Expr e;
        e.kind = ExprKind::Binary;
        e.bin = op;
        e.line = line;
        e.col = col;
        e.kids.push_back(std::move(lhs));
        e.kids.push_back(std::move(rhs));
        return e;
    }

    Expr parse_or() {
        Expr lhs = parse_and();
        while (peek_punct("||")) {
            Token t = lex_.take();
            lhs = mk_bin(BinOp::Or, std::move(lhs), parse_and(), t.line, t.col);
        }
        return lhs;
    }

    Expr parse_and() {
        Expr lhs = parse_cmp();
        while (peek_punct("&&")) {
            Token t = lex_.take();
            lhs = mk_bin(BinOp::And, std::move(lhs), parse_cmp(), t.line, t.col);
        }
        return lhs;
    }

    Expr parse_cmp() {
        Expr lhs = parse_add();
        static const std::pair<const char*, BinOp> ops[] = {
            {"==", BinOp::Eq}, {"!=", BinOp::Ne}, {"<=", BinOp::Le},
            {">=", BinOp::Ge}, {"<", BinOp::Lt},  {">", BinOp::Gt}};
        for (const auto& [tok, op] : ops) {
            if (peek_punct(tok)) {
                Token t = lex_.take();
                return mk_bin(op, std::move(lhs), parse_add(), t.line, t.col);
            }
        }
        return lhs;
    }

    Expr parse_add() {
        Expr lhs = parse_mul();
        while (peek_punct("+") || peek_punct("-")) {
            Token t = lex_.take();
            BinOp op = t.text == "+" ? BinOp::Add : BinOp::Sub;
            lhs = mk_bin(op, std::move(lhs), parse_mul(), t.line, t.col);
        }
        return lhs;
    }

    Expr parse_mul() {
        Expr lhs = parse_unary();
        while (peek_punct("*") || peek_punct("/") || peek_punct("%") ||
               peek_punct("&") || peek_punct(">>")) {
            Token t = lex_.take();
            BinOp op = t.text == "*"   ? BinOp::Mul
                       : t.text == "/" ? BinOp::Div
                       : t.text == "%" ? BinOp::Mod
                       : t.text == "&" ? BinOp::BitAnd
                                       : BinOp::Shr;
            lhs = mk_bin(op, std::move(lhs), parse_unary(), t.line, t.col);
        }
        return lhs;
    }

    Expr parse_unary() {
        if (peek_punct("-") || peek_punct("!")) {
            Token t = lex_.take();
            Expr e;
            e.kind = ExprKind::Unary;
            e.un = t.text == "-" ? UnOp::Neg : UnOp::Not;
            e.line = t.line;
            e.col = t.col;
            e.kids.push_back(parse_unary());
            return e;
        }
        return parse_postfix();
    }

    Expr parse_postfix() {
        Expr e = parse_primary();
        while (peek_punct("[")) {
            Token t = lex_.take();
            Expr idx = parse_expr();
            if (peek_punct(":")) {
                lex_.take();
                Expr hi = parse_expr();
                Expr slice;
                slice.kind = ExprKind::Slice;
                slice.line = t.line;
                slice.col = t.col;
                slice.kids.push_back(std::move(e));
                slice.kids.push_back(std::move(idx));
                slice.kids.push_back(std::move(hi));
                e = std::move(slice);
            } else {
                Expr ix;
                ix.kind = ExprKind::Index;
                ix.line = t.line;
                ix.col = t.col;
                ix.kids.push_back(std::move(e));
                ix.kids.push_back(std::move(idx));
                e = std::move(ix);
            }
            expect_punct("]");
        }
        return e;
    }

    Expr parse_primary() {
        const Token& t = lex_.peek();
        Expr e;
        e.line = t.line;
        e.col = t.col;
        if (t.kind == TokKind::Number) {
            e.kind = ExprKind::NumLit;
            e.num = lex_.take().num;
            return e;
        }
        if (peek_ident("true") || peek_ident("false")) {
            e.kind = ExprKind::BoolLit;
            e.bval = lex_.take().text == "true";
            return e;
        }
        if (peek_ident("len")) {
            lex_.take();
            expect_punct("(");
            e.kind = ExprKind::Len;
            e.kids.push_back(parse_expr());
            expect_punct(")");
            return e;
        }
        if (t.kind == TokKind::Ident) {
            if (is_keyword(t.text)) err("unexpected keyword");
            e.kind = ExprKind::Var;
            e.name = lex_.take().text;
            return e;
        }
        if (peek_punct("(")) {
            lex_.take();
            Expr inner = parse_expr();
            expect_punct(")");
            return inner;
        }
        if (peek_punct("[")) {
            lex_.take();
            e.kind = ExprKind::SeqLit;
            if (!peek_punct("]")) {
                e.kids.push_back(parse_expr());
                while (peek_punct(",")) {
                    lex_.take();
                    e.kids.push_back(parse_expr());
                }
            }
            expect_punct("]");
            return e;
        }
        err("expected an expression");
    }

    Lexer lex_;
};

// ---------------------------------------------------------------------------
// Node numbering (preorder, statements and expressions share one counter)

inline void number_expr(Expr& e, int& next) {
    e.id = next++;
    for (Expr& k : e.kids) number_expr(k, next);
}

inline void number_stmt(Stmt& s, int& next) {
    s.id = next++;
    if (s.value) number_expr(*s.value, next);
    for (Stmt& k : s.then_body) number_stmt(k, next);
    for (Stmt& k : s.else_body) number_stmt(k, next);
}

inline void renumber(SubjectProgram& p) {
    int next = 0;
    for (Stmt& s : p.body) number_stmt(s, next);
    p.node_count = next;
}

// ---------------------------------------------------------------------------
// Type checker

namespace typecheck {

struct Scope {
    std::vector<std::pair<std::string, TypeTag>> vars;
};

class Checker {
public:
    explicit Checker(const Signature& sig) {
        scopes_.emplace_back();
        for (const auto& [name, tag] : sig.params)
            scopes_.back().vars.emplace_back(name, tag);
    }

    void check_body(std::vector<Stmt>& body, TypeTag out) {
        out_ = out;
        bool terminates = check_stmts(body);
        if (!terminates)
            throw MulangError("not every path returns or throws", 1, 1);
    }

private:
    const TypeTag* lookup(const std::string& name) const {
        for (auto it = scopes_.rbegin(); it != scopes_.rend(); ++it)
            for (const auto& [n, t] : it->vars)
                if (n == name) return &t;
        return nullptr;
    }

    bool declared_anywhere(const std::string& name) const {
        return lookup(name) != nullptr;
    }

    // Returns true when every path through the statement list terminates.
    bool check_stmts(std::vector<Stmt>& body) {
        bool terminates = false;
        for (Stmt& s : body) terminates = check_stmt(s) || terminates;
        return terminates;
    }

    bool check_stmt(Stmt& s) {
        switch (s.kind) {
        case StmtKind::Let: {
            TypeTag t = check_expr(*s.value);
            if (declared_anywhere(s.name))
                throw MulangError("redeclaration of '" + s.name + "'", s.line,
                                  s.col);
            scopes_.back().vars.emplace_back(s.name, t);
            return false;
        }
        case StmtKind::Assign: {
            const TypeTag* declared = lookup(s.name);
            if (!declared)
                throw MulangError("undeclared variable '" + s.name + "'", s.line,
                                  s.col);
            TypeTag t = check_expr(*s.value);
            if (t != *declared)
                throw MulangError("assignment changes type of '" + s.name + "'",
                                  s.line, s.col);
            return false;
        }
        case StmtKind::If: {
            require(check_expr(*s.value) == TypeTag::Bool, s,
                    "if condition must be bool");
            bool a = check_scoped(s.then_body);
            bool b = s.else_body.empty() ? false : check_scoped(s.else_body);
            return a && b;
        }
        case StmtKind::While: {
            require(check_expr(*s.value) == TypeTag::Bool, s,
                    "while condition must be bool");
            check_scoped(s.then_body);
            return false;
        }
        case StmtKind::Return: {
            TypeTag t = check_expr(*s.value);
            if (t != out_)
                throw MulangError("return type mismatch", s.line, s.col);
            return true;
        }
        case StmtKind::Throw:
            return true;
        case StmtKind::Block:
            return check_scoped(s.then_body);
        }
        return false;
    }

    bool check_scoped(std::vector<Stmt>& body) {
        scopes_.emplace_back();
        bool t = check_stmts(body);
        scopes_.pop_back();
        return t;
    }

    static void require(bool ok, const Stmt& s, const char* msg) {
        if (!ok) throw MulangError(msg, s.line, s.col);
    }

    TypeTag check_expr(Expr& e) {
        e.type = infer(e);
        return e.type;
    }

    TypeTag infer(Expr& e) {
        switch (e.kind) {
        case ExprKind::NumLit: return TypeTag::Num;
        case ExprKind::BoolLit: return TypeTag::Bool;
        case ExprKind::SeqLit:
            for (Expr& k : e.kids)
                if (check_expr(k) != TypeTag::Num)
                    throw MulangError("sequence elements must be num", k.line,
                                      k.col);
            return TypeTag::Seq;
        case ExprKind::Var: {
            const TypeTag* t = lookup(e.name);
            if (!t)
                throw MulangError("undeclared variable '" + e.name + "'", e.line,
                                  e.col);
            return *t;
        }
        case ExprKind::Unary: {
            TypeTag t = check_expr(e.kids[0]);
            if (e.un == UnOp::Neg && t == TypeTag::Num) return TypeTag::Num;
            if (e.un == UnOp::Not && t == TypeTag::Bool) return TypeTag::Bool;
            throw MulangError("unary operator type mismatch", e.line, e.col);
        }
        case ExprKind::Binary: {
            TypeTag a = check_expr(e.kids[0]);
            TypeTag b = check_expr(e.kids[1]);
            switch (e.bin) {
            case BinOp::Add:
                if (a == TypeTag::Num && b == TypeTag::Num) return TypeTag::Num;
                if (a == TypeTag::Seq && b == TypeTag::Seq) return TypeTag::Seq;
                break;
            case BinOp::Sub:
            case BinOp::Mul:
            case BinOp::Div:
            case BinOp::Mod:
            case BinOp::BitAnd:
            case BinOp::Shr:
                if (a == TypeTag::Num && b == TypeTag::Num) return TypeTag::Num;
                break;
            case BinOp::Eq:
            case BinOp::Ne:
            case BinOp::Lt:
            case BinOp::Gt:
            case BinOp::Le:
            case BinOp::Ge:
                if (a == TypeTag::Num && b == TypeTag::Num) return TypeTag::Bool;
                break;
            case BinOp::And:
            case BinOp::Or:
                if (a == TypeTag::Bool && b == TypeTag::Bool)
                    return TypeTag::Bool;
                break;
            }
            throw MulangError(std::string("operator '") + binop_token(e.bin) +
                                  "' operand type mismatch",
                              e.line, e.col);
        }
        case ExprKind::Index:
            if (check_expr(e.kids[0]) == TypeTag::Seq &&
                check_expr(e.kids[1]) == TypeTag::Num)
                return TypeTag::Num;
            throw MulangError("indexing needs seq[num]", e.line, e.col);
        case ExprKind::Slice:
            if (check_expr(e.kids[0]) == TypeTag::Seq &&
                check_expr(e.kids[1]) == TypeTag::Num &&
                check_expr(e.kids[2]) == TypeTag::Num)
                return TypeTag::Seq;
            throw MulangError("slicing needs seq[num:num]", e.line, e.col);
        case ExprKind::Len:
            if (check_expr(e.kids[0]) == TypeTag::Seq) return TypeTag::Num;
            throw MulangError("len needs a seq argument", e.line, e.col);
        }
        throw MulangError("unreachable expression kind", e.line, e.col);
    }

    std::vector<Scope> scopes_;
    TypeTag out_ = TypeTag::Num;
};

} // namespace typecheck

} // namespace detail

/// Type checks in place (fills Expr::type) and assigns node ids.
inline void check_program(SubjectProgram& p) {
    if (p.signature.params.empty())
        throw MulangError("function needs at least one parameter", 1, 1);
    detail::typecheck::Checker checker(p.signature);
    checker.check_body(p.body, p.signature.output);
    detail::renumber(p);
}

inline SubjectProgram parse_program(std::string_view text) {
    detail::Parser parser(text);
    SubjectProgram p = parser.parse();
    p.source_text = std::string(text);
    check_program(p);
    return p;
}

// ---------------------------------------------------------------------------
// Renderer. render(parse(text)) parses back to an identical AST.

namespace detail {

inline int binop_prec(BinOp op) {
    switch (op) {
    case BinOp::Or: return 1;
    case BinOp::And: return 2;
    case BinOp::Eq:
    case BinOp::Ne:
    case BinOp::Lt:
    case BinOp::Gt:
    case BinOp::Le:
    case BinOp::Ge: return 3;
    case BinOp::Add:
    case BinOp::Sub: return 4;
    default: return 5;
    }
}

inline void render_expr(const Expr& e, std::string& out, int parent_prec = 0) {
    switch (e.kind) {
    case ExprKind::NumLit:
        out += render_num(e.num);
        return;
    case ExprKind::BoolLit:
        out += e.bval ? "true" : "false";
        return;
    case ExprKind::SeqLit:
        out += "[";
        for (std::size_t i = 0; i < e.kids.size(); ++i) {
            if (i) out += ", ";
            render_expr(e.kids[i], out);
        }
        out += "]";
        return;
    case ExprKind::Var:
        out += e.name;
        return;
    case ExprKind::Unary:
        out += e.un == UnOp::Neg ? "-" : "!";
        out += "(";
        render_expr(e.kids[0], out);
        out += ")";
        return;
    case ExprKind::Binary: {
        int prec = binop_prec(e.bin);
        bool paren = prec <= parent_prec;
        if (paren) out += "(";
        render_expr(e.kids[0], out, prec - 1);
        out += " ";
        out += binop_token(e.bin);
        out += " ";
        render_expr(e.kids[1], out, prec);
        if (paren) out += ")";
        return;
    }
    case ExprKind::Index:
        render_expr(e.kids[0], out, 6);
        out += "[";
        render_expr(e.kids[1], out);
        out += "]";
        return;
    case ExprKind::Slice:
        render_expr(e.kids[0], out, 6);
        out += "[";
        render_expr(e.kids[1], out);
        out += ":";
        render_expr(e.kids[2], out);
        out += "]";
        return;
    case ExprKind::Len:
        out += "len(";
        render_expr(e.kids[0], out);
        out += ")";
        return;
    }
}

inline void indent(std::string& out, int depth) {
    out.append(static_cast<std::size_t>(depth) * 4, ' ');
}

inline void render_stmts(const std::vector<Stmt>& body, std::string& out,
                         int depth);

inline void render_stmt(const Stmt& s, std::string& out, int depth) {
    indent(out, depth);
    switch (s.kind) {
    case StmtKind::Let:
        out += "let " + s.name + " = ";
        render_expr(*s.value, out);
        out += ";\n";
        return;
    case StmtKind::Assign:
        out += s.name + " = ";
        render_expr(*s.value, out);
        out += ";\n";
        return;
    case StmtKind::If: {
        out += "if (";
        render_expr(*s.value, out);
        out += ") {\n";
        render_stmts(s.then_body, out, depth + 1);
        indent(out, depth);
        out += "}";
        if (!s.else_body.empty()) {
            if (s.else_body.size() == 1 && s.else_body[0].kind == StmtKind::If) {
                out += " else ";
                std::string nested;
                render_stmt(s.else_body[0], nested, depth);
                // strip the leading indentation of the nested if
                out += nested.substr(static_cast<std::size_t>(depth) * 4);
                return;
            }
            out += " else {\n";
            render_stmts(s.else_body, out, depth + 1);
            indent(out, depth);
            out += "}";
        }
        out += "\n";
        return;
    }
    case StmtKind::While:
        out += "while (";
        render_expr(*s.value, out);
        out += ") {\n";
        render_stmts(s.then_body, out, depth + 1);
        indent(out, depth);
        out += "}\n";
        return;
    case StmtKind::Return:
        out += "return ";
        render_expr(*s.value, out);
        out += ";\n";
        return;
    case StmtKind::Throw:
        out += "throw " + s.name + ";\n";
        return;
    case StmtKind::Block:
        out += "{\n";
        render_stmts(s.then_body, out, depth + 1);
        indent(out, depth);
        out += "}\n";
        return;
    }
}

inline void render_stmts(const std::vector<Stmt>& body, std::string& out,
                         int depth) {
    for (const Stmt& s : body) render_stmt(s, out, depth);
}

} // namespace detail

inline std::string render_program(const SubjectProgram& p) {
    std::string out = "fn " + p.name + "(";
    for (std::size_t i = 0; i < p.signature.params.size(); ++i) {
        if (i) out += ", ";
        out += p.signature.params[i].first;
        out += ": ";
        out += tag_name(p.signature.params[i].second);
    }
    out += ") -> ";
    out += tag_name(p.signature.output);
    out += " {\n";
    detail::render_stmts(p.body, out, 1);
    out += "}\n";
    return out;
}

inline std::string render_expr_text(const Expr& e) {
    std::string out;
    detail::render_expr(e, out);
    return out;
}

inline std::string render_stmt_text(const Stmt& s) {
    std::string out;
    detail::render_stmt(s, out, 0);
    while (!out.empty() && (out.back() == '\n' || out.back() == ' '))
        out.pop_back();
    return out;
}

// Structural equality ignoring source positions; used by tests and the
// mutation engine's single-difference check.
inline bool exprs_equal(const Expr& a, const Expr& b) {
    if (a.kind != b.kind || a.kids.size() != b.kids.size()) return false;
    switch (a.kind) {
    case ExprKind::NumLit:
        if (!(a.num == b.num || (std::isnan(a.num) && std::isnan(b.num))))
            return false;
        break;
    case ExprKind::BoolLit:
        if (a.bval != b.bval) return false;
        break;
    case ExprKind::Var:
        if (a.name != b.name) return false;
        break;
    case ExprKind::Unary:
        if (a.un != b.un) return false;
        break;
    case ExprKind::Binary:
        if (a.bin != b.bin) return false;
        break;
    default: break;
    }
    for (std::size_t i = 0; i < a.kids.size(); ++i)
        if (!exprs_equal(a.kids[i], b.kids[i])) return false;
    return true;
}

inline bool stmts_equal(const Stmt& a, const Stmt& b);

inline bool stmt_lists_equal(const std::vector<Stmt>& a,
                             const std::vector<Stmt>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (!stmts_equal(a[i], b[i])) return false;
    return true;
}

inline bool stmts_equal(const Stmt& a, const Stmt& b) {
    if (a.kind != b.kind || a.name != b.name) return false;
    if (a.value.has_value() != b.value.has_value()) return false;
    if (a.value && !exprs_equal(*a.value, *b.value)) return false;
    return stmt_lists_equal(a.then_body, b.then_body) &&
           stmt_lists_equal(a.else_body, b.else_body);
}

inline bool programs_equal(const SubjectProgram& a, const SubjectProgram& b) {
    return a.name == b.name && a.signature.params == b.signature.params &&
           a.signature.output == b.signature.output &&
           stmt_lists_equal(a.body, b.body);
}

} // namespace mrgen
