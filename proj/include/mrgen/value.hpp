#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace mrgen {

enum class TypeTag { Bool, Num, Seq };

inline const char* tag_name(TypeTag t) {
    switch (t) {
    case TypeTag::Bool: return "bool";
    case TypeTag::Num: return "num";
    case TypeTag::Seq: return "seq";
    }
    return "?";
}

/// Runtime value shared by the subject interpreter and the relation
/// evaluator: a boolean, a real number, or an ordered sequence of reals.
/// Strings are modeled as sequences of code points.
class Value {
public:
    Value() : tag_(TypeTag::Num), num_(0.0) {}

    static Value boolean(bool v) {
        Value x;
        x.tag_ = TypeTag::Bool;
        x.bool_ = v;
        return x;
    }
    static Value number(double v) {
        Value x;
        x.tag_ = TypeTag::Num;
        x.num_ = v;
        return x;
    }
    static Value sequence(std::vector<double> v) {
        Value x;
        x.tag_ = TypeTag::Seq;
        x.seq_ = std::move(v);
        return x;
    }

    TypeTag tag() const { return tag_; }
    bool as_bool() const { return bool_; }
    double as_num() const { return num_; }
    const std::vector<double>& as_seq() const { return seq_; }

private:
    TypeTag tag_;
    bool bool_ = false;
    double num_ = 0.0;
    std::vector<double> seq_;
};

/// Ordered parameter list plus output type of a subject function.
struct Signature {
    std::vector<std::pair<std::string, TypeTag>> params;
    TypeTag output = TypeTag::Num;

    int param_index(std::string_view name) const {
        for (std::size_t i = 0; i < params.size(); ++i)
            if (params[i].first == name) return static_cast<int>(i);
        return -1;
    }
};

// ---------------------------------------------------------------------------
// Numeric rendering: shortest decimal that round-trips to the same double.

inline std::string render_num(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline std::string render_value(const Value& v) {
    switch (v.tag()) {
    case TypeTag::Bool: return v.as_bool() ? "true" : "false";
    case TypeTag::Num: return render_num(v.as_num());
    case TypeTag::Seq: {
        std::string out = "[";
        for (std::size_t i = 0; i < v.as_seq().size(); ++i) {
            if (i) out += ",";
            out += render_num(v.as_seq()[i]);
        }
        out += "]";
        return out;
    }
    }
    return "?";
}

inline double parse_num(std::string_view text) {
    if (text == "nan") return std::numeric_limits<double>::quiet_NaN();
    if (text == "inf") return std::numeric_limits<double>::infinity();
    if (text == "-inf") return -std::numeric_limits<double>::infinity();
    double out = 0.0;
    auto res = std::from_chars(text.data(), text.data() + text.size(), out);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size())
        throw std::runtime_error("bad number: '" + std::string(text) + "'");
    return out;
}

inline Value parse_value(std::string_view text) {
    if (text == "true") return Value::boolean(true);
    if (text == "false") return Value::boolean(false);
    if (!text.empty() && text.front() == '[') {
        if (text.back() != ']')
            throw std::runtime_error("unterminated sequence literal");
        std::vector<double> elems;
        std::string_view body = text.substr(1, text.size() - 2);
        while (!body.empty()) {
            std::size_t comma = body.find(',');
            std::string_view tok =
                comma == std::string_view::npos ? body : body.substr(0, comma);
            elems.push_back(parse_num(tok));
            body = comma == std::string_view::npos ? std::string_view{}
                                                   : body.substr(comma + 1);
        }
        return Value::sequence(std::move(elems));
    }
    return Value::number(parse_num(text));
}

// ---------------------------------------------------------------------------
// Equality

/// Relative slack applied on top of the absolute tolerance whenever that
/// tolerance is nonzero. Large outputs (e.g. huge powers) reach the same
/// mathematical value through differently rounded routes; a purely absolute
/// tolerance would flag those as unequal. tol == 0 stays exact.
inline constexpr double kRelEqualityFactor = 1e-12;

inline bool nums_equal(double a, double b, double tol) {
    if (std::isnan(a) || std::isnan(b)) return std::isnan(a) && std::isnan(b);
    if (a == b) return true;
    double diff = std::fabs(a - b);
    if (!std::isfinite(diff)) return false;
    if (diff <= tol) return true;
    if (tol > 0.0 &&
        diff <= kRelEqualityFactor * std::max(std::fabs(a), std::fabs(b)))
        return true;
    return false;
}

/// Tag mismatch compares as unequal rather than erroring; NaN == NaN is true
/// so a mutant that preserves a NaN is not reported as an output difference.
inline bool values_equal(const Value& a, const Value& b, double tol) {
    if (a.tag() != b.tag()) return false;
    switch (a.tag()) {
    case TypeTag::Bool: return a.as_bool() == b.as_bool();
    case TypeTag::Num: return nums_equal(a.as_num(), b.as_num(), tol);
    case TypeTag::Seq: {
        const auto& x = a.as_seq();
        const auto& y = b.as_seq();
        if (x.size() != y.size()) return false;
        for (std::size_t i = 0; i < x.size(); ++i)
            if (!nums_equal(x[i], y[i], tol)) return false;
        return true;
    }
    }
    return false;
}

// ---------------------------------------------------------------------------
// Operator set of the relation-expression language.

enum class Op {
    Add, Sub, Mul, Div,                       // (num, num) -> num
    Abs,                                      // (num) -> num
    NumEq, NumNe, NumLt, NumGt, NumLe, NumGe, // (num, num) -> bool
    ToStr,                                    // (num) -> seq
    And, Or, Xor, Iff, Implies,               // (bool, bool) -> bool
    Not,                                      // (bool) -> bool
    Len, Sum,                                 // (seq) -> num
    SeqEq, SeqNe,                             // (seq, seq) -> bool
    Flip,                                     // (seq) -> seq
    Remove, Truncate,                         // (seq, num) -> seq
};

struct OpInfo {
    Op op;
    const char* name;
    int arity;
    TypeTag args[2];
    TypeTag out;
};

inline constexpr OpInfo kOpTable[] = {
    {Op::Add, "add", 2, {TypeTag::Num, TypeTag::Num}, TypeTag::Num},
    {Op::Sub, "sub", 2, {TypeTag::Num, TypeTag::Num}, TypeTag::Num},
    {Op::Mul, "mul", 2, {TypeTag::Num, TypeTag::Num}, TypeTag::Num},
    {Op::Div, "div", 2, {TypeTag::Num, TypeTag::Num}, TypeTag::Num},
    {Op::Abs, "abs", 1, {TypeTag::Num, TypeTag::Num}, TypeTag::Num},
    {Op::NumEq, "eq", 2, {TypeTag::Num, TypeTag::Num}, TypeTag::Bool},
    {Op::NumNe, "ne", 2, {TypeTag::Num, TypeTag::Num}, TypeTag::Bool},
    {Op::NumLt, "lt", 2, {TypeTag::Num, TypeTag::Num}, TypeTag::Bool},
    {Op::NumGt, "gt", 2, {TypeTag::Num, TypeTag::Num}, TypeTag::Bool},
    {Op::NumLe, "le", 2, {TypeTag::Num, TypeTag::Num}, TypeTag::Bool},
    {Op::NumGe, "ge", 2, {TypeTag::Num, TypeTag::Num}, TypeTag::Bool},
    {Op::ToStr, "tostr", 1, {TypeTag::Num, TypeTag::Num}, TypeTag::Seq},
    {Op::And, "and", 2, {TypeTag::Bool, TypeTag::Bool}, TypeTag::Bool},
    {Op::Or, "or", 2, {TypeTag::Bool, TypeTag::Bool}, TypeTag::Bool},
    {Op::Xor, "xor", 2, {TypeTag::Bool, TypeTag::Bool}, TypeTag::Bool},
    {Op::Iff, "iff", 2, {TypeTag::Bool, TypeTag::Bool}, TypeTag::Bool},
    {Op::Implies, "implies", 2, {TypeTag::Bool, TypeTag::Bool}, TypeTag::Bool},
    {Op::Not, "not", 1, {TypeTag::Bool, TypeTag::Bool}, TypeTag::Bool},
    {Op::Len, "len", 1, {TypeTag::Seq, TypeTag::Seq}, TypeTag::Num},
    {Op::Sum, "sum", 1, {TypeTag::Seq, TypeTag::Seq}, TypeTag::Num},
    {Op::SeqEq, "seqeq", 2, {TypeTag::Seq, TypeTag::Seq}, TypeTag::Bool},
    {Op::SeqNe, "seqne", 2, {TypeTag::Seq, TypeTag::Seq}, TypeTag::Bool},
    {Op::Flip, "flip", 1, {TypeTag::Seq, TypeTag::Seq}, TypeTag::Seq},
    {Op::Remove, "remove", 2, {TypeTag::Seq, TypeTag::Num}, TypeTag::Seq},
    {Op::Truncate, "truncate", 2, {TypeTag::Seq, TypeTag::Num}, TypeTag::Seq},
};

consteval bool op_table_matches_enum() {
    int i = 0;
    for (const OpInfo& info : kOpTable)
        if (info.op != static_cast<Op>(i++)) return false;
    return true;
}
static_assert(op_table_matches_enum(), "operator table order must follow Op");

inline const OpInfo& op_info(Op op) {
    return kOpTable[static_cast<int>(op)];
}

inline const OpInfo* op_by_name(std::string_view name) {
    for (const auto& info : kOpTable)
        if (name == info.name) return &info;
    return nullptr;
}

/// Sequence of code points of the canonical decimal rendering.
inline Value num_to_seq(double v) {
    std::string text = render_num(v);
    std::vector<double> pts;
    pts.reserve(text.size());
    for (unsigned char c : text) pts.push_back(static_cast<double>(c));
    return Value::sequence(std::move(pts));
}

namespace detail {

// Truncate toward zero, clamped to the int64 range.
inline std::int64_t trunc_index(double v) {
    if (std::isnan(v)) return 0;
    if (v >= 9.2e18) return std::numeric_limits<std::int64_t>::max();
    if (v <= -9.2e18) return std::numeric_limits<std::int64_t>::min();
    return static_cast<std::int64_t>(v);
}

} // namespace detail

// Python-style indexing; out-of-range indices are a no-op.
inline std::vector<double> seq_remove(const std::vector<double>& s, double idx) {
    std::int64_t i = detail::trunc_index(idx);
    std::int64_t n = static_cast<std::int64_t>(s.size());
    if (i < 0) i += n;
    if (i < 0 || i >= n) return s;
    std::vector<double> out = s;
    out.erase(out.begin() + static_cast<std::ptrdiff_t>(i));
    return out;
}

// Keep the first n elements, n clamped to [0, length].
inline std::vector<double> seq_truncate(const std::vector<double>& s, double count) {
    std::int64_t n = detail::trunc_index(count);
    n = std::clamp<std::int64_t>(n, 0, static_cast<std::int64_t>(s.size()));
    return std::vector<double>(s.begin(), s.begin() + static_cast<std::ptrdiff_t>(n));
}

/// Evaluates one operator over well-tagged arguments. Total: protected
/// division maps a zero denominator to 1, sequence indices clamp or no-op.
/// A tag/arity mismatch means the caller built an ill-typed tree and is the
/// only error path.
inline Value apply_operator(Op op, std::span<const Value> args,
                            double num_tol = 1e-6) {
    const OpInfo& info = op_info(op);
    if (static_cast<int>(args.size()) != info.arity)
        throw std::logic_error(std::string("operator ") + info.name +
                               ": bad arity");
    for (int i = 0; i < info.arity; ++i)
        if (args[i].tag() != info.args[i])
            throw std::logic_error(std::string("operator ") + info.name +
                                   ": operand tag mismatch");

    auto n = [&](int i) { return args[i].as_num(); };
    auto b = [&](int i) { return args[i].as_bool(); };
    auto s = [&](int i) -> const std::vector<double>& { return args[i].as_seq(); };

    switch (op) {
    case Op::Add: return Value::number(n(0) + n(1));
    case Op::Sub: return Value::number(n(0) - n(1));
    case Op::Mul: return Value::number(n(0) * n(1));
    case Op::Div: return Value::number(n(1) == 0.0 ? 1.0 : n(0) / n(1));
    case Op::Abs: return Value::number(std::fabs(n(0)));
    case Op::NumEq: return Value::boolean(nums_equal(n(0), n(1), num_tol));
    case Op::NumNe: return Value::boolean(!nums_equal(n(0), n(1), num_tol));
    // Comparisons with NaN are false.
    case Op::NumLt: return Value::boolean(n(0) < n(1));
    case Op::NumGt: return Value::boolean(n(0) > n(1));
    case Op::NumLe: return Value::boolean(n(0) <= n(1));
    case Op::NumGe: return Value::boolean(n(0) >= n(1));
    case Op::ToStr: return num_to_seq(n(0));
    case Op::And: return Value::boolean(b(0) && b(1));
    case Op::Or: return Value::boolean(b(0) || b(1));
    case Op::Xor: return Value::boolean(b(0) != b(1));
    case Op::Iff: return Value::boolean(b(0) == b(1));
    case Op::Implies: return Value::boolean(!b(0) || b(1));
    case Op::Not: return Value::boolean(!b(0));
    case Op::Len: return Value::number(static_cast<double>(s(0).size()));
    case Op::Sum: {
        double total = 0.0;
        for (double x : s(0)) total += x;
        return Value::number(total);
    }
    case Op::SeqEq: return Value::boolean(values_equal(args[0], args[1], num_tol));
    case Op::SeqNe: return Value::boolean(!values_equal(args[0], args[1], num_tol));
    case Op::Flip: {
        std::vector<double> out = s(0);
        std::reverse(out.begin(), out.end());
        return Value::sequence(std::move(out));
    }
    case Op::Remove: return Value::sequence(seq_remove(s(0), n(1)));
    case Op::Truncate: return Value::sequence(seq_truncate(s(0), n(1)));
    }
    throw std::logic_error("unknown operator");
}

} // namespace mrgen
