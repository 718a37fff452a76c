#pragma once

// Reference semantics used as independent oracles by the unit and acceptance
// suites. Everything here is written directly against the intended behavior
// and stays separate from the library implementation it checks.

#include <cmath>
#include <string>
#include <vector>

#include "mrgen/value.hpp"

namespace testoracle {

using mrgen::Op;
using mrgen::TypeTag;
using mrgen::Value;

inline bool ref_num_eq(double a, double b, double tol) {
    bool na = std::isnan(a), nb = std::isnan(b);
    if (na || nb) return na && nb;
    if (a == b) return true;
    if (!std::isfinite(a) || !std::isfinite(b)) return false;
    double m = std::fabs(a) > std::fabs(b) ? std::fabs(a) : std::fabs(b);
    return std::fabs(a - b) <= tol || (tol > 0 && std::fabs(a - b) <= 1e-12 * m);
}

inline std::vector<double> ref_remove(std::vector<double> s, double raw) {
    // Python list semantics: negative index counts from the back, out of
    // range (including non-finite indices) is a no-op.
    if (std::isnan(raw) || raw >= 9.0e18 || raw <= -9.0e18) return s;
    long long i = (long long)raw; // toward zero
    long long n = (long long)s.size();
    if (i < 0) i = n + i;
    if (i >= 0 && i < n) s.erase(s.begin() + i);
    return s;
}

inline std::vector<double> ref_truncate(std::vector<double> s, double raw) {
    double bound = (double)s.size();
    double clamped = std::isnan(raw) ? 0.0 : raw;
    if (clamped < 0) clamped = 0;
    if (clamped > bound) clamped = bound;
    s.resize((size_t)clamped);
    return s;
}

inline Value ref_apply(Op op, const std::vector<Value>& args, double tol) {
    auto num = [&](int i) { return args[i].as_num(); };
    auto bv = [&](int i) { return args[i].as_bool(); };
    auto sq = [&](int i) -> const std::vector<double>& {
        return args[i].as_seq();
    };
    switch (op) {
    case Op::Add: return Value::number(num(0) + num(1));
    case Op::Sub: return Value::number(num(0) - num(1));
    case Op::Mul: return Value::number(num(0) * num(1));
    case Op::Div:
        if (num(1) == 0.0) return Value::number(1.0);
        return Value::number(num(0) / num(1));
    case Op::Abs: return Value::number(num(0) < 0 ? -num(0) : num(0));
    case Op::NumEq: return Value::boolean(ref_num_eq(num(0), num(1), tol));
    case Op::NumNe: return Value::boolean(!ref_num_eq(num(0), num(1), tol));
    case Op::NumLt: return Value::boolean(num(0) < num(1));
    case Op::NumGt: return Value::boolean(num(0) > num(1));
    case Op::NumLe: return Value::boolean(num(0) <= num(1));
    case Op::NumGe: return Value::boolean(num(0) >= num(1));
    case Op::ToStr: {
        std::string text = mrgen::render_num(num(0));
        std::vector<double> pts;
        for (char c : text) pts.push_back((double)(unsigned char)c);
        return Value::sequence(pts);
    }
    case Op::And: return Value::boolean(bv(0) && bv(1));
    case Op::Or: return Value::boolean(bv(0) || bv(1));
    case Op::Xor: return Value::boolean(bv(0) ? !bv(1) : bv(1));
    case Op::Iff: return Value::boolean(bv(0) ? bv(1) : !bv(1));
    case Op::Implies: return Value::boolean(bv(0) ? bv(1) : true);
    case Op::Not: return Value::boolean(!bv(0));
    case Op::Len: return Value::number((double)sq(0).size());
    case Op::Sum: {
        double t = 0;
        for (double x : sq(0)) t += x;
        return Value::number(t);
    }
    case Op::SeqEq:
    case Op::SeqNe: {
        bool eq = sq(0).size() == sq(1).size();
        for (size_t i = 0; eq && i < sq(0).size(); ++i)
            eq = ref_num_eq(sq(0)[i], sq(1)[i], tol);
        return Value::boolean(op == Op::SeqEq ? eq : !eq);
    }
    case Op::Flip: {
        std::vector<double> out;
        for (auto it = sq(0).rbegin(); it != sq(0).rend(); ++it)
            out.push_back(*it);
        return Value::sequence(out);
    }
    case Op::Remove: return Value::sequence(ref_remove(sq(0), num(1)));
    case Op::Truncate: return Value::sequence(ref_truncate(sq(0), num(1)));
    }
    return Value::number(0);
}

/// All sequences of length <= max_len over the given element set.
inline std::vector<std::vector<double>> all_sequences(
    const std::vector<double>& elems, int max_len) {
    std::vector<std::vector<double>> out{{}};
    std::vector<std::vector<double>> frontier{{}};
    for (int l = 1; l <= max_len; ++l) {
        std::vector<std::vector<double>> next;
        for (const auto& base : frontier) {
            for (double e : elems) {
                auto s = base;
                s.push_back(e);
                next.push_back(s);
            }
        }
        out.insert(out.end(), next.begin(), next.end());
        frontier = std::move(next);
    }
    return out;
}

inline bool same_value(const Value& a, const Value& b) {
    if (a.tag() != b.tag()) return false;
    switch (a.tag()) {
    case TypeTag::Bool: return a.as_bool() == b.as_bool();
    case TypeTag::Num: {
        double x = a.as_num(), y = b.as_num();
        if (std::isnan(x) && std::isnan(y)) return true;
        return x == y;
    }
    case TypeTag::Seq: {
        if (a.as_seq().size() != b.as_seq().size()) return false;
        for (size_t i = 0; i < a.as_seq().size(); ++i) {
            double x = a.as_seq()[i], y = b.as_seq()[i];
            if (!(x == y || (std::isnan(x) && std::isnan(y)))) return false;
        }
        return true;
    }
    }
    return false;
}

} // namespace testoracle
