#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "mrgen/inputgen.hpp"
#include "mrgen/interp.hpp"
#include "mrgen/rng.hpp"
#include "mrgen/value.hpp"

// The six input-transformation templates, their instantiation against a
// signature and mined constant pool, follow-up construction, and the
// canonical input relation each instantiation induces. Given a source
// input, exactly one follow-up satisfies the canonical relation.

namespace mrgen {

enum class TransformKind {
    PermuteParameters,
    BooleanFlip,
    NumericAddition,
    NumericMultiplication,
    SequenceRemove,
    SequenceFlip,
};

inline const char* transform_kind_name(TransformKind k) {
    switch (k) {
    case TransformKind::PermuteParameters: return "PermuteParameters";
    case TransformKind::BooleanFlip: return "BooleanFlip";
    case TransformKind::NumericAddition: return "NumericAddition";
    case TransformKind::NumericMultiplication: return "NumericMultiplication";
    case TransformKind::SequenceRemove: return "SequenceRemove";
    case TransformKind::SequenceFlip: return "SequenceFlip";
    }
    return "?";
}

inline bool transform_kind_parameterized(TransformKind k) {
    return k == TransformKind::NumericAddition ||
           k == TransformKind::NumericMultiplication ||
           k == TransformKind::SequenceRemove;
}

struct InputTransform {
    TransformKind kind = TransformKind::NumericAddition;
    int param_a = 0;       // target parameter
    int param_b = -1;      // second parameter (PermuteParameters only)
    double constant = 0.0; // parameterized kinds only
    long weight = 1;       // sampling weight from the constant pool
};

inline std::string transform_descriptor(const InputTransform& t) {
    std::string out = transform_kind_name(t.kind);
    out += "(param=" + std::to_string(t.param_a);
    if (t.kind == TransformKind::PermuteParameters)
        out += ", param=" + std::to_string(t.param_b);
    if (transform_kind_parameterized(t.kind))
        out += ", c=" + render_num(t.constant);
    out += ")";
    return out;
}

inline InputTransform parse_transform_descriptor(std::string_view text) {
    auto fail = [&] {
        throw std::runtime_error("bad transform descriptor: '" +
                                 std::string(text) + "'");
    };
    std::size_t open = text.find('(');
    if (open == std::string_view::npos || text.back() != ')') fail();
    std::string_view name = text.substr(0, open);
    InputTransform t;
    bool known = false;
    for (TransformKind k :
         {TransformKind::PermuteParameters, TransformKind::BooleanFlip,
          TransformKind::NumericAddition, TransformKind::NumericMultiplication,
          TransformKind::SequenceRemove, TransformKind::SequenceFlip}) {
        if (name == transform_kind_name(k)) {
            t.kind = k;
            known = true;
        }
    }
    if (!known) fail();
    std::string_view body = text.substr(open + 1, text.size() - open - 2);
    std::vector<std::pair<std::string, std::string>> kvs;
    while (!body.empty()) {
        std::size_t comma = body.find(',');
        std::string_view item =
            comma == std::string_view::npos ? body : body.substr(0, comma);
        body = comma == std::string_view::npos ? std::string_view{}
                                               : body.substr(comma + 1);
        while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
        std::size_t eq = item.find('=');
        if (eq == std::string_view::npos) fail();
        kvs.emplace_back(std::string(item.substr(0, eq)),
                         std::string(item.substr(eq + 1)));
    }
    bool saw_a = false;
    for (auto& [key, value] : kvs) {
        if (key == "param") {
            int idx = static_cast<int>(parse_num(value));
            if (!saw_a) {
                t.param_a = idx;
                saw_a = true;
            } else {
                t.param_b = idx;
            }
        } else if (key == "c") {
            t.constant = parse_num(value);
        } else {
            fail();
        }
    }
    if (!saw_a) fail();
    if (t.kind == TransformKind::PermuteParameters && t.param_b < 0) fail();
    return t;
}

/// A transform plus the textual conjunction of per-parameter equalities it
/// induces, e.g. "(k_f == k_s) && (e_f == e_s - 1)".
struct InputRelationSpec {
    InputTransform transform;
    std::string rendering;
};

inline std::string render_input_relation(const InputTransform& t,
                                         const Signature& sig) {
    std::string out;
    for (std::size_t i = 0; i < sig.params.size(); ++i) {
        if (i) out += " && ";
        const std::string& name = sig.params[i].first;
        std::string clause = name + "_f == ";
        int idx = static_cast<int>(i);
        if (t.kind == TransformKind::PermuteParameters &&
            (idx == t.param_a || idx == t.param_b)) {
            const std::string& other =
                sig.params[static_cast<std::size_t>(
                               idx == t.param_a ? t.param_b : t.param_a)]
                    .first;
            clause += other + "_s";
        } else if (idx != t.param_a) {
            clause += name + "_s";
        } else {
            switch (t.kind) {
            case TransformKind::BooleanFlip: clause += "!" + name + "_s"; break;
            case TransformKind::NumericAddition:
                clause += name + "_s " + (t.constant < 0 ? "- " : "+ ") +
                          render_num(std::fabs(t.constant));
                break;
            case TransformKind::NumericMultiplication:
                clause += name + "_s * " + render_num(t.constant);
                break;
            case TransformKind::SequenceRemove:
                clause += "remove(" + name + "_s, " + render_num(t.constant) + ")";
                break;
            case TransformKind::SequenceFlip:
                clause += "flip(" + name + "_s)";
                break;
            case TransformKind::PermuteParameters: break; // handled above
            }
        }
        out += "(" + clause + ")";
    }
    return out;
}

inline InputRelationSpec canonical_relation(const InputTransform& t,
                                            const Signature& sig) {
    return InputRelationSpec{t, render_input_relation(t, sig)};
}

/// All template instantiations compatible with the signature, in a
/// deterministic order. Parameterized templates draw candidate constants
/// from the pool, both signs; additions of 0 and multiplications by 1 are
/// degenerate (follow-up equals source) and excluded.
inline std::vector<InputTransform> enumerate_applicable(
    const Signature& sig, const ConstantPool& pool) {
    std::vector<InputTransform> out;
    const int n = static_cast<int>(sig.params.size());
    auto tag_of = [&](int i) { return sig.params[static_cast<std::size_t>(i)].second; };

    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if (tag_of(i) == tag_of(j)) {
                InputTransform t;
                t.kind = TransformKind::PermuteParameters;
                t.param_a = i;
                t.param_b = j;
                out.push_back(t);
            }

    for (int i = 0; i < n; ++i)
        if (tag_of(i) == TypeTag::Bool) {
            InputTransform t;
            t.kind = TransformKind::BooleanFlip;
            t.param_a = i;
            out.push_back(t);
        }

    // signed candidate constants with their pool weights
    std::map<double, long> candidates;
    long weight_total = 0;
    for (const auto& [v, w] : pool.constants) {
        weight_total += w;
        for (double c : {v, -v}) {
            auto it = candidates.find(c);
            if (it == candidates.end())
                candidates[c] = w;
            else
                it->second = std::max(it->second, w);
        }
    }
    long mean_weight =
        pool.constants.empty()
            ? 1
            : std::max<long>(1, weight_total /
                                    static_cast<long>(pool.constants.size()));
    for (InputTransform& t : out) t.weight = mean_weight;

    for (int i = 0; i < n; ++i) {
        if (tag_of(i) != TypeTag::Num) continue;
        for (const auto& [c, w] : candidates) {
            if (c != 0.0) {
                InputTransform t;
                t.kind = TransformKind::NumericAddition;
                t.param_a = i;
                t.constant = c;
                t.weight = w;
                out.push_back(t);
            }
            if (c != 1.0) {
                InputTransform t;
                t.kind = TransformKind::NumericMultiplication;
                t.param_a = i;
                t.constant = c;
                t.weight = w;
                out.push_back(t);
            }
        }
    }

    for (int i = 0; i < n; ++i) {
        if (tag_of(i) != TypeTag::Seq) continue;
        for (double idx : {0.0, -1.0}) {
            InputTransform t;
            t.kind = TransformKind::SequenceRemove;
            t.param_a = i;
            t.constant = idx;
            t.weight = mean_weight;
            out.push_back(t);
        }
    }

    for (int i = 0; i < n; ++i)
        if (tag_of(i) == TypeTag::Seq) {
            InputTransform t;
            t.kind = TransformKind::SequenceFlip;
            t.param_a = i;
            t.weight = mean_weight;
            out.push_back(t);
        }

    return out;
}

/// Weighted sampling without replacement (heavier pool constants first,
/// in expectation). Returns everything when k exceeds the candidate count.
inline std::vector<InputTransform> sample_instantiations(
    std::vector<InputTransform> applicable, std::size_t k, std::uint64_t seed) {
    if (k == 0) throw std::invalid_argument("k must be positive");
    if (applicable.empty())
        throw std::runtime_error(
            "no applicable input transformations for this signature");
    if (applicable.size() <= k) return applicable;

    Rng rng(seed);
    std::vector<InputTransform> chosen;
    while (chosen.size() < k) {
        long total = 0;
        for (const InputTransform& t : applicable)
            total += std::max<long>(t.weight, 1);
        long roll = static_cast<long>(rng.next_index(static_cast<std::size_t>(total)));
        std::size_t pick = 0;
        for (std::size_t i = 0; i < applicable.size(); ++i) {
            roll -= std::max<long>(applicable[i].weight, 1);
            if (roll < 0) {
                pick = i;
                break;
            }
        }
        chosen.push_back(applicable[pick]);
        applicable.erase(applicable.begin() +
                         static_cast<std::ptrdiff_t>(pick));
    }
    return chosen;
}

/// Builds the follow-up input; only target parameters change.
inline InputCase apply_transform(const InputTransform& t, const InputCase& x1) {
    InputCase x2;
    x2.id = x1.id + "_followup";
    x2.values = x1.values;
    auto& vals = x2.values;
    std::size_t a = static_cast<std::size_t>(t.param_a);
    switch (t.kind) {
    case TransformKind::PermuteParameters:
        std::swap(vals[a], vals[static_cast<std::size_t>(t.param_b)]);
        break;
    case TransformKind::BooleanFlip:
        vals[a] = Value::boolean(!vals[a].as_bool());
        break;
    case TransformKind::NumericAddition:
        vals[a] = Value::number(vals[a].as_num() + t.constant);
        break;
    case TransformKind::NumericMultiplication:
        vals[a] = Value::number(vals[a].as_num() * t.constant);
        break;
    case TransformKind::SequenceRemove:
        vals[a] = Value::sequence(seq_remove(vals[a].as_seq(), t.constant));
        break;
    case TransformKind::SequenceFlip: {
        std::vector<double> s = vals[a].as_seq();
        std::reverse(s.begin(), s.end());
        vals[a] = Value::sequence(std::move(s));
        break;
    }
    }
    return x2;
}

/// True iff x2 is the canonical follow-up of x1: numeric parameters compare
/// under the numeric tolerance, booleans and sequences exactly.
inline bool check_relation(const InputRelationSpec& rel, const InputCase& x1,
                           const InputCase& x2, double num_tol = 1e-6) {
    if (x1.values.size() != x2.values.size()) return false;
    InputCase expect = apply_transform(rel.transform, x1);
    for (std::size_t i = 0; i < expect.values.size(); ++i) {
        double tol =
            expect.values[i].tag() == TypeTag::Num ? num_tol : 0.0;
        if (!values_equal(x2.values[i], expect.values[i], tol)) return false;
    }
    return true;
}

} // namespace mrgen
