#pragma once

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <future>
#include <string>
#include <vector>

#include "mrgen/exec_store.hpp"
#include "mrgen/rng.hpp"
#include "mrgen/transforms.hpp"
#include "mrgen/value.hpp"

// The search core: typed output-relation trees over the operator table,
// false-positive / false-negative counting against a cached execution
// store, and the two-population co-evolution with elitism and periodic
// migration. One population orders individuals by (fp, fn, size), the
// other by (fn, fp, size); both exchange their best individuals so each
// objective receives the other's genetic material.

namespace mrgen {

// ---------------------------------------------------------------------------
// Relation expressions

struct VarRef {
    bool followup = false;
    std::string slot; // parameter name or "return"

    bool operator==(const VarRef&) const = default;
};

struct RelationExpr {
    enum class Kind { Operator, NumConst, BoolConst, Var };
    Kind kind = Kind::BoolConst;
    Op op = Op::And;
    double num = 0.0;
    bool bval = false;
    VarRef var;
    TypeTag tag = TypeTag::Bool;
    std::vector<RelationExpr> kids;
};

inline std::size_t node_count(const RelationExpr& e) {
    std::size_t n = 1;
    for (const RelationExpr& k : e.kids) n += node_count(k);
    return n;
}

inline constexpr double kConstLimit = 100.0; // numeric constants live in [-100, 100]

/// Recomputes and verifies tags bottom-up; throws on an ill-typed tree.
inline TypeTag validate_expr(RelationExpr& e, const Signature& sig) {
    switch (e.kind) {
    case RelationExpr::Kind::NumConst:
        if (!(std::fabs(e.num) <= kConstLimit))
            throw std::logic_error("relation constant out of range");
        e.tag = TypeTag::Num;
        return e.tag;
    case RelationExpr::Kind::BoolConst:
        e.tag = TypeTag::Bool;
        return e.tag;
    case RelationExpr::Kind::Var: {
        if (e.var.slot == "return") {
            e.tag = sig.output;
            return e.tag;
        }
        int idx = sig.param_index(e.var.slot);
        if (idx < 0)
            throw std::logic_error("relation variable '" + e.var.slot +
                                   "' not in signature");
        e.tag = sig.params[static_cast<std::size_t>(idx)].second;
        return e.tag;
    }
    case RelationExpr::Kind::Operator: {
        const OpInfo& info = op_info(e.op);
        if (static_cast<int>(e.kids.size()) != info.arity)
            throw std::logic_error("relation operator arity mismatch");
        for (int i = 0; i < info.arity; ++i)
            if (validate_expr(e.kids[static_cast<std::size_t>(i)], sig) !=
                info.args[i])
                throw std::logic_error("relation operator operand mismatch");
        e.tag = info.out;
        return e.tag;
    }
    }
    throw std::logic_error("unknown relation node kind");
}

inline bool is_well_typed(RelationExpr e, const Signature& sig,
                          TypeTag want_root = TypeTag::Bool) {
    try {
        return validate_expr(e, sig) == want_root;
    } catch (const std::logic_error&) {
        return false;
    }
}

struct MetamorphicRelation {
    InputRelationSpec input_relation;
    RelationExpr output_relation;
};

// ---------------------------------------------------------------------------
// Rendering and parsing (canonical prefix form plus a readable infix form)

inline std::string render_prefix(const RelationExpr& e) {
    switch (e.kind) {
    case RelationExpr::Kind::NumConst: return render_num(e.num);
    case RelationExpr::Kind::BoolConst: return e.bval ? "true" : "false";
    case RelationExpr::Kind::Var:
        return (e.var.followup ? "f." : "s.") + e.var.slot;
    case RelationExpr::Kind::Operator: {
        std::string out = "(";
        out += op_info(e.op).name;
        for (const RelationExpr& k : e.kids) {
            out += " ";
            out += render_prefix(k);
        }
        out += ")";
        return out;
    }
    }
    return "?";
}

namespace detail {

inline std::vector<std::string> tokenize_sexpr(std::string_view text) {
    std::vector<std::string> toks;
    std::string cur;
    for (char c : text) {
        if (c == '(' || c == ')') {
            if (!cur.empty()) {
                toks.push_back(cur);
                cur.clear();
            }
            toks.push_back(std::string(1, c));
        } else if (c == ' ' || c == '\n' || c == '\t') {
            if (!cur.empty()) {
                toks.push_back(cur);
                cur.clear();
            }
        } else {
            cur += c;
        }
    }
    if (!cur.empty()) toks.push_back(cur);
    return toks;
}

inline RelationExpr parse_prefix_tokens(const std::vector<std::string>& toks,
                                        std::size_t& pos) {
    if (pos >= toks.size())
        throw std::runtime_error("relation expression ended early");
    const std::string& t = toks[pos++];
    RelationExpr e;
    if (t == "(") {
        if (pos >= toks.size())
            throw std::runtime_error("relation expression ended early");
        const OpInfo* info = op_by_name(toks[pos++]);
        if (!info) throw std::runtime_error("unknown relation operator");
        e.kind = RelationExpr::Kind::Operator;
        e.op = info->op;
        while (pos < toks.size() && toks[pos] != ")")
            e.kids.push_back(parse_prefix_tokens(toks, pos));
        if (pos >= toks.size())
            throw std::runtime_error("unbalanced relation expression");
        ++pos; // ')'
        return e;
    }
    if (t == ")") throw std::runtime_error("unexpected ')'");
    if (t == "true" || t == "false") {
        e.kind = RelationExpr::Kind::BoolConst;
        e.bval = t == "true";
        return e;
    }
    if (t.size() > 2 && (t.rfind("s.", 0) == 0 || t.rfind("f.", 0) == 0)) {
        e.kind = RelationExpr::Kind::Var;
        e.var.followup = t[0] == 'f';
        e.var.slot = t.substr(2);
        return e;
    }
    e.kind = RelationExpr::Kind::NumConst;
    e.num = parse_num(t);
    return e;
}

} // namespace detail

inline RelationExpr parse_prefix(std::string_view text, const Signature& sig) {
    auto toks = detail::tokenize_sexpr(text);
    std::size_t pos = 0;
    RelationExpr e = detail::parse_prefix_tokens(toks, pos);
    if (pos != toks.size())
        throw std::runtime_error("trailing tokens in relation expression");
    validate_expr(e, sig);
    return e;
}

/// Readable infix form in the style of the executable pseudo-test: the
/// output variable renders as o_s / o_f, parameters as <name>_s / <name>_f.
inline std::string render_infix(const RelationExpr& e) {
    auto var_name = [](const VarRef& v) {
        std::string base = v.slot == "return" ? "o" : v.slot;
        return base + (v.followup ? "_f" : "_s");
    };
    switch (e.kind) {
    case RelationExpr::Kind::NumConst: return render_num(e.num);
    case RelationExpr::Kind::BoolConst: return e.bval ? "true" : "false";
    case RelationExpr::Kind::Var: return var_name(e.var);
    case RelationExpr::Kind::Operator: break;
    }
    static const std::map<Op, const char*> infix_ops = {
        {Op::Add, "+"},     {Op::Sub, "-"},   {Op::Mul, "*"},
        {Op::Div, "/"},     {Op::NumEq, "=="}, {Op::NumNe, "!="},
        {Op::NumLt, "<"},   {Op::NumGt, ">"}, {Op::NumLe, "<="},
        {Op::NumGe, ">="},  {Op::And, "&&"},  {Op::Or, "||"},
        {Op::Xor, "^"},     {Op::Iff, "<=>"}, {Op::Implies, "=>"},
        {Op::SeqEq, "=="},  {Op::SeqNe, "!="}};
    auto it = infix_ops.find(e.op);
    if (it != infix_ops.end())
        return "(" + render_infix(e.kids[0]) + " " + it->second + " " +
               render_infix(e.kids[1]) + ")";
    if (e.op == Op::Not) return "!" + render_infix(e.kids[0]);
    std::string name = op_info(e.op).name;
    if (e.op == Op::ToStr) name = "toString";
    if (e.op == Op::Len) name = "length";
    std::string out = name + "(" + render_infix(e.kids[0]);
    if (e.kids.size() > 1) out += ", " + render_infix(e.kids[1]);
    return out + ")";
}

inline std::string render_mr(const MetamorphicRelation& mr) {
    return mr.input_relation.rendering + "  =>  " +
           render_infix(mr.output_relation);
}

// ---------------------------------------------------------------------------
// Fitness

class Bitset {
public:
    Bitset() = default;
    explicit Bitset(std::size_t n) : size_(n), words_((n + 63) / 64, 0) {}

    void set(std::size_t i) { words_[i >> 6] |= std::uint64_t(1) << (i & 63); }
    bool test(std::size_t i) const {
        return (words_[i >> 6] >> (i & 63)) & 1;
    }
    std::size_t size() const { return size_; }
    std::size_t count() const {
        std::size_t n = 0;
        for (std::uint64_t w : words_) n += static_cast<std::size_t>(__builtin_popcountll(w));
        return n;
    }
    /// |this & ~other|
    std::size_t and_not_count(const Bitset& other) const {
        std::size_t n = 0;
        for (std::size_t i = 0; i < words_.size(); ++i)
            n += static_cast<std::size_t>(
                __builtin_popcountll(words_[i] & ~other.words_[i]));
        return n;
    }
    bool operator==(const Bitset&) const = default;

private:
    std::size_t size_ = 0;
    std::vector<std::uint64_t> words_;
};

struct Fitness {
    long fp = 0;
    long fn = 0;
    std::size_t size = 0;
    Bitset fp_set; // correct pairs the relation rejects
    Bitset fn_set; // incorrect pairs the relation accepts
};

/// Lexicographic strict dominance: fewer FPs, then fewer FNs, then smaller.
inline bool dominates_fp(const Fitness& a, const Fitness& b) {
    if (a.fp != b.fp) return a.fp < b.fp;
    if (a.fn != b.fn) return a.fn < b.fn;
    return a.size < b.size;
}

/// Lexicographic strict dominance: fewer FNs, then fewer FPs, then smaller.
inline bool dominates_fn(const Fitness& a, const Fitness& b) {
    if (a.fn != b.fn) return a.fn < b.fn;
    if (a.fp != b.fp) return a.fp < b.fp;
    return a.size < b.size;
}

// ---------------------------------------------------------------------------
// Evaluation against a store

namespace detail {

inline const Value& resolve_var(const VarRef& v, const ExecutionPair& pair) {
    const ExecutionRecord& rec = v.followup ? pair.followup : pair.source;
    if (v.slot == "return") return rec.output;
    const Value* found = rec.find_input(v.slot);
    if (!found)
        throw std::logic_error("relation variable '" + v.slot +
                               "' unresolvable in execution pair");
    return *found;
}

inline Value eval_expr(const RelationExpr& e, const ExecutionPair& pair,
                       double tol) {
    switch (e.kind) {
    case RelationExpr::Kind::NumConst: return Value::number(e.num);
    case RelationExpr::Kind::BoolConst: return Value::boolean(e.bval);
    case RelationExpr::Kind::Var: return resolve_var(e.var, pair);
    case RelationExpr::Kind::Operator: {
        Value args[2];
        for (std::size_t i = 0; i < e.kids.size(); ++i)
            args[i] = eval_expr(e.kids[i], pair, tol);
        return apply_operator(e.op, std::span<const Value>(args, e.kids.size()),
                              tol);
    }
    }
    throw std::logic_error("unknown relation node kind");
}

} // namespace detail

/// Both records of the pair must hold values (Ok status); the input
/// relation is true for every store pair by construction, so the MR's
/// implication reduces to the output relation alone.
inline bool eval_relation(const RelationExpr& expr, const ExecutionPair& pair,
                          double num_tol = 1e-6) {
    return detail::eval_expr(expr, pair, num_tol).as_bool();
}

inline Fitness compute_fitness(const RelationExpr& expr,
                               const ExecutionStore& store, double num_tol) {
    Fitness f;
    f.size = node_count(expr);
    f.fp_set = Bitset(store.correct.size());
    f.fn_set = Bitset(store.incorrect.size());
    for (std::size_t i = 0; i < store.correct.size(); ++i) {
        if (!eval_relation(expr, store.correct[i], num_tol)) {
            ++f.fp;
            f.fp_set.set(i);
        }
    }
    for (std::size_t i = 0; i < store.incorrect.size(); ++i) {
        if (eval_relation(expr, store.incorrect[i], num_tol)) {
            ++f.fn;
            f.fn_set.set(i);
        }
    }
    return f;
}

inline Fitness fitness(const MetamorphicRelation& mr, const ExecutionStore& store,
                       double num_tol = 1e-6) {
    if (transform_descriptor(mr.input_relation.transform) !=
        transform_descriptor(store.transform))
        throw std::logic_error(
            "fitness: store transform does not match the MR's input relation");
    return compute_fitness(mr.output_relation, store, num_tol);
}

/// A relation must mention the source and the follow-up output to be a
/// metamorphic relation at all; anything else may stay in the population as
/// genetic material but never enters the elite.
inline bool satisfies_soft_constraint(const RelationExpr& e) {
    bool source_out = false, followup_out = false;
    std::function<void(const RelationExpr&)> walk = [&](const RelationExpr& n) {
        if (n.kind == RelationExpr::Kind::Var && n.var.slot == "return")
            (n.var.followup ? followup_out : source_out) = true;
        for (const RelationExpr& k : n.kids) walk(k);
    };
    walk(e);
    return source_out && followup_out;
}

// ---------------------------------------------------------------------------
// Configuration

struct EvolutionConfig {
    std::size_t population_size = 200;
    std::size_t generations = 60;
    double time_budget_seconds = 0; // optional wall-clock stop when > 0
    double p_crossover = 0.9;
    double p_mutation = 0.3;
    std::size_t tournament_k = 2;
    double p_best_match = 0.5;
    std::size_t best_match_candidates = 16;
    std::size_t elite_size = 10;
    std::size_t migration_period = 10;
    std::size_t migration_count = 32;
    std::size_t size_bound = 16;
    double constant_delta = 0.1;
    double num_tolerance = 1e-6;
    std::size_t output_count = 8;
    std::uint64_t seed = 1;
    bool parallel = false;
};

/// Table-scale preset (population 1000, 30-minute budget, migrate 160).
inline EvolutionConfig paper_evolution_config() {
    EvolutionConfig c;
    c.population_size = 1000;
    c.generations = 1000000; // the time budget is the effective stop
    c.time_budget_seconds = 1800;
    c.migration_count = 160;
    return c;
}

struct Individual {
    RelationExpr expr;
    Fitness fit;
    bool evaluated = false;
};

struct Population {
    bool fn_objective = false; // false: (fp, fn, size); true: (fn, fp, size)
    std::vector<Individual> individuals;
};

struct EvolvedMr {
    MetamorphicRelation mr;
    Fitness fit;
};

/// Optional interception points; when any hook is set the run is forced
/// sequential so callbacks never race.
struct EvolveHooks {
    std::function<void(const RelationExpr&)> on_insert;
    std::function<void(std::size_t, const std::vector<const Individual*>&)>
        on_elite;
    std::function<void(std::size_t)> on_migration;
    std::function<void(std::size_t, const Population&, const Population&)>
        on_generation;

    bool any() const {
        return on_insert || on_elite || on_migration || on_generation;
    }
};

// ---------------------------------------------------------------------------
// Typed random trees

namespace detail {

struct VarUniverse {
    std::vector<VarRef> vars[3]; // indexed by TypeTag

    const std::vector<VarRef>& of(TypeTag t) const {
        return vars[static_cast<int>(t)];
    }
};

inline VarUniverse build_universe(const Signature& sig) {
    VarUniverse u;
    for (bool followup : {false, true}) {
        for (const auto& [name, tag] : sig.params)
            u.vars[static_cast<int>(tag)].push_back(VarRef{followup, name});
        u.vars[static_cast<int>(sig.output)].push_back(
            VarRef{followup, "return"});
    }
    return u;
}

inline std::vector<Op> ops_with_output(TypeTag t) {
    std::vector<Op> out;
    for (const OpInfo& info : kOpTable)
        if (info.out == t) out.push_back(info.op);
    return out;
}

inline double random_constant(Rng& rng) {
    if (rng.next_bool(0.6))
        return static_cast<double>(rng.next_int(-5, 5));
    return rng.next_real(-kConstLimit, kConstLimit);
}

class TreeGen {
public:
    TreeGen(const VarUniverse& universe, std::size_t size_bound)
        : universe_(universe), size_bound_(size_bound) {
        for (TypeTag t : {TypeTag::Bool, TypeTag::Num, TypeTag::Seq})
            ops_[static_cast<int>(t)] = ops_with_output(t);
    }

    RelationExpr terminal(TypeTag tag, Rng& rng) const {
        RelationExpr e;
        const auto& vars = universe_.of(tag);
        switch (tag) {
        case TypeTag::Num:
            if (!vars.empty() && rng.next_bool(0.7)) {
                e.kind = RelationExpr::Kind::Var;
                e.var = rng.pick(vars);
            } else {
                e.kind = RelationExpr::Kind::NumConst;
                e.num = random_constant(rng);
            }
            break;
        case TypeTag::Bool:
            if (!vars.empty() && rng.next_bool(0.7)) {
                e.kind = RelationExpr::Kind::Var;
                e.var = rng.pick(vars);
            } else {
                e.kind = RelationExpr::Kind::BoolConst;
                e.bval = rng.next_bool();
            }
            break;
        case TypeTag::Seq:
            if (!vars.empty()) {
                e.kind = RelationExpr::Kind::Var;
                e.var = rng.pick(vars);
            } else {
                // no sequence constants exist; ground in toString
                e.kind = RelationExpr::Kind::Operator;
                e.op = Op::ToStr;
                e.kids.push_back(terminal(TypeTag::Num, rng));
            }
            break;
        }
        e.tag = tag;
        return e;
    }

    RelationExpr generate(TypeTag tag, int depth, bool grow, Rng& rng) const {
        if (depth <= 0 || (grow && rng.next_bool(0.35)))
            return terminal(tag, rng);
        const auto& candidates = ops_[static_cast<int>(tag)];
        if (candidates.empty()) return terminal(tag, rng);
        RelationExpr e;
        e.kind = RelationExpr::Kind::Operator;
        e.op = rng.pick(candidates);
        e.tag = tag;
        const OpInfo& info = op_info(e.op);
        for (int i = 0; i < info.arity; ++i)
            e.kids.push_back(generate(info.args[i], depth - 1, grow, rng));
        return e;
    }

    /// Ramped half-and-half with the hard size bound enforced.
    RelationExpr generate_bounded(Rng& rng, int depth, bool grow) const {
        for (int attempt = 0; attempt < 24; ++attempt) {
            int d = std::max(1, depth - attempt / 8);
            RelationExpr e = generate(TypeTag::Bool, d, grow || attempt >= 8, rng);
            if (node_count(e) <= size_bound_) return e;
        }
        return generate(TypeTag::Bool, 1, true, rng);
    }

private:
    const VarUniverse& universe_;
    std::size_t size_bound_;
    std::vector<Op> ops_[3];
};

inline void collect_nodes(RelationExpr& e, std::vector<RelationExpr*>& out) {
    out.push_back(&e);
    for (RelationExpr& k : e.kids) collect_nodes(k, out);
}

} // namespace detail

// ---------------------------------------------------------------------------
// Variation operators

/// Classical subtree crossover with typed points: both cut sites must carry
/// the same tag. Resamples up to 8 times, falling back to parent copies; an
/// offspring that would exceed the size bound is replaced by its parent.
inline std::pair<RelationExpr, RelationExpr> crossover(
    const RelationExpr& a, const RelationExpr& b, Rng& rng,
    std::size_t size_bound = 16) {
    RelationExpr oa = a;
    RelationExpr ob = b;
    std::vector<RelationExpr*> nodes_a, nodes_b;
    detail::collect_nodes(oa, nodes_a);
    detail::collect_nodes(ob, nodes_b);
    for (int attempt = 0; attempt < 8; ++attempt) {
        RelationExpr* pa = nodes_a[rng.next_index(nodes_a.size())];
        RelationExpr* pb = nodes_b[rng.next_index(nodes_b.size())];
        if (pa->tag != pb->tag) continue;
        std::swap(*pa, *pb);
        if (node_count(oa) > size_bound) oa = a;
        if (node_count(ob) > size_bound) ob = b;
        return {std::move(oa), std::move(ob)};
    }
    return {a, b};
}

/// One of three operators, chosen uniformly: replace a leaf with a fresh
/// terminal of the same type, replace an inner subtree with a fresh subtree
/// of the same type (depth <= 3), or nudge a numeric constant by +-delta.
/// Inapplicable choices fall back to leaf replacement.
inline RelationExpr mutate_relation(const RelationExpr& e, Rng& rng,
                                    const EvolutionConfig& config,
                                    const detail::VarUniverse& universe) {
    detail::TreeGen gen(universe, config.size_bound);
    RelationExpr out = e;
    std::vector<RelationExpr*> nodes;
    detail::collect_nodes(out, nodes);

    std::size_t choice = rng.next_index(3);

    if (choice == 2) {
        std::vector<RelationExpr*> constants;
        for (RelationExpr* n : nodes)
            if (n->kind == RelationExpr::Kind::NumConst) constants.push_back(n);
        if (!constants.empty()) {
            RelationExpr* c = constants[rng.next_index(constants.size())];
            double delta =
                rng.next_bool() ? config.constant_delta : -config.constant_delta;
            c->num = std::clamp(c->num + delta, -kConstLimit, kConstLimit);
            return out;
        }
        choice = 0;
    }

    if (choice == 1) {
        std::vector<RelationExpr*> inner;
        for (RelationExpr* n : nodes)
            if (n->kind == RelationExpr::Kind::Operator) inner.push_back(n);
        if (!inner.empty()) {
            RelationExpr* site = inner[rng.next_index(inner.size())];
            std::size_t budget =
                config.size_bound - node_count(out) + node_count(*site);
            RelationExpr fresh = gen.generate(site->tag, 3, true, rng);
            if (node_count(fresh) > budget) fresh = gen.terminal(site->tag, rng);
            *site = std::move(fresh);
            return out;
        }
        choice = 0;
    }

    std::vector<RelationExpr*> leaves;
    for (RelationExpr* n : nodes)
        if (n->kind != RelationExpr::Kind::Operator) leaves.push_back(n);
    if (leaves.empty()) return out;
    RelationExpr* leaf = leaves[rng.next_index(leaves.size())];
    *leaf = gen.terminal(leaf->tag, rng);
    return out;
}

// ---------------------------------------------------------------------------
// Selection, elitism, and the generational loop

namespace detail {

using Comparator = bool (*)(const Fitness&, const Fitness&);

inline Comparator comparator_of(const Population& pop) {
    return pop.fn_objective ? dominates_fn : dominates_fp;
}

inline std::vector<const Individual*> ranked(const Population& pop) {
    std::vector<const Individual*> order;
    order.reserve(pop.individuals.size());
    for (const Individual& ind : pop.individuals) order.push_back(&ind);
    Comparator better = comparator_of(pop);
    std::stable_sort(order.begin(), order.end(),
                     [&](const Individual* a, const Individual* b) {
                         return better(a->fit, b->fit);
                     });
    return order;
}

/// Elite selection: dominance order filtered by the soft constraint and the
/// two uniqueness constraints (rendered relation, FN set).
inline std::vector<const Individual*> select_elite(const Population& pop,
                                                   std::size_t limit) {
    std::vector<const Individual*> elite;
    std::vector<std::string> renders;
    std::vector<const Bitset*> fn_sets;
    for (const Individual* ind : ranked(pop)) {
        if (elite.size() >= limit) break;
        if (!satisfies_soft_constraint(ind->expr)) continue;
        std::string rendered = render_prefix(ind->expr);
        bool dup = false;
        for (const std::string& r : renders)
            if (r == rendered) dup = true;
        for (const Bitset* s : fn_sets)
            if (*s == ind->fit.fn_set) dup = true;
        if (dup) continue;
        renders.push_back(std::move(rendered));
        fn_sets.push_back(&ind->fit.fn_set);
        elite.push_back(ind);
    }
    return elite;
}

// K distinct contestants (with replacement only when the population is
// smaller than K); the dominance winner takes the tournament.
inline const Individual& tournament(const Population& pop, Rng& rng,
                                    std::size_t k) {
    Comparator better = comparator_of(pop);
    std::size_t n = pop.individuals.size();
    std::vector<std::size_t> picks;
    for (std::size_t i = 0; i < k; ++i) {
        std::size_t idx = rng.next_index(n);
        if (n >= k) {
            while (std::find(picks.begin(), picks.end(), idx) != picks.end())
                idx = (idx + 1) % n;
        }
        picks.push_back(idx);
    }
    const Individual* best = &pop.individuals[picks[0]];
    for (std::size_t i = 1; i < picks.size(); ++i) {
        const Individual& challenger = pop.individuals[picks[i]];
        if (better(challenger.fit, best->fit)) best = &challenger;
    }
    return *best;
}

/// Best-match second parent: among T uniform candidates, weight each by one
/// plus the number of store pairs the first parent misclassifies that the
/// candidate classifies correctly.
inline const Individual& best_match_partner(const Population& pop,
                                            const Individual& first, Rng& rng,
                                            std::size_t t_candidates) {
    std::vector<const Individual*> cands;
    std::vector<std::size_t> weights;
    std::size_t total = 0;
    for (std::size_t i = 0; i < t_candidates; ++i) {
        const Individual& c =
            pop.individuals[rng.next_index(pop.individuals.size())];
        std::size_t score = first.fit.fp_set.and_not_count(c.fit.fp_set) +
                            first.fit.fn_set.and_not_count(c.fit.fn_set);
        cands.push_back(&c);
        weights.push_back(1 + score);
        total += 1 + score;
    }
    std::size_t roll = rng.next_index(total);
    for (std::size_t i = 0; i < cands.size(); ++i) {
        if (roll < weights[i]) return *cands[i];
        roll -= weights[i];
    }
    return *cands.back();
}

} // namespace detail

inline std::pair<const Individual*, const Individual*> select_parents(
    const Population& pop, Rng& rng, const EvolutionConfig& config) {
    if (pop.individuals.empty())
        throw std::logic_error("select_parents: empty population");
    if (rng.next_bool(config.p_best_match)) {
        const Individual& first =
            pop.individuals[rng.next_index(pop.individuals.size())];
        const Individual& second = detail::best_match_partner(
            pop, first, rng, config.best_match_candidates);
        return {&first, &second};
    }
    const Individual& a = detail::tournament(pop, rng, config.tournament_k);
    const Individual& b = detail::tournament(pop, rng, config.tournament_k);
    return {&a, &b};
}

namespace detail {

inline void evaluate_population(Population& pop, const ExecutionStore& store,
                                double tol) {
    for (Individual& ind : pop.individuals) {
        if (ind.evaluated) continue;
        ind.fit = compute_fitness(ind.expr, store, tol);
        ind.evaluated = true;
    }
}

inline void select_reproduce(Population& pop, const ExecutionStore& store,
                             const EvolutionConfig& config, Rng& rng,
                             const VarUniverse& universe, std::size_t gen,
                             const EvolveHooks& hooks) {
    evaluate_population(pop, store, config.num_tolerance);

    std::vector<const Individual*> elite =
        select_elite(pop, config.elite_size);
    if (hooks.on_elite) hooks.on_elite(gen, elite);

    Population next;
    next.fn_objective = pop.fn_objective;
    next.individuals.reserve(config.population_size + 1);
    for (const Individual* e : elite) next.individuals.push_back(*e);
    if (elite.empty() && !pop.individuals.empty()) {
        // keep the best raw individual so progress is never lost while no
        // candidate satisfies the elite constraints yet
        next.individuals.push_back(*ranked(pop).front());
    }

    while (next.individuals.size() < config.population_size) {
        auto [p1, p2] = select_parents(pop, rng, config);
        RelationExpr o1, o2;
        if (rng.next_bool(config.p_crossover)) {
            std::tie(o1, o2) =
                crossover(p1->expr, p2->expr, rng, config.size_bound);
        } else {
            o1 = p1->expr;
            o2 = p2->expr;
        }
        for (RelationExpr* o : {&o1, &o2}) {
            if (rng.next_bool(config.p_mutation))
                *o = mutate_relation(*o, rng, config, universe);
            if (next.individuals.size() >= config.population_size) break;
            if (node_count(*o) > config.size_bound) continue; // dropped
            Individual ind;
            ind.expr = std::move(*o);
            if (hooks.on_insert) hooks.on_insert(ind.expr);
            next.individuals.push_back(std::move(ind));
        }
    }
    pop = std::move(next);
}

inline std::vector<Individual> best_for_migration(const Population& pop,
                                                  std::size_t count) {
    std::vector<Individual> out;
    auto order = ranked(pop);
    for (const Individual* ind : order) {
        if (out.size() >= count) break;
        if (!ind->evaluated) continue;
        out.push_back(*ind);
    }
    return out;
}

} // namespace detail

/// Runs the two-population co-evolution against one cached store and
/// returns the best relations of the union under the FP-first ordering.
/// `inject` seeds known relations into both initial populations (they still
/// compete like everything else).
inline std::vector<EvolvedMr> evolve(const InputRelationSpec& input_relation,
                                     const ExecutionStore& store,
                                     const EvolutionConfig& config,
                                     std::vector<RelationExpr> inject = {},
                                     const EvolveHooks& hooks = {}) {
    if (store.correct.empty())
        throw std::runtime_error("evolve: store has no correct executions");
    if (store.incorrect.empty())
        std::fprintf(stderr,
                     "warning: store has no incorrect executions; relations "
                     "are only constrained by false positives and size\n");

    detail::VarUniverse universe = detail::build_universe(store.signature);
    detail::TreeGen gen(universe, config.size_bound);

    Rng rng_fp(derive_seed(config.seed, "population.fp"));
    Rng rng_fn(derive_seed(config.seed, "population.fn"));

    auto init_population = [&](bool fn_objective, Rng& rng) {
        Population pop;
        pop.fn_objective = fn_objective;
        pop.individuals.reserve(config.population_size);
        for (const RelationExpr& seed_expr : inject) {
            if (pop.individuals.size() >= config.population_size) break;
            RelationExpr checked = seed_expr;
            validate_expr(checked, store.signature);
            if (node_count(checked) > config.size_bound)
                throw std::logic_error("injected relation exceeds size bound");
            Individual ind;
            ind.expr = std::move(checked);
            if (hooks.on_insert) hooks.on_insert(ind.expr);
            pop.individuals.push_back(std::move(ind));
        }
        int depth = 2;
        bool grow = false;
        while (pop.individuals.size() < config.population_size) {
            Individual ind;
            ind.expr = gen.generate_bounded(rng, depth, grow);
            if (hooks.on_insert) hooks.on_insert(ind.expr);
            pop.individuals.push_back(std::move(ind));
            grow = !grow;
            if (grow == false) depth = depth == 4 ? 2 : depth + 1;
        }
        return pop;
    };

    Population pop_fp = init_population(false, rng_fp);
    Population pop_fn = init_population(true, rng_fn);

    bool run_parallel = config.parallel && !hooks.any();
    auto deadline_reached = [&, start = std::chrono::steady_clock::now()] {
        if (config.time_budget_seconds <= 0) return false;
        std::chrono::duration<double> elapsed =
            std::chrono::steady_clock::now() - start;
        return elapsed.count() >= config.time_budget_seconds;
    };

    for (std::size_t gen_no = 1; gen_no <= config.generations; ++gen_no) {
        if (deadline_reached()) break;
        if (run_parallel) {
            auto task = std::async(std::launch::async, [&] {
                detail::select_reproduce(pop_fn, store, config, rng_fn,
                                         universe, gen_no, hooks);
            });
            detail::select_reproduce(pop_fp, store, config, rng_fp, universe,
                                     gen_no, hooks);
            task.get();
        } else {
            detail::select_reproduce(pop_fp, store, config, rng_fp, universe,
                                     gen_no, hooks);
            detail::select_reproduce(pop_fn, store, config, rng_fn, universe,
                                     gen_no, hooks);
        }

        if (config.migration_period > 0 &&
            gen_no % config.migration_period == 0) {
            if (hooks.on_migration) hooks.on_migration(gen_no);
            // fitness is cached, so evaluating ahead of the next generation
            // costs nothing extra and lets the true best individuals migrate
            detail::evaluate_population(pop_fp, store, config.num_tolerance);
            detail::evaluate_population(pop_fn, store, config.num_tolerance);
            auto from_fn =
                detail::best_for_migration(pop_fn, config.migration_count);
            auto from_fp =
                detail::best_for_migration(pop_fp, config.migration_count);
            for (Individual& ind : from_fn) {
                if (hooks.on_insert) hooks.on_insert(ind.expr);
                pop_fp.individuals.push_back(std::move(ind));
            }
            for (Individual& ind : from_fp) {
                if (hooks.on_insert) hooks.on_insert(ind.expr);
                pop_fn.individuals.push_back(std::move(ind));
            }
        }
        if (hooks.on_generation) hooks.on_generation(gen_no, pop_fp, pop_fn);
    }

    detail::evaluate_population(pop_fp, store, config.num_tolerance);
    detail::evaluate_population(pop_fn, store, config.num_tolerance);

    Population unioned;
    unioned.fn_objective = false; // final ordering is FP-first
    unioned.individuals.reserve(pop_fp.individuals.size() +
                                pop_fn.individuals.size());
    for (Population* pop : {&pop_fp, &pop_fn})
        for (Individual& ind : pop->individuals)
            unioned.individuals.push_back(std::move(ind));

    std::vector<EvolvedMr> out;
    for (const Individual* ind :
         detail::select_elite(unioned, config.output_count)) {
        EvolvedMr best;
        best.mr.input_relation = input_relation;
        best.mr.output_relation = ind->expr;
        best.fit = ind->fit;
        out.push_back(std::move(best));
    }
    return out;
}

} // namespace mrgen
