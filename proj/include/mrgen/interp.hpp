#pragma once

#include <cmath>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "mrgen/mulang.hpp"
#include "mrgen/value.hpp"

namespace mrgen {

inline constexpr long kDefaultStepBudget = 100000;

/// What the instrumentation captured during one run: which way each
/// condition went, every number seen at a literal or a variable read, and
/// the step count. Sequence-building operations charge steps proportional
/// to the result length so a run's total work is bounded by the budget.
struct ExecutionTrace {
    std::set<std::pair<int, bool>> branch_outcomes;
    std::vector<double> observed_values;
    long step_count = 0;
};

enum class RunStatus { Ok, Error, Timeout };

struct RunOutcome {
    RunStatus status = RunStatus::Ok;
    Value output;           // when Ok
    std::string error_kind; // when Error
    ExecutionTrace trace;
};

namespace detail {

struct ThrowSignal {
    std::string kind;
};
struct TimeoutSignal {};

class Interp {
public:
    Interp(const SubjectProgram& prog, long budget)
        : prog_(prog), budget_(budget) {}

    RunOutcome run(std::span<const Value> inputs) {
        RunOutcome out;
        scopes_.clear();
        scopes_.emplace_back();
        for (std::size_t i = 0; i < inputs.size(); ++i)
            scopes_.back().emplace_back(prog_.signature.params[i].first,
                                        inputs[i]);
        try {
            Value result;
            if (exec_stmts(prog_.body, result)) {
                out.status = RunStatus::Ok;
                out.output = result;
            } else {
                // unreachable for checked programs; mutants cannot remove
                // the terminating return, but keep a defined outcome
                out.status = RunStatus::Error;
                out.error_kind = "NoReturn";
            }
        } catch (const ThrowSignal& t) {
            out.status = RunStatus::Error;
            out.error_kind = t.kind;
        } catch (const TimeoutSignal&) {
            out.status = RunStatus::Timeout;
        }
        out.trace = std::move(trace_);
        return out;
    }

private:
    using Scope = std::vector<std::pair<std::string, Value>>;

    void step(long n = 1) {
        trace_.step_count += n;
        if (trace_.step_count > budget_) {
            trace_.step_count = budget_;
            throw TimeoutSignal{};
        }
    }

    Value* lookup(const std::string& name) {
        for (auto it = scopes_.rbegin(); it != scopes_.rend(); ++it)
            for (auto& [n, v] : *it)
                if (n == name) return &v;
        return nullptr;
    }

    // Returns true when a return statement produced `result`.
    bool exec_stmts(const std::vector<Stmt>& body, Value& result) {
        scopes_.emplace_back();
        for (const Stmt& s : body) {
            if (exec_stmt(s, result)) {
                scopes_.pop_back();
                return true;
            }
        }
        scopes_.pop_back();
        return false;
    }

    bool exec_stmt(const Stmt& s, Value& result) {
        step();
        switch (s.kind) {
        case StmtKind::Let:
            scopes_.back().emplace_back(s.name, eval(*s.value));
            return false;
        case StmtKind::Assign: {
            Value v = eval(*s.value);
            *lookup(s.name) = std::move(v);
            return false;
        }
        case StmtKind::If: {
            bool cond = eval(*s.value).as_bool();
            trace_.branch_outcomes.insert({s.id, cond});
            if (cond) return exec_stmts(s.then_body, result);
            if (!s.else_body.empty()) return exec_stmts(s.else_body, result);
            return false;
        }
        case StmtKind::While:
            while (true) {
                step();
                bool cond = eval(*s.value).as_bool();
                trace_.branch_outcomes.insert({s.id, cond});
                if (!cond) return false;
                if (exec_stmts(s.then_body, result)) return true;
            }
        case StmtKind::Return:
            result = eval(*s.value);
            return true;
        case StmtKind::Throw:
            throw ThrowSignal{s.name};
        case StmtKind::Block:
            return exec_stmts(s.then_body, result);
        }
        return false;
    }

    static std::int64_t to_int(double v) { return mrgen::detail::trunc_index(v); }

    Value eval(const Expr& e) {
        step();
        switch (e.kind) {
        case ExprKind::NumLit:
            trace_.observed_values.push_back(e.num);
            return Value::number(e.num);
        case ExprKind::BoolLit:
            return Value::boolean(e.bval);
        case ExprKind::SeqLit: {
            std::vector<double> elems;
            elems.reserve(e.kids.size());
            for (const Expr& k : e.kids) elems.push_back(eval(k).as_num());
            step(static_cast<long>(elems.size()));
            return Value::sequence(std::move(elems));
        }
        case ExprKind::Var: {
            Value* v = lookup(e.name);
            if (v->tag() == TypeTag::Num)
                trace_.observed_values.push_back(v->as_num());
            return *v;
        }
        case ExprKind::Unary: {
            Value v = eval(e.kids[0]);
            return e.un == UnOp::Neg ? Value::number(-v.as_num())
                                     : Value::boolean(!v.as_bool());
        }
        case ExprKind::Binary:
            return eval_binary(e);
        case ExprKind::Index: {
            Value s = eval(e.kids[0]);
            std::int64_t i = to_int(eval(e.kids[1]).as_num());
            if (i < 0 || i >= static_cast<std::int64_t>(s.as_seq().size()))
                throw ThrowSignal{"IndexOutOfBounds"};
            return Value::number(s.as_seq()[static_cast<std::size_t>(i)]);
        }
        case ExprKind::Slice: {
            Value s = eval(e.kids[0]);
            std::int64_t n = static_cast<std::int64_t>(s.as_seq().size());
            std::int64_t lo = std::clamp<std::int64_t>(
                to_int(eval(e.kids[1]).as_num()), 0, n);
            std::int64_t hi = std::clamp<std::int64_t>(
                to_int(eval(e.kids[2]).as_num()), 0, n);
            if (hi < lo) hi = lo;
            std::vector<double> out(s.as_seq().begin() + lo,
                                    s.as_seq().begin() + hi);
            step(static_cast<long>(out.size()));
            return Value::sequence(std::move(out));
        }
        case ExprKind::Len:
            return Value::number(
                static_cast<double>(eval(e.kids[0]).as_seq().size()));
        }
        throw ThrowSignal{"Internal"};
    }

    Value eval_binary(const Expr& e) {
        if (e.bin == BinOp::And) {
            // short-circuit
            if (!eval(e.kids[0]).as_bool()) return Value::boolean(false);
            return Value::boolean(eval(e.kids[1]).as_bool());
        }
        if (e.bin == BinOp::Or) {
            if (eval(e.kids[0]).as_bool()) return Value::boolean(true);
            return Value::boolean(eval(e.kids[1]).as_bool());
        }
        Value a = eval(e.kids[0]);
        Value b = eval(e.kids[1]);
        if (e.bin == BinOp::Add && a.tag() == TypeTag::Seq) {
            std::vector<double> out = a.as_seq();
            out.insert(out.end(), b.as_seq().begin(), b.as_seq().end());
            step(static_cast<long>(out.size()));
            return Value::sequence(std::move(out));
        }
        double x = a.as_num();
        double y = b.as_num();
        switch (e.bin) {
        case BinOp::Add: return Value::number(x + y);
        case BinOp::Sub: return Value::number(x - y);
        case BinOp::Mul: return Value::number(x * y);
        case BinOp::Div: return Value::number(x / y); // IEEE: 1/0 = inf
        case BinOp::Mod: return Value::number(std::fmod(x, y));
        case BinOp::BitAnd:
            return Value::number(static_cast<double>(to_int(x) & to_int(y)));
        case BinOp::Shr: {
            std::int64_t shift = std::clamp<std::int64_t>(to_int(y), 0, 63);
            return Value::number(static_cast<double>(to_int(x) >> shift));
        }
        case BinOp::Eq: return Value::boolean(x == y);
        case BinOp::Ne: return Value::boolean(x != y);
        case BinOp::Lt: return Value::boolean(x < y);
        case BinOp::Gt: return Value::boolean(x > y);
        case BinOp::Le: return Value::boolean(x <= y);
        case BinOp::Ge: return Value::boolean(x >= y);
        default: throw ThrowSignal{"Internal"};
        }
    }

    const SubjectProgram& prog_;
    long budget_;
    ExecutionTrace trace_;
    std::vector<Scope> scopes_;
};

} // namespace detail

/// Deterministic, pure run of a subject function. A signature mismatch is a
/// caller bug; everything the subject itself does wrong becomes an Error or
/// Timeout outcome.
inline RunOutcome run_function(const SubjectProgram& prog,
                               std::span<const Value> inputs,
                               long step_budget = kDefaultStepBudget) {
    if (inputs.size() != prog.signature.params.size())
        throw std::logic_error("run_function: wrong number of inputs");
    for (std::size_t i = 0; i < inputs.size(); ++i)
        if (inputs[i].tag() != prog.signature.params[i].second)
            throw std::logic_error("run_function: input tag mismatch at '" +
                                   prog.signature.params[i].first + "'");
    detail::Interp interp(prog, step_budget);
    return interp.run(inputs);
}

/// Numbers the transform templates may use as constants: the predefined -1
/// and 1 plus every finite value observed in all of the given traces, each
/// weighted by its total occurrence count.
struct ConstantPool {
    std::vector<std::pair<double, long>> constants; // sorted by value
};

inline ConstantPool mine_constants(const std::vector<ExecutionTrace>& traces) {
    std::map<double, long> counts;
    std::map<double, int> seen_in;
    int trace_no = 0;
    for (const ExecutionTrace& t : traces) {
        ++trace_no;
        std::set<double> uniq;
        for (double v : t.observed_values) {
            if (!std::isfinite(v)) continue;
            counts[v] += 1;
            uniq.insert(v);
        }
        for (double v : uniq) seen_in[v] += 1;
    }
    ConstantPool pool;
    for (const auto& [v, n] : seen_in)
        if (n == trace_no && trace_no > 0) pool.constants.emplace_back(v, counts[v]);
    for (double pre : {-1.0, 1.0}) {
        bool present = false;
        for (auto& [v, w] : pool.constants)
            if (v == pre) present = true;
        if (!present) {
            long w = counts.count(pre) ? std::max<long>(counts[pre], 1) : 1;
            pool.constants.emplace_back(pre, w);
        }
    }
    std::sort(pool.constants.begin(), pool.constants.end());
    return pool;
}

} // namespace mrgen
