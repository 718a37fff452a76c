#pragma once

#include <optional>
#include <vector>

#include "mrgen/evolve.hpp"
#include "mrgen/exec_store.hpp"
#include "mrgen/inputgen.hpp"
#include "mrgen/mutate.hpp"

// Validity filtering and evaluation. Step 1 replays each relation over a
// fresh corpus the search never saw; step 2 hunts for violating inputs with
// a restarted (1+1) search steered by a branch distance over the output
// relation. Scoring kills mutants with the surviving relations and compares
// against a plain regression baseline.

namespace mrgen {

struct FilterStep {
    enum class Outcome { Pass, Fail, Skipped };
    Outcome outcome = Outcome::Skipped;
    InputCase witness; // populated on Fail
};

struct FilterVerdict {
    FilterStep step1;
    FilterStep step2;
    bool valid = false; // both steps passed
};

struct FilterOptions {
    double num_tolerance = 1e-6;
    long step_budget = kDefaultStepBudget;
    std::size_t search_budget = 10000; // step-2 subject-pair evaluations
    int search_restarts = 4;
    GenProfile profile;
};

namespace detail {

inline std::optional<ExecutionPair> run_pair(const SubjectProgram& program,
                                             const InputTransform& transform,
                                             const InputCase& x1,
                                             long step_budget) {
    InputCase x2 = apply_transform(transform, x1);
    RunOutcome src = run_function(program, x1.values, step_budget);
    if (src.status != RunStatus::Ok) return std::nullopt;
    RunOutcome fol = run_function(program, x2.values, step_budget);
    if (fol.status != RunStatus::Ok) return std::nullopt;
    ExecutionPair pair;
    pair.source = make_record(program.name + "@original", x1.id,
                              program.signature, x1.values, src);
    pair.followup = make_record(program.name + "@original", x2.id,
                                program.signature, x2.values, fol);
    return pair;
}

} // namespace detail

/// Step 1: evaluate the relation over every fresh source/follow-up pair
/// with Ok original runs; the first violation is the witness. Pairs where
/// the original errors or times out are skipped.
inline FilterStep filter_fresh_inputs(const MetamorphicRelation& mr,
                                      const SubjectProgram& program,
                                      const Corpus& corpus,
                                      const FilterOptions& opts = {}) {
    FilterStep step;
    step.outcome = FilterStep::Outcome::Pass;
    for (const InputCase& x1 : corpus.cases) {
        auto pair = detail::run_pair(program, mr.input_relation.transform, x1,
                                     opts.step_budget);
        if (!pair) continue;
        if (!eval_relation(mr.output_relation, *pair, opts.num_tolerance)) {
            step.outcome = FilterStep::Outcome::Fail;
            step.witness = x1;
            return step;
        }
    }
    return step;
}

// ---------------------------------------------------------------------------
// Step 2: counterexample search

namespace detail {

inline constexpr double kSearchEps = 1e-9;
inline constexpr double kSearchBig = 1e12;

inline double sanitize_dist(double d) {
    if (std::isnan(d)) return kSearchBig;
    return std::clamp(d, 0.0, kSearchBig);
}

double dist_true(const RelationExpr& e, const ExecutionPair& pair, double tol);

/// Branch distance to making `e` evaluate false (0 iff already false).
inline double dist_false(const RelationExpr& e, const ExecutionPair& pair,
                         double tol) {
    switch (e.kind) {
    case RelationExpr::Kind::BoolConst:
        return e.bval ? kSearchBig : 0.0;
    case RelationExpr::Kind::Var:
        return resolve_var(e.var, pair).as_bool() ? 1.0 : 0.0;
    case RelationExpr::Kind::NumConst:
        throw std::logic_error("distance over a non-boolean node");
    case RelationExpr::Kind::Operator:
        break;
    }
    auto t = [&](int i) { return dist_true(e.kids[static_cast<std::size_t>(i)], pair, tol); };
    auto f = [&](int i) { return dist_false(e.kids[static_cast<std::size_t>(i)], pair, tol); };
    switch (e.op) {
    case Op::And: return sanitize_dist(std::min(f(0), f(1)));
    case Op::Or: return sanitize_dist(f(0) + f(1));
    case Op::Not: return t(0);
    case Op::Implies: return sanitize_dist(t(0) + f(1));
    case Op::Iff:
        return sanitize_dist(std::min(t(0) + f(1), f(0) + t(1)));
    case Op::Xor:
        return sanitize_dist(std::min(t(0) + t(1), f(0) + f(1)));
    default: break;
    }
    // comparison level
    if (!eval_relation(e, pair, tol)) return 0.0;
    if (e.op == Op::SeqEq || e.op == Op::SeqNe) return 1.0; // no gradient
    double a = eval_expr(e.kids[0], pair, tol).as_num();
    double b = eval_expr(e.kids[1], pair, tol).as_num();
    if (std::isnan(a) || std::isnan(b)) return 1.0;
    switch (e.op) {
    case Op::NumEq: // need them to differ
        return sanitize_dist(std::max(tol + kSearchEps - std::fabs(a - b),
                                      kSearchEps));
    case Op::NumNe: return sanitize_dist(std::fabs(a - b));
    case Op::NumLt: return sanitize_dist(b - a);               // want a >= b
    case Op::NumLe: return sanitize_dist(b - a + kSearchEps);  // want a > b
    case Op::NumGt: return sanitize_dist(a - b);               // want a <= b
    case Op::NumGe: return sanitize_dist(a - b + kSearchEps);  // want a < b
    default: return 1.0;
    }
}

/// Branch distance to making `e` evaluate true (0 iff already true).
inline double dist_true(const RelationExpr& e, const ExecutionPair& pair,
                        double tol) {
    switch (e.kind) {
    case RelationExpr::Kind::BoolConst:
        return e.bval ? 0.0 : kSearchBig;
    case RelationExpr::Kind::Var:
        return resolve_var(e.var, pair).as_bool() ? 0.0 : 1.0;
    case RelationExpr::Kind::NumConst:
        throw std::logic_error("distance over a non-boolean node");
    case RelationExpr::Kind::Operator:
        break;
    }
    auto t = [&](int i) { return dist_true(e.kids[static_cast<std::size_t>(i)], pair, tol); };
    auto f = [&](int i) { return dist_false(e.kids[static_cast<std::size_t>(i)], pair, tol); };
    switch (e.op) {
    case Op::And: return sanitize_dist(t(0) + t(1));
    case Op::Or: return sanitize_dist(std::min(t(0), t(1)));
    case Op::Not: return f(0);
    case Op::Implies: return sanitize_dist(std::min(f(0), t(1)));
    case Op::Iff:
        return sanitize_dist(std::min(t(0) + t(1), f(0) + f(1)));
    case Op::Xor:
        return sanitize_dist(std::min(t(0) + f(1), f(0) + t(1)));
    default: break;
    }
    if (eval_relation(e, pair, tol)) return 0.0;
    if (e.op == Op::SeqEq || e.op == Op::SeqNe) return 1.0;
    double a = eval_expr(e.kids[0], pair, tol).as_num();
    double b = eval_expr(e.kids[1], pair, tol).as_num();
    if (std::isnan(a) || std::isnan(b)) return 1.0;
    switch (e.op) {
    case Op::NumEq: return sanitize_dist(std::fabs(a - b));
    case Op::NumNe:
        return sanitize_dist(std::max(tol + kSearchEps - std::fabs(a - b),
                                      kSearchEps));
    case Op::NumLt: return sanitize_dist(a - b + kSearchEps);
    case Op::NumLe: return sanitize_dist(a - b);
    case Op::NumGt: return sanitize_dist(b - a + kSearchEps);
    case Op::NumGe: return sanitize_dist(b - a);
    default: return 1.0;
    }
}

} // namespace detail

/// Step 2: restarted (1+1) hill climb over source inputs. Follow-ups come
/// from the transform, so the input relation holds by construction; the
/// objective is the distance to a violated output relation. Exhausting the
/// budget is a pass in the "no evidence found" sense, not a proof.
inline FilterStep search_counterexample(const MetamorphicRelation& mr,
                                        const SubjectProgram& program,
                                        std::size_t budget, std::uint64_t seed,
                                        const FilterOptions& opts = {}) {
    FilterStep step;
    step.outcome = FilterStep::Outcome::Pass;
    if (budget == 0) return step;

    Rng rng(seed);
    const int restarts = std::max(1, opts.search_restarts);
    std::size_t per_restart =
        std::max<std::size_t>(1, budget / static_cast<std::size_t>(restarts));
    std::size_t spent = 0;

    auto evaluate = [&](const InputCase& x1) -> std::pair<double, bool> {
        ++spent;
        auto pair = detail::run_pair(program, mr.input_relation.transform, x1,
                                     opts.step_budget);
        if (!pair) return {detail::kSearchBig * 2, false};
        if (!eval_relation(mr.output_relation, *pair, opts.num_tolerance))
            return {0.0, true};
        return {detail::dist_false(mr.output_relation, *pair,
                                   opts.num_tolerance),
                false};
    };

    for (int restart = 0; restart < restarts && spent < budget; ++restart) {
        InputCase current;
        current.id = "probe" + std::to_string(spent);
        current.values = random_tuple(program.signature, rng, opts.profile);
        auto [cur_d, violated] = evaluate(current);
        if (violated) {
            step.outcome = FilterStep::Outcome::Fail;
            step.witness = current;
            return step;
        }
        std::size_t stop = std::min(budget, spent + per_restart - 1);
        while (spent < stop) {
            InputCase cand;
            cand.id = "probe" + std::to_string(spent);
            cand.values = tweak_tuple(current.values, rng, opts.profile);
            auto [d, hit] = evaluate(cand);
            if (hit) {
                step.outcome = FilterStep::Outcome::Fail;
                step.witness = cand;
                return step;
            }
            if (d <= cur_d) {
                current = std::move(cand);
                cur_d = d;
            }
        }
    }
    return step;
}

/// The full two-step verdict; step 2 only runs when step 1 passed.
inline FilterVerdict two_step_filter(const MetamorphicRelation& mr,
                                     const SubjectProgram& program,
                                     const Corpus& filter_corpus,
                                     std::uint64_t seed,
                                     const FilterOptions& opts = {}) {
    FilterVerdict verdict;
    verdict.step1 = filter_fresh_inputs(mr, program, filter_corpus, opts);
    if (verdict.step1.outcome == FilterStep::Outcome::Pass)
        verdict.step2 =
            search_counterexample(mr, program, opts.search_budget, seed, opts);
    verdict.valid = verdict.step1.outcome == FilterStep::Outcome::Pass &&
                    verdict.step2.outcome == FilterStep::Outcome::Pass;
    return verdict;
}

// ---------------------------------------------------------------------------
// Mutation scoring

struct MutationScoreResult {
    std::vector<Bitset> per_mr_kills; // output-relation kills, per relation
    Bitset trivial_kills;             // crash/timeout where the original ran
    std::vector<double> per_mr_ms;    // (own kills + trivial) / total
    Bitset killed;                    // union of everything
    double ms = 0.0;
    long trivially_killed = 0;
};

/// Kills over the held-out mutants: a relation kills a mutant when some
/// source case yields Ok original runs, Ok mutant runs whose output differs
/// from the original on at least one side, and a false output relation on
/// the mutant pair. Mutants that crash or hang under inputs the original
/// handles are killed trivially and tallied separately.
inline MutationScoreResult mutation_score(
    const std::vector<MetamorphicRelation>& mrs, const SubjectProgram& program,
    const std::vector<Mutant>& eval_mutants, const Corpus& eval_corpus,
    const FilterOptions& opts = {}) {
    if (eval_mutants.empty())
        throw std::invalid_argument("mutation_score: no evaluation mutants");

    MutationScoreResult result;
    result.per_mr_kills.assign(mrs.size(), Bitset(eval_mutants.size()));
    result.trivial_kills = Bitset(eval_mutants.size());
    result.killed = Bitset(eval_mutants.size());

    for (std::size_t mi = 0; mi < mrs.size(); ++mi) {
        const MetamorphicRelation& mr = mrs[mi];
        for (const InputCase& x1 : eval_corpus.cases) {
            auto original = detail::run_pair(
                program, mr.input_relation.transform, x1, opts.step_budget);
            if (!original) continue;
            InputCase x2 = apply_transform(mr.input_relation.transform, x1);
            for (std::size_t k = 0; k < eval_mutants.size(); ++k) {
                if (result.per_mr_kills[mi].test(k)) continue;
                const Mutant& m = eval_mutants[k];
                RunOutcome msrc =
                    run_function(m.program, x1.values, opts.step_budget);
                RunOutcome mfol =
                    run_function(m.program, x2.values, opts.step_budget);
                if (msrc.status != RunStatus::Ok ||
                    mfol.status != RunStatus::Ok) {
                    result.trivial_kills.set(k);
                    continue;
                }
                bool differs =
                    !values_equal(msrc.output, original->source.output, 0.0) ||
                    !values_equal(mfol.output, original->followup.output, 0.0);
                if (!differs) continue;
                ExecutionPair pair;
                pair.incorrect = true;
                pair.mutant_id = m.id;
                pair.source = detail::make_record(m.id, x1.id, program.signature,
                                                  x1.values, msrc);
                pair.followup = detail::make_record(
                    m.id, x2.id, program.signature, x2.values, mfol);
                if (!eval_relation(mr.output_relation, pair,
                                   opts.num_tolerance))
                    result.per_mr_kills[mi].set(k);
            }
        }
    }

    std::size_t total = eval_mutants.size();
    result.trivially_killed = static_cast<long>(result.trivial_kills.count());
    for (std::size_t k = 0; k < total; ++k) {
        bool any = result.trivial_kills.test(k);
        for (const Bitset& bits : result.per_mr_kills)
            if (bits.test(k)) any = true;
        if (any) result.killed.set(k);
    }
    for (const Bitset& bits : result.per_mr_kills) {
        std::size_t n = 0;
        for (std::size_t k = 0; k < total; ++k)
            if (bits.test(k) || result.trivial_kills.test(k)) ++n;
        result.per_mr_ms.push_back(static_cast<double>(n) /
                                   static_cast<double>(total));
    }
    result.ms = static_cast<double>(result.killed.count()) /
                static_cast<double>(total);
    return result;
}

/// Regression baseline: the original's outcome per eval input is the
/// recorded assertion; a mutant is killed when any input yields a different
/// outcome (value, error, or timeout).
inline Bitset baseline_kills(const SubjectProgram& program,
                             const std::vector<Mutant>& eval_mutants,
                             const Corpus& eval_corpus,
                             long step_budget = kDefaultStepBudget) {
    Bitset killed(eval_mutants.size());
    std::vector<RunOutcome> expected;
    expected.reserve(eval_corpus.cases.size());
    for (const InputCase& c : eval_corpus.cases)
        expected.push_back(run_function(program, c.values, step_budget));
    for (std::size_t k = 0; k < eval_mutants.size(); ++k) {
        for (std::size_t i = 0; i < eval_corpus.cases.size() && !killed.test(k);
             ++i) {
            RunOutcome got = run_function(eval_mutants[k].program,
                                          eval_corpus.cases[i].values,
                                          step_budget);
            const RunOutcome& want = expected[i];
            bool differs = got.status != want.status;
            if (!differs && want.status == RunStatus::Ok)
                differs = !values_equal(got.output, want.output, 0.0);
            if (!differs && want.status == RunStatus::Error)
                differs = got.error_kind != want.error_kind;
            if (differs) killed.set(k);
        }
    }
    return killed;
}

/// Fraction of baseline-surviving mutants killed by the enhanced suite;
/// empty survivor sets have no defined ratio (reported as "-").
inline std::optional<double> delta_ms(const Bitset& baseline,
                                      const Bitset& enhanced_extra) {
    std::size_t survivors = 0, recovered = 0;
    for (std::size_t k = 0; k < baseline.size(); ++k) {
        if (baseline.test(k)) continue;
        ++survivors;
        if (enhanced_extra.test(k)) ++recovered;
    }
    if (survivors == 0) return std::nullopt;
    return static_cast<double>(recovered) / static_cast<double>(survivors);
}

inline std::optional<double> baseline_and_delta(
    const SubjectProgram& program, const std::vector<Mutant>& eval_mutants,
    const Corpus& eval_corpus, const std::vector<MetamorphicRelation>& mrs,
    const FilterOptions& opts = {}) {
    Bitset baseline = baseline_kills(program, eval_mutants, eval_corpus,
                                     opts.step_budget);
    if (mrs.empty()) {
        Bitset none(eval_mutants.size());
        return delta_ms(baseline, none);
    }
    MutationScoreResult scored =
        mutation_score(mrs, program, eval_mutants, eval_corpus, opts);
    return delta_ms(baseline, scored.killed);
}

} // namespace mrgen
