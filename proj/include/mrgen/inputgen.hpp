#pragma once

#include <set>
#include <string>
#include <vector>

#include "mrgen/interp.hpp"
#include "mrgen/mulang.hpp"
#include "mrgen/rng.hpp"
#include "mrgen/value.hpp"

// Source-input generation: plain seeded random tuples plus a
// coverage-guided variant that keeps inputs reaching new branch outcomes.

namespace mrgen {

enum class CorpusPurpose { Train, Filter, Eval };

inline const char* purpose_name(CorpusPurpose p) {
    switch (p) {
    case CorpusPurpose::Train: return "train";
    case CorpusPurpose::Filter: return "filter";
    case CorpusPurpose::Eval: return "eval";
    }
    return "?";
}

struct InputCase {
    std::string id;
    std::vector<Value> values;
};

struct Corpus {
    std::vector<InputCase> cases;
    std::set<std::pair<int, bool>> covered_branches;
    std::uint64_t generator_seed = 0;
    CorpusPurpose purpose = CorpusPurpose::Train;
};

/// Value distribution: numbers mix domain-typical special values with small
/// and wide integer ranges; sequences have geometric length (mean 4).
struct GenProfile {
    std::vector<double> special_nums = {-128, -1, 0, 1, 2};
    double p_special = 0.35;
    double p_small = 0.45; // remainder draws from the wide range
    std::int64_t small_lo = -10, small_hi = 10;
    std::int64_t wide_lo = -10000, wide_hi = 10000;
    double seq_continue = 0.8;
    std::size_t seq_max_len = 64;
};

inline double random_number(Rng& rng, const GenProfile& profile) {
    double u = rng.next_unit();
    if (u < profile.p_special) return rng.pick(profile.special_nums);
    if (u < profile.p_special + profile.p_small)
        return static_cast<double>(
            rng.next_int(profile.small_lo, profile.small_hi));
    return static_cast<double>(rng.next_int(profile.wide_lo, profile.wide_hi));
}

inline Value random_value(TypeTag tag, Rng& rng, const GenProfile& profile) {
    switch (tag) {
    case TypeTag::Bool: return Value::boolean(rng.next_bool());
    case TypeTag::Num: return Value::number(random_number(rng, profile));
    case TypeTag::Seq: {
        std::vector<double> elems;
        while (elems.size() < profile.seq_max_len &&
               rng.next_bool(profile.seq_continue))
            elems.push_back(random_number(rng, profile));
        return Value::sequence(std::move(elems));
    }
    }
    return Value::number(0);
}

inline std::vector<Value> random_tuple(const Signature& sig, Rng& rng,
                                       const GenProfile& profile) {
    std::vector<Value> out;
    out.reserve(sig.params.size());
    for (const auto& [name, tag] : sig.params)
        out.push_back(random_value(tag, rng, profile));
    return out;
}

/// Small neighborhood move used by coverage-guided retention and by the
/// counterexample search: nudge one parameter.
inline std::vector<Value> tweak_tuple(const std::vector<Value>& values,
                                      Rng& rng, const GenProfile& profile) {
    std::vector<Value> out = values;
    if (out.empty()) return out;
    std::size_t i = rng.next_index(out.size());
    switch (out[i].tag()) {
    case TypeTag::Bool:
        out[i] = Value::boolean(!out[i].as_bool());
        break;
    case TypeTag::Num: {
        double v = out[i].as_num();
        switch (rng.next_index(5)) {
        case 0: v += 1; break;
        case 1: v -= 1; break;
        case 2: v *= 2; break;
        case 3: v = -v; break;
        default: v = random_number(rng, profile); break;
        }
        out[i] = Value::number(v);
        break;
    }
    case TypeTag::Seq: {
        std::vector<double> s = out[i].as_seq();
        std::size_t choice = rng.next_index(3);
        if (choice == 0 && !s.empty()) {
            s[rng.next_index(s.size())] +=
                static_cast<double>(rng.next_int(-2, 2));
        } else if (choice == 1 && s.size() < profile.seq_max_len) {
            s.insert(s.begin() + static_cast<std::ptrdiff_t>(
                                     rng.next_index(s.size() + 1)),
                     random_number(rng, profile));
        } else if (!s.empty()) {
            s.erase(s.begin() +
                    static_cast<std::ptrdiff_t>(rng.next_index(s.size())));
        }
        out[i] = Value::sequence(std::move(s));
        break;
    }
    }
    return out;
}

inline Corpus generate_random_inputs(const Signature& sig, std::size_t n,
                                     std::uint64_t seed,
                                     const GenProfile& profile = {}) {
    if (n == 0) throw std::invalid_argument("corpus size must be positive");
    Corpus corpus;
    corpus.generator_seed = seed;
    Rng rng(seed);
    for (std::size_t i = 0; i < n; ++i) {
        InputCase c;
        c.id = "test" + std::to_string(i);
        c.values = random_tuple(sig, rng, profile);
        corpus.cases.push_back(std::move(c));
    }
    return corpus;
}

/// Random generation with novelty retention: the first `n_base` random
/// tuples are always kept; afterwards a tuple (random, or a tweak of a kept
/// one) is kept only when it reaches a branch outcome the corpus has not
/// covered yet. `budget` counts subject evaluations.
inline Corpus generate_coverage_guided(const SubjectProgram& program,
                                       std::size_t budget, std::uint64_t seed,
                                       const GenProfile& profile = {},
                                       std::size_t n_base = 500,
                                       long step_budget = kDefaultStepBudget) {
    if (budget == 0) throw std::invalid_argument("budget must be positive");
    Corpus corpus;
    corpus.generator_seed = seed;
    Rng rng(seed);
    for (std::size_t evals = 0; evals < budget; ++evals) {
        std::vector<Value> vals;
        bool base_phase = corpus.cases.size() < n_base;
        if (!base_phase && !corpus.cases.empty() && rng.next_bool())
            vals = tweak_tuple(rng.pick(corpus.cases).values, rng, profile);
        else
            vals = random_tuple(program.signature, rng, profile);

        RunOutcome out = run_function(program, vals, step_budget);
        bool novel = false;
        for (const auto& branch : out.trace.branch_outcomes)
            if (!corpus.covered_branches.count(branch)) novel = true;
        if (base_phase || novel) {
            InputCase c;
            c.id = "test" + std::to_string(corpus.cases.size());
            c.values = std::move(vals);
            corpus.cases.push_back(std::move(c));
            corpus.covered_branches.insert(out.trace.branch_outcomes.begin(),
                                           out.trace.branch_outcomes.end());
        }
    }
    return corpus;
}

/// Re-runs every case; the union of branch outcomes must reproduce
/// covered_branches for coverage-guided corpora.
inline std::set<std::pair<int, bool>> replay_coverage(
    const SubjectProgram& program, const Corpus& corpus,
    long step_budget = kDefaultStepBudget) {
    std::set<std::pair<int, bool>> covered;
    for (const InputCase& c : corpus.cases) {
        RunOutcome out = run_function(program, c.values, step_budget);
        covered.insert(out.trace.branch_outcomes.begin(),
                       out.trace.branch_outcomes.end());
    }
    return covered;
}

// ---------------------------------------------------------------------------
// Corpus file: one case per line, `id <TAB> value,value,...`

inline std::string render_corpus(const Corpus& corpus) {
    std::string out;
    for (const InputCase& c : corpus.cases) {
        out += c.id;
        out += "\t";
        for (std::size_t i = 0; i < c.values.size(); ++i) {
            if (i) out += ",";
            out += render_value(c.values[i]);
        }
        out += "\n";
    }
    return out;
}

inline std::vector<std::string_view> split_top_level(std::string_view line) {
    std::vector<std::string_view> out;
    int depth = 0;
    std::size_t start = 0;
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '[') ++depth;
        if (line[i] == ']') --depth;
        if (line[i] == ',' && depth == 0) {
            out.push_back(line.substr(start, i - start));
            start = i + 1;
        }
    }
    out.push_back(line.substr(start));
    return out;
}

inline Corpus parse_corpus(std::string_view text) {
    Corpus corpus;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t eol = text.find('\n', pos);
        if (eol == std::string_view::npos) eol = text.size();
        std::string_view line = text.substr(pos, eol - pos);
        pos = eol + 1;
        if (line.empty()) continue;
        std::size_t tab = line.find('\t');
        if (tab == std::string_view::npos)
            throw std::runtime_error("corpus line missing tab separator");
        InputCase c;
        c.id = std::string(line.substr(0, tab));
        if (tab + 1 < line.size())
            for (std::string_view tok : split_top_level(line.substr(tab + 1)))
                c.values.push_back(parse_value(tok));
        corpus.cases.push_back(std::move(c));
    }
    return corpus;
}

} // namespace mrgen
