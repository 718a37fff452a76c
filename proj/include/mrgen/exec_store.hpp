#pragma once

#include <fstream>
#include <map>
#include <string>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "mrgen/inputgen.hpp"
#include "mrgen/interp.hpp"
#include "mrgen/mutate.hpp"
#include "mrgen/transforms.hpp"

// Collection, deduplication, capping, and persistence of correct and
// incorrect execution pairs, so relation fitness never re-runs the subject.
// A pair enters the store only when both runs returned values: correct
// pairs are two Ok runs of the original, incorrect pairs are two Ok runs of
// a mutant whose output differs from the original's on at least one side.
// Mutants that crash or hang where the original did not are tallied as
// trivially killed instead.

namespace mrgen {

struct ExecutionRecord {
    std::string system_id; // "<name>@original" or a mutant id
    std::string test_id;
    std::vector<std::pair<std::string, Value>> inputs; // signature order
    RunStatus status = RunStatus::Ok;
    Value output;           // when Ok
    std::string error_kind; // when Error

    const Value* find_input(std::string_view name) const {
        for (const auto& [n, v] : inputs)
            if (n == name) return &v;
        return nullptr;
    }
};

struct ExecutionPair {
    ExecutionRecord source;
    ExecutionRecord followup;
    bool incorrect = false;
    std::string mutant_id; // nonempty iff incorrect
};

struct ExecutionStore {
    std::string subject;
    Signature signature;
    InputTransform transform;
    std::vector<ExecutionPair> correct;
    std::vector<ExecutionPair> incorrect;
    std::size_t max_correct = 9000;
    std::size_t max_incorrect = 9000;
    std::map<std::string, long> trivially_killed; // mutant id -> case count
};

namespace detail {

inline std::string pair_key(const ExecutionPair& p) {
    std::string key;
    for (const auto& [name, v] : p.source.inputs) {
        key += render_value(v);
        key += ";";
    }
    key += "|" + render_value(p.source.output);
    key += "|" + render_value(p.followup.output);
    key += "|" + p.mutant_id;
    return key;
}

inline ExecutionRecord make_record(const std::string& system_id,
                                   const std::string& test_id,
                                   const Signature& sig,
                                   const std::vector<Value>& inputs,
                                   const RunOutcome& run) {
    ExecutionRecord rec;
    rec.system_id = system_id;
    rec.test_id = test_id;
    for (std::size_t i = 0; i < inputs.size(); ++i)
        rec.inputs.emplace_back(sig.params[i].first, inputs[i]);
    rec.status = run.status;
    if (run.status == RunStatus::Ok) rec.output = run.output;
    if (run.status == RunStatus::Error) rec.error_kind = run.error_kind;
    return rec;
}

} // namespace detail

struct CollectOptions {
    std::size_t max_correct = 9000;
    std::size_t max_incorrect = 9000;
    long step_budget = kDefaultStepBudget;
};

/// Runs the original and every mutant over each source/follow-up pair of
/// the corpus. Duplicate pairs (same input and output values and mutant)
/// are collapsed on the fly; caps are recorded here and enforced by
/// filter_and_sample.
inline ExecutionStore collect_executions(const SubjectProgram& program,
                                         const std::vector<Mutant>& mutants,
                                         const Corpus& corpus,
                                         const InputTransform& transform,
                                         const CollectOptions& opts = {}) {
    ExecutionStore store;
    store.subject = program.name;
    store.signature = program.signature;
    store.transform = transform;
    store.max_correct = opts.max_correct;
    store.max_incorrect = opts.max_incorrect;

    const std::string original_id = program.name + "@original";
    std::unordered_set<std::string> seen;

    for (const InputCase& x1 : corpus.cases) {
        InputCase x2 = apply_transform(transform, x1);
        RunOutcome src = run_function(program, x1.values, opts.step_budget);
        RunOutcome fol = run_function(program, x2.values, opts.step_budget);
        if (src.status != RunStatus::Ok || fol.status != RunStatus::Ok)
            continue; // relations predicate on value outputs only

        ExecutionPair correct;
        correct.source = detail::make_record(original_id, x1.id,
                                             program.signature, x1.values, src);
        correct.followup = detail::make_record(original_id, x2.id,
                                               program.signature, x2.values, fol);
        if (seen.insert(detail::pair_key(correct)).second)
            store.correct.push_back(correct);

        for (const Mutant& m : mutants) {
            RunOutcome msrc = run_function(m.program, x1.values, opts.step_budget);
            RunOutcome mfol = run_function(m.program, x2.values, opts.step_budget);
            if (msrc.status != RunStatus::Ok || mfol.status != RunStatus::Ok) {
                // detectable without any oracle
                store.trivially_killed[m.id] += 1;
                continue;
            }
            bool differs =
                !values_equal(msrc.output, src.output, 0.0) ||
                !values_equal(mfol.output, fol.output, 0.0);
            if (!differs) continue; // equivalent on this pair

            ExecutionPair bad;
            bad.incorrect = true;
            bad.mutant_id = m.id;
            bad.source = detail::make_record(m.id, x1.id, program.signature,
                                             x1.values, msrc);
            bad.followup = detail::make_record(m.id, x2.id, program.signature,
                                               x2.values, mfol);
            if (seen.insert(detail::pair_key(bad)).second)
                store.incorrect.push_back(bad);
        }
    }
    return store;
}

/// Dedup, then seeded uniform down-sample to the caps. Keeps collection
/// order, so applying it again (already within caps) changes nothing.
inline void filter_and_sample(ExecutionStore& store,
                              std::pair<std::size_t, std::size_t> caps,
                              std::uint64_t seed) {
    if (caps.first == 0 || caps.second == 0)
        throw std::invalid_argument("caps must be positive");
    store.max_correct = caps.first;
    store.max_incorrect = caps.second;

    auto dedup = [](std::vector<ExecutionPair>& pairs) {
        std::unordered_set<std::string> seen;
        std::vector<ExecutionPair> out;
        for (ExecutionPair& p : pairs)
            if (seen.insert(detail::pair_key(p)).second)
                out.push_back(std::move(p));
        pairs = std::move(out);
    };
    dedup(store.correct);
    dedup(store.incorrect);

    auto sample = [&](std::vector<ExecutionPair>& pairs, std::size_t cap,
                      const char* tag) {
        if (pairs.size() <= cap) return;
        Rng rng(derive_seed(seed, tag));
        std::vector<std::size_t> idx(pairs.size());
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        for (std::size_t i = 0; i < cap; ++i) {
            std::size_t j = i + rng.next_index(idx.size() - i);
            std::swap(idx[i], idx[j]);
        }
        idx.resize(cap);
        std::sort(idx.begin(), idx.end());
        std::vector<ExecutionPair> out;
        out.reserve(cap);
        for (std::size_t i : idx) out.push_back(std::move(pairs[i]));
        pairs = std::move(out);
    };
    sample(store.correct, caps.first, "sample.correct");
    sample(store.incorrect, caps.second, "sample.incorrect");
}

// ---------------------------------------------------------------------------
// Persistence: JSON lines. First line is a header object; every following
// line holds one pair with two embedded records shaped like
//   {"systemId": "pow@original", "testId": "test100",
//    "variables": {"inputs": {"k": -128.0, "e": 2.0},
//                  "outputs": {"return": 16384.0}}, "status": "ok"}
// `status` (with `errorKind`) extends the schema for non-Ok runs; non-finite
// numbers are encoded as the strings "NaN", "Infinity", "-Infinity".

namespace detail {

inline nlohmann::json num_to_json(double v) {
    if (std::isnan(v)) return "NaN";
    if (std::isinf(v)) return v > 0 ? "Infinity" : "-Infinity";
    return v;
}

inline nlohmann::json value_to_json(const Value& v) {
    switch (v.tag()) {
    case TypeTag::Bool: return v.as_bool();
    case TypeTag::Num: return num_to_json(v.as_num());
    case TypeTag::Seq: {
        nlohmann::json arr = nlohmann::json::array();
        for (double x : v.as_seq()) arr.push_back(num_to_json(x));
        return arr;
    }
    }
    return nullptr;
}

inline double json_to_num(const nlohmann::json& j) {
    if (j.is_string()) {
        const std::string& s = j.get_ref<const std::string&>();
        if (s == "NaN") return std::numeric_limits<double>::quiet_NaN();
        if (s == "Infinity") return std::numeric_limits<double>::infinity();
        if (s == "-Infinity") return -std::numeric_limits<double>::infinity();
        throw std::runtime_error("unknown numeric encoding '" + s + "'");
    }
    return j.get<double>();
}

inline Value json_to_value(const nlohmann::json& j) {
    if (j.is_boolean()) return Value::boolean(j.get<bool>());
    if (j.is_array()) {
        std::vector<double> elems;
        for (const auto& x : j) elems.push_back(json_to_num(x));
        return Value::sequence(std::move(elems));
    }
    return Value::number(json_to_num(j));
}

inline const char* status_name(RunStatus s) {
    switch (s) {
    case RunStatus::Ok: return "ok";
    case RunStatus::Error: return "error";
    case RunStatus::Timeout: return "timeout";
    }
    return "?";
}

} // namespace detail

inline nlohmann::json record_to_json(const ExecutionRecord& rec) {
    nlohmann::json inputs = nlohmann::json::object();
    for (const auto& [name, v] : rec.inputs)
        inputs[name] = detail::value_to_json(v);
    nlohmann::json vars = {{"inputs", inputs}};
    if (rec.status == RunStatus::Ok)
        vars["outputs"] = {{"return", detail::value_to_json(rec.output)}};
    nlohmann::json j = {{"systemId", rec.system_id},
                        {"testId", rec.test_id},
                        {"variables", vars},
                        {"status", detail::status_name(rec.status)}};
    if (rec.status == RunStatus::Error) j["errorKind"] = rec.error_kind;
    return j;
}

/// Inverse of record_to_json. Input order follows the signature when given
/// (records on their own keep the file's alphabetical key order).
inline ExecutionRecord record_from_json(const nlohmann::json& j,
                                        const Signature* sig = nullptr) {
    ExecutionRecord rec;
    rec.system_id = j.at("systemId").get<std::string>();
    rec.test_id = j.at("testId").get<std::string>();
    const nlohmann::json& inputs = j.at("variables").at("inputs");
    if (sig) {
        for (const auto& [name, tag] : sig->params)
            rec.inputs.emplace_back(name,
                                    detail::json_to_value(inputs.at(name)));
    } else {
        for (auto it = inputs.begin(); it != inputs.end(); ++it)
            rec.inputs.emplace_back(it.key(), detail::json_to_value(it.value()));
    }
    std::string status = j.value("status", "ok");
    if (status == "ok") {
        rec.status = RunStatus::Ok;
        rec.output =
            detail::json_to_value(j.at("variables").at("outputs").at("return"));
    } else if (status == "error") {
        rec.status = RunStatus::Error;
        rec.error_kind = j.value("errorKind", "");
    } else if (status == "timeout") {
        rec.status = RunStatus::Timeout;
    } else {
        throw std::runtime_error("unknown record status '" + status + "'");
    }
    return rec;
}

inline std::string store_to_jsonl(const ExecutionStore& store) {
    nlohmann::json params = nlohmann::json::array();
    for (const auto& [name, tag] : store.signature.params)
        params.push_back({name, tag_name(tag)});
    nlohmann::json header = {
        {"type", "header"},
        {"subject", store.subject},
        {"signature",
         {{"params", params}, {"output", tag_name(store.signature.output)}}},
        {"transform", transform_descriptor(store.transform)},
        {"caps", {store.max_correct, store.max_incorrect}},
        {"trivialKills", store.trivially_killed}};
    std::string out = header.dump() + "\n";
    auto emit = [&](const ExecutionPair& p) {
        nlohmann::json j = {{"type", "pair"},
                            {"label", p.incorrect ? "incorrect" : "correct"},
                            {"source", record_to_json(p.source)},
                            {"followup", record_to_json(p.followup)}};
        if (p.incorrect) j["mutantId"] = p.mutant_id;
        out += j.dump() + "\n";
    };
    for (const ExecutionPair& p : store.correct) emit(p);
    for (const ExecutionPair& p : store.incorrect) emit(p);
    return out;
}

inline ExecutionStore store_from_jsonl(std::string_view text) {
    ExecutionStore store;
    std::size_t pos = 0;
    std::size_t line_no = 0;
    bool have_header = false;
    while (pos < text.size()) {
        std::size_t eol = text.find('\n', pos);
        if (eol == std::string_view::npos) eol = text.size();
        std::string_view line = text.substr(pos, eol - pos);
        pos = eol + 1;
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw std::runtime_error("store parse error at line " +
                                     std::to_string(line_no) + ": " + e.what());
        }
        std::string type = j.value("type", "");
        if (type == "header") {
            store.subject = j.at("subject").get<std::string>();
            store.signature.params.clear();
            for (const auto& p : j.at("signature").at("params")) {
                std::string name = p.at(0).get<std::string>();
                std::string tag = p.at(1).get<std::string>();
                TypeTag t = tag == "bool"  ? TypeTag::Bool
                            : tag == "num" ? TypeTag::Num
                                           : TypeTag::Seq;
                store.signature.params.emplace_back(name, t);
            }
            std::string out_tag =
                j.at("signature").at("output").get<std::string>();
            store.signature.output = out_tag == "bool"  ? TypeTag::Bool
                                     : out_tag == "num" ? TypeTag::Num
                                                        : TypeTag::Seq;
            store.transform = parse_transform_descriptor(
                j.at("transform").get<std::string>());
            store.max_correct = j.at("caps").at(0).get<std::size_t>();
            store.max_incorrect = j.at("caps").at(1).get<std::size_t>();
            for (auto it = j.at("trivialKills").begin();
                 it != j.at("trivialKills").end(); ++it)
                store.trivially_killed[it.key()] = it.value().get<long>();
            have_header = true;
        } else if (type == "pair") {
            if (!have_header)
                throw std::runtime_error("store pair before header at line " +
                                         std::to_string(line_no));
            try {
                ExecutionPair p;
                p.incorrect = j.at("label").get<std::string>() == "incorrect";
                if (p.incorrect)
                    p.mutant_id = j.at("mutantId").get<std::string>();
                p.source = record_from_json(j.at("source"), &store.signature);
                p.followup = record_from_json(j.at("followup"), &store.signature);
                (p.incorrect ? store.incorrect : store.correct)
                    .push_back(std::move(p));
            } catch (const nlohmann::json::exception& e) {
                throw std::runtime_error("store parse error at line " +
                                         std::to_string(line_no) + ": " +
                                         e.what());
            }
        } else {
            throw std::runtime_error("unknown store line type at line " +
                                     std::to_string(line_no));
        }
    }
    if (!have_header) throw std::runtime_error("store file has no header");

    // correct pairs must satisfy the canonical input relation
    InputRelationSpec rel = canonical_relation(store.transform, store.signature);
    for (const ExecutionPair& p : store.correct) {
        InputCase x1, x2;
        x1.id = p.source.test_id;
        x2.id = p.followup.test_id;
        for (const auto& [name, v] : p.source.inputs) x1.values.push_back(v);
        for (const auto& [name, v] : p.followup.inputs) x2.values.push_back(v);
        if (!check_relation(rel, x1, x2))
            throw std::runtime_error(
                "store pair violates the canonical input relation (testId " +
                p.source.test_id + ")");
    }
    return store;
}

inline void save_store(const ExecutionStore& store, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << store_to_jsonl(store);
}

inline ExecutionStore load_store(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::string text((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
    return store_from_jsonl(text);
}

} // namespace mrgen
