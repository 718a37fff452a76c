#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"
#include "mrgen/exec_store.hpp"

using namespace mrgen;
using testhelpers::load_fixture;

namespace {

InputTransform e_minus_one() {
    InputTransform t;
    t.kind = TransformKind::NumericAddition;
    t.param_a = 1;
    t.constant = -1;
    return t;
}

Corpus corpus_of(std::vector<std::vector<Value>> tuples) {
    Corpus c;
    for (std::size_t i = 0; i < tuples.size(); ++i) {
        InputCase ic;
        ic.id = "test" + std::to_string(i);
        ic.values = std::move(tuples[i]);
        c.cases.push_back(std::move(ic));
    }
    return c;
}

const Mutant* find_mutant(const std::vector<Mutant>& ms, const char* stmt) {
    for (const Mutant& m : ms)
        if (m.opcode == "STD" && m.original_token == stmt) return &m;
    return nullptr;
}

} // namespace

TEST_CASE("collection captures correct and differing mutant pairs") {
    SubjectProgram pow = load_fixture("pow");
    auto mutants = generate_mutants(pow);
    const Mutant* deletion = find_mutant(mutants, "k2p = k2p * k2p;");
    REQUIRE(deletion);

    Corpus corpus = corpus_of({{Value::number(-128), Value::number(2)}});
    ExecutionStore store =
        collect_executions(pow, {*deletion}, corpus, e_minus_one());

    REQUIRE(store.correct.size() == 1);
    CHECK(store.correct[0].source.output.as_num() == 16384.0);
    CHECK(store.correct[0].followup.output.as_num() == -128.0);
    CHECK(store.correct[0].source.system_id == "pow@original");

    REQUIRE(store.incorrect.size() == 1);
    CHECK(store.incorrect[0].mutant_id == deletion->id);
    CHECK(store.incorrect[0].source.output.as_num() == -128.0);
    CHECK(store.incorrect[0].followup.output.as_num() == -128.0);
}

TEST_CASE("equivalent-on-this-pair executions are filtered") {
    SubjectProgram abs = parse_program(
        "fn abs(x: num) -> num { if (x < 0) { return -(x); } return x; }");
    auto mutants = generate_mutants(abs);
    // x<0 -> x<=0 only moves the boundary case x=0, where both return 0
    const Mutant* boundary = nullptr;
    for (const Mutant& m : mutants)
        if (m.opcode == "ROR" && m.mutated_token == "<=") boundary = &m;
    REQUIRE(boundary);

    InputTransform t;
    t.kind = TransformKind::NumericMultiplication;
    t.param_a = 0;
    t.constant = -1;
    Corpus corpus = corpus_of({{Value::number(0)},
                               {Value::number(4)},
                               {Value::number(-7)}});
    ExecutionStore store = collect_executions(abs, {*boundary}, corpus, t);
    CHECK(store.correct.size() == 3);
    CHECK(store.incorrect.empty());
    CHECK(store.trivially_killed.empty());
}

TEST_CASE("crashing and hanging mutants are tallied, not paired") {
    SubjectProgram pow = load_fixture("pow");
    auto mutants = generate_mutants(pow);
    const Mutant* hang = find_mutant(mutants, "e = e >> 1;");
    REQUIRE(hang);

    Corpus corpus = corpus_of({{Value::number(2), Value::number(3)}});
    CollectOptions opts;
    opts.step_budget = 2000;
    ExecutionStore store =
        collect_executions(pow, {*hang}, corpus, e_minus_one(), opts);
    CHECK(store.incorrect.empty());
    CHECK(store.trivially_killed.at(hang->id) == 1);
}

TEST_CASE("no incorrect pair is output-identical to its correct counterpart") {
    SubjectProgram pow = load_fixture("pow");
    auto mutants = generate_mutants(pow);
    Corpus corpus = generate_random_inputs(pow.signature, 60, 31);
    ExecutionStore store = collect_executions(pow, mutants, corpus, e_minus_one());

    for (const ExecutionPair& bad : store.incorrect) {
        const ExecutionPair* twin = nullptr;
        for (const ExecutionPair& good : store.correct)
            if (good.source.test_id == bad.source.test_id &&
                values_equal(good.source.inputs[0].second,
                             bad.source.inputs[0].second, 0.0) &&
                values_equal(good.source.inputs[1].second,
                             bad.source.inputs[1].second, 0.0))
                twin = &good;
        if (!twin) continue; // correct pair may have been deduped
        bool differs =
            !values_equal(bad.source.output, twin->source.output, 0.0) ||
            !values_equal(bad.followup.output, twin->followup.output, 0.0);
        CHECK(differs);
    }
}

TEST_CASE("filter_and_sample dedups, caps, and is idempotent") {
    ExecutionStore store;
    store.subject = "synthetic";
    store.signature.params = {{"x", TypeTag::Num}};
    store.signature.output = TypeTag::Num;
    InputTransform t;
    t.kind = TransformKind::NumericAddition;
    t.param_a = 0;
    t.constant = 1;
    store.transform = t;

    auto mk_pair = [&](double x, double out, bool incorrect, int mutant) {
        ExecutionPair p;
        p.incorrect = incorrect;
        if (incorrect) p.mutant_id = "m" + std::to_string(mutant);
        p.source.system_id = incorrect ? p.mutant_id : "synthetic@original";
        p.source.test_id = "t";
        p.source.inputs = {{"x", Value::number(x)}};
        p.source.output = Value::number(out);
        p.followup = p.source;
        p.followup.inputs = {{"x", Value::number(x + 1)}};
        return p;
    };
    for (int i = 0; i < 12000; ++i)
        store.incorrect.push_back(mk_pair(i, i * 2, true, i % 7));
    for (int i = 0; i < 100; ++i) store.correct.push_back(mk_pair(i, i, false, 0));
    // inject duplicates
    store.incorrect.push_back(mk_pair(0, 0, true, 0));
    store.correct.push_back(mk_pair(0, 0, false, 0));

    ExecutionStore twin = store;
    filter_and_sample(store, {9000, 9000}, 5);
    filter_and_sample(twin, {9000, 9000}, 5);

    CHECK(store.correct.size() == 100);
    REQUIRE(store.incorrect.size() == 9000);
    REQUIRE(twin.incorrect.size() == 9000);
    for (std::size_t i = 0; i < store.incorrect.size(); ++i)
        CHECK(store.incorrect[i].source.inputs[0].second.as_num() ==
              twin.incorrect[i].source.inputs[0].second.as_num());

    // idempotent once within caps
    ExecutionStore again = store;
    filter_and_sample(again, {9000, 9000}, 99);
    REQUIRE(again.incorrect.size() == 9000);
    for (std::size_t i = 0; i < again.incorrect.size(); ++i)
        CHECK(again.incorrect[i].source.inputs[0].second.as_num() ==
              store.incorrect[i].source.inputs[0].second.as_num());

    CHECK_THROWS_AS(filter_and_sample(store, {0, 1}, 1), std::invalid_argument);
}

TEST_CASE("store round-trips through the JSON-lines format") {
    SubjectProgram pow = load_fixture("pow");
    auto mutants = generate_mutants(pow);
    mutants.resize(6);
    Corpus corpus = generate_random_inputs(pow.signature, 40, 17);
    ExecutionStore store = collect_executions(pow, mutants, corpus, e_minus_one());
    filter_and_sample(store, {50, 50}, 3);

    std::string text = store_to_jsonl(store);
    ExecutionStore back = store_from_jsonl(text);

    CHECK(back.subject == store.subject);
    CHECK(back.signature.params == store.signature.params);
    CHECK(transform_descriptor(back.transform) ==
          transform_descriptor(store.transform));
    CHECK(back.max_correct == store.max_correct);
    CHECK(back.max_incorrect == store.max_incorrect);
    CHECK(back.trivially_killed == store.trivially_killed);
    REQUIRE(back.correct.size() == store.correct.size());
    REQUIRE(back.incorrect.size() == store.incorrect.size());
    for (std::size_t i = 0; i < store.correct.size(); ++i) {
        CHECK(back.correct[i].source.test_id == store.correct[i].source.test_id);
        CHECK(values_equal(back.correct[i].source.output,
                           store.correct[i].source.output, 0.0));
    }
    for (std::size_t i = 0; i < store.incorrect.size(); ++i)
        CHECK(back.incorrect[i].mutant_id == store.incorrect[i].mutant_id);

    // byte-stable through a save/load cycle
    CHECK(store_to_jsonl(back) == text);
}

TEST_CASE("a Listing-3 style record parses on its own") {
    auto j = nlohmann::json::parse(
        R"({"systemId": "pow@original", "testId": "test100",)"
        R"( "variables": { "inputs": { "k": -128.0, "e": 2.0},)"
        R"( "outputs": {"return": 16384.0} }, "status": "ok"})");
    ExecutionRecord rec = record_from_json(j);
    CHECK(rec.system_id == "pow@original");
    CHECK(rec.test_id == "test100");
    REQUIRE(rec.inputs.size() == 2);
    const Value* k = rec.find_input("k");
    const Value* e = rec.find_input("e");
    REQUIRE(k);
    REQUIRE(e);
    CHECK(k->as_num() == -128.0);
    CHECK(e->as_num() == 2.0);
    CHECK(rec.status == RunStatus::Ok);
    CHECK(rec.output.as_num() == 16384.0);
}

TEST_CASE("malformed and tampered stores are rejected whole") {
    SubjectProgram pow = load_fixture("pow");
    Corpus corpus = corpus_of({{Value::number(3), Value::number(2)}});
    ExecutionStore store = collect_executions(pow, {}, corpus, e_minus_one());
    std::string text = store_to_jsonl(store);

    // truncated mid-line
    CHECK_THROWS_AS(store_from_jsonl(text.substr(0, text.size() / 2)),
                    std::runtime_error);
    // pair before header
    std::string_view sv = text;
    std::string no_header(sv.substr(sv.find('\n') + 1));
    CHECK_THROWS_AS(store_from_jsonl(no_header), std::runtime_error);

    // a followup input edited to break the canonical relation
    std::string tampered = text;
    std::size_t at = tampered.find("\"e\":1.0", tampered.find("followup"));
    REQUIRE(at != std::string::npos);
    tampered.replace(at, 7, "\"e\":9.0");
    CHECK_THROWS_AS(store_from_jsonl(tampered), std::runtime_error);
}

TEST_CASE("non-finite outputs survive persistence") {
    SubjectProgram pow = load_fixture("pow");
    // 10^400 overflows to infinity
    Corpus corpus = corpus_of({{Value::number(10), Value::number(400)}});
    ExecutionStore store = collect_executions(pow, {}, corpus, e_minus_one());
    REQUIRE(store.correct.size() == 1);
    REQUIRE(std::isinf(store.correct[0].source.output.as_num()));

    ExecutionStore back = store_from_jsonl(store_to_jsonl(store));
    CHECK(std::isinf(back.correct[0].source.output.as_num()));
    CHECK(values_equal(back.correct[0].source.output,
                       store.correct[0].source.output, 0.0));
}
