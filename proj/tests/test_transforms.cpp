#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"
#include "mrgen/transforms.hpp"

using namespace mrgen;
using testhelpers::load_fixture;

namespace {

ConstantPool pool_of(std::vector<std::pair<double, long>> cs) {
    ConstantPool p;
    p.constants = std::move(cs);
    return p;
}

bool has_transform(const std::vector<InputTransform>& ts, TransformKind kind,
                   int a, double c = 0.0, int b = -1) {
    for (const auto& t : ts) {
        if (t.kind != kind || t.param_a != a) continue;
        if (kind == TransformKind::PermuteParameters && t.param_b != b)
            continue;
        if (transform_kind_parameterized(kind) && t.constant != c) continue;
        return true;
    }
    return false;
}

InputCase mk_case(std::vector<Value> vals) {
    InputCase c;
    c.id = "test0";
    c.values = std::move(vals);
    return c;
}

} // namespace

TEST_CASE("enumeration against the pow signature") {
    SubjectProgram pow = load_fixture("pow");
    auto ts = enumerate_applicable(pow.signature, pool_of({{-1, 1}, {1, 1}}));

    CHECK(has_transform(ts, TransformKind::PermuteParameters, 0, 0, 1));
    CHECK(has_transform(ts, TransformKind::NumericAddition, 1, -1));
    CHECK(has_transform(ts, TransformKind::NumericMultiplication, 0, -1));
    for (const auto& t : ts) {
        CHECK(t.kind != TransformKind::BooleanFlip);
        CHECK(t.kind != TransformKind::SequenceFlip);
        if (t.kind == TransformKind::NumericAddition) CHECK(t.constant != 0.0);
        if (t.kind == TransformKind::NumericMultiplication)
            CHECK(t.constant != 1.0);
    }

    // deterministic order
    auto again = enumerate_applicable(pow.signature, pool_of({{-1, 1}, {1, 1}}));
    REQUIRE(ts.size() == again.size());
    for (std::size_t i = 0; i < ts.size(); ++i)
        CHECK(transform_descriptor(ts[i]) == transform_descriptor(again[i]));
}

TEST_CASE("single-boolean signature admits exactly one transform") {
    Signature sig;
    sig.params = {{"flag", TypeTag::Bool}};
    sig.output = TypeTag::Bool;
    auto ts = enumerate_applicable(sig, pool_of({{-1, 1}, {1, 1}}));
    REQUIRE(ts.size() == 1);
    CHECK(ts[0].kind == TransformKind::BooleanFlip);
    CHECK(ts[0].param_a == 0);
}

TEST_CASE("sequence signature gets flip and first/last removal") {
    Signature sig;
    sig.params = {{"s", TypeTag::Seq}};
    sig.output = TypeTag::Num;
    auto ts = enumerate_applicable(sig, pool_of({{-1, 1}, {1, 1}}));
    CHECK(has_transform(ts, TransformKind::SequenceFlip, 0));
    CHECK(has_transform(ts, TransformKind::SequenceRemove, 0, 0.0));
    CHECK(has_transform(ts, TransformKind::SequenceRemove, 0, -1.0));
}

TEST_CASE("sampling without replacement and exhaustion") {
    SubjectProgram pow = load_fixture("pow");
    auto ts = enumerate_applicable(pow.signature, pool_of({{-1, 2}, {1, 5}, {0, 3}}));
    auto four = sample_instantiations(ts, 4, 99);
    REQUIRE(four.size() == 4);
    std::set<std::string> descs;
    for (const auto& t : four) descs.insert(transform_descriptor(t));
    CHECK(descs.size() == 4);

    auto all = sample_instantiations(ts, ts.size() + 10, 99);
    CHECK(all.size() == ts.size());

    CHECK_THROWS_AS(sample_instantiations({}, 2, 1), std::runtime_error);
    CHECK_THROWS_AS(sample_instantiations(ts, 0, 1), std::invalid_argument);
}

TEST_CASE("pool weights steer sampling toward heavier constants") {
    std::vector<InputTransform> two;
    InputTransform light;
    light.kind = TransformKind::NumericAddition;
    light.param_a = 0;
    light.constant = 3;
    light.weight = 1;
    InputTransform heavy = light;
    heavy.constant = 7;
    heavy.weight = 100;
    two = {light, heavy};

    int heavy_first = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        auto picked = sample_instantiations(two, 1, seed);
        if (picked[0].constant == 7) ++heavy_first;
    }
    CHECK(heavy_first >= 95);
}

TEST_CASE("follow-up construction on reference cases") {
    SubjectProgram pow = load_fixture("pow");

    InputTransform add_minus1;
    add_minus1.kind = TransformKind::NumericAddition;
    add_minus1.param_a = 1;
    add_minus1.constant = -1;
    InputCase x2 =
        apply_transform(add_minus1, mk_case({Value::number(-128), Value::number(2)}));
    CHECK(x2.values[0].as_num() == -128.0);
    CHECK(x2.values[1].as_num() == 1.0);

    InputTransform mul_minus1;
    mul_minus1.kind = TransformKind::NumericMultiplication;
    mul_minus1.param_a = 0;
    mul_minus1.constant = -1;
    InputCase sq = apply_transform(mul_minus1, mk_case({Value::number(4)}));
    CHECK(sq.values[0].as_num() == -4.0);

    InputTransform flip;
    flip.kind = TransformKind::SequenceFlip;
    flip.param_a = 0;
    InputCase empty = apply_transform(flip, mk_case({Value::sequence({})}));
    CHECK(empty.values[0].as_seq().empty());

    // out-of-bounds removal is the identity
    InputTransform rm;
    rm.kind = TransformKind::SequenceRemove;
    rm.param_a = 0;
    rm.constant = 9;
    InputCase same = apply_transform(rm, mk_case({Value::sequence({5, 6, 7})}));
    CHECK(same.values[0].as_seq() == std::vector<double>{5, 6, 7});
}

TEST_CASE("canonical relation accepts exactly the constructed follow-up") {
    SubjectProgram pow = load_fixture("pow");
    InputTransform t;
    t.kind = TransformKind::NumericAddition;
    t.param_a = 1;
    t.constant = -1;
    InputRelationSpec rel = canonical_relation(t, pow.signature);
    CHECK(rel.rendering == "(k_f == k_s) && (e_f == e_s - 1)");

    InputCase x1 = mk_case({Value::number(-128), Value::number(2)});
    CHECK(check_relation(rel, x1, mk_case({Value::number(-128), Value::number(1)})));
    CHECK_FALSE(
        check_relation(rel, x1, mk_case({Value::number(-128), Value::number(2)})));

    InputTransform perm;
    perm.kind = TransformKind::PermuteParameters;
    perm.param_a = 0;
    perm.param_b = 1;
    InputRelationSpec prel = canonical_relation(perm, pow.signature);
    CHECK(prel.rendering == "(k_f == e_s) && (e_f == k_s)");
    Rng rng(5);
    for (int i = 0; i < 100; ++i) {
        double a = rng.next_real(-50, 50), b = rng.next_real(-50, 50);
        CHECK(check_relation(prel, mk_case({Value::number(a), Value::number(b)}),
                             mk_case({Value::number(b), Value::number(a)})));
    }
}

TEST_CASE("round-trip property over every fixture and instantiation") {
    GenProfile profile;
    for (const char* name : {"pow", "gcd", "isPrime", "min", "meanOf",
                             "isSorted", "repeat", "reverse", "nextPrime"}) {
        SubjectProgram p = load_fixture(name);
        auto ts = enumerate_applicable(p.signature, pool_of({{-1, 1}, {1, 1}, {2, 1}}));
        Rng rng(derive_seed(7, name));
        for (const auto& t : ts) {
            InputRelationSpec rel = canonical_relation(t, p.signature);
            for (int i = 0; i < 200; ++i) {
                InputCase x1 = mk_case(random_tuple(p.signature, rng, profile));
                InputCase x2 = apply_transform(t, x1);
                // untouched params stay identical
                for (std::size_t j = 0; j < x1.values.size(); ++j) {
                    if (static_cast<int>(j) == t.param_a) continue;
                    if (t.kind == TransformKind::PermuteParameters &&
                        static_cast<int>(j) == t.param_b)
                        continue;
                    CHECK(values_equal(x1.values[j], x2.values[j], 0.0));
                }
                CAPTURE(name, transform_descriptor(t));
                REQUIRE(check_relation(rel, x1, x2));
            }
        }
    }
}

TEST_CASE("involutions") {
    Rng rng(11);
    GenProfile profile;
    InputTransform bf;
    bf.kind = TransformKind::BooleanFlip;
    bf.param_a = 0;
    InputTransform sf;
    sf.kind = TransformKind::SequenceFlip;
    sf.param_a = 0;
    InputTransform pp;
    pp.kind = TransformKind::PermuteParameters;
    pp.param_a = 0;
    pp.param_b = 1;
    for (int i = 0; i < 200; ++i) {
        InputCase b = mk_case({Value::boolean(rng.next_bool())});
        CHECK(values_equal(apply_transform(bf, apply_transform(bf, b)).values[0],
                           b.values[0], 0.0));
        InputCase s = mk_case({random_value(TypeTag::Seq, rng, profile)});
        CHECK(values_equal(apply_transform(sf, apply_transform(sf, s)).values[0],
                           s.values[0], 0.0));
        InputCase two = mk_case({Value::number(rng.next_real(-9, 9)),
                                 Value::number(rng.next_real(-9, 9))});
        InputCase back = apply_transform(pp, apply_transform(pp, two));
        CHECK(values_equal(back.values[0], two.values[0], 0.0));
        CHECK(values_equal(back.values[1], two.values[1], 0.0));
    }
}

TEST_CASE("descriptors round-trip") {
    for (const char* desc :
         {"NumericAddition(param=1, c=-1)", "NumericMultiplication(param=0, c=2)",
          "PermuteParameters(param=0, param=1)", "BooleanFlip(param=0)",
          "SequenceRemove(param=0, c=-1)", "SequenceFlip(param=2)"}) {
        InputTransform t = parse_transform_descriptor(desc);
        CHECK(transform_descriptor(t) == desc);
    }
    CHECK_THROWS(parse_transform_descriptor("Nope(param=0)"));
    CHECK_THROWS(parse_transform_descriptor("BooleanFlip"));
}
