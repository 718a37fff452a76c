#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>

#include "mrgen/rng.hpp"
#include "mrgen/value.hpp"
#include "oracles.hpp"

using namespace mrgen;

namespace {

Value num(double v) { return Value::number(v); }
Value seq(std::vector<double> v) { return Value::sequence(std::move(v)); }

Value apply(Op op, std::vector<Value> args, double tol = 1e-6) {
    return apply_operator(op, args, tol);
}

} // namespace

TEST_CASE("protected division maps zero denominators to one") {
    CHECK(apply(Op::Div, {num(7), num(0)}).as_num() == 1.0);
    CHECK(apply(Op::Div, {num(0), num(0)}).as_num() == 1.0);
    CHECK(apply(Op::Div, {num(-3), num(0)}).as_num() == 1.0);
    CHECK(apply(Op::Div, {num(7), num(2)}).as_num() == 3.5);
}

TEST_CASE("sequence operators") {
    CHECK(apply(Op::Flip, {seq({1, 2, 3})}).as_seq() ==
          std::vector<double>{3, 2, 1});
    CHECK(apply(Op::Remove, {seq({5, 6, 7}), num(-1)}).as_seq() ==
          std::vector<double>{5, 6});
    CHECK(apply(Op::Remove, {seq({5, 6, 7}), num(9)}).as_seq() ==
          std::vector<double>{5, 6, 7});
    CHECK(apply(Op::Remove, {seq({5, 6, 7}), num(0)}).as_seq() ==
          std::vector<double>{6, 7});
    CHECK(apply(Op::Truncate, {seq({5, 6, 7}), num(2)}).as_seq() ==
          std::vector<double>{5, 6});
    CHECK(apply(Op::Truncate, {seq({5, 6, 7}), num(-2)}).as_seq().empty());
    CHECK(apply(Op::Sum, {seq({1, 2, 3})}).as_num() == 6.0);
    CHECK(apply(Op::Len, {seq({})}).as_num() == 0.0);
}

TEST_CASE("boolean operators") {
    CHECK(apply(Op::Implies, {Value::boolean(false), Value::boolean(false)})
              .as_bool());
    CHECK(apply(Op::Xor, {Value::boolean(true), Value::boolean(false)})
              .as_bool());
    CHECK_FALSE(
        apply(Op::Iff, {Value::boolean(true), Value::boolean(false)}).as_bool());
}

TEST_CASE("values_equal semantics") {
    CHECK(values_equal(num(16384.0), num(16384.0), 1e-9));
    CHECK(values_equal(seq({}), seq({}), 0.0));
    CHECK(values_equal(num(1.0), num(1.0 + 1e-12), 1e-9));
    CHECK_FALSE(values_equal(num(1.0), num(1.1), 1e-6));
    CHECK_FALSE(values_equal(num(1.0), Value::boolean(true), 1e-6));

    double nan = std::numeric_limits<double>::quiet_NaN();
    double inf = std::numeric_limits<double>::infinity();
    CHECK(values_equal(num(nan), num(nan), 0.0));
    CHECK(values_equal(num(inf), num(inf), 0.0));
    CHECK_FALSE(values_equal(num(inf), num(-inf), 1e-6));
    CHECK_FALSE(values_equal(num(nan), num(0.0), 1e-6));

    // comparisons with NaN are false
    CHECK_FALSE(apply(Op::NumLt, {num(nan), num(1)}).as_bool());
    CHECK_FALSE(apply(Op::NumGe, {num(nan), num(nan)}).as_bool());
    CHECK(apply(Op::NumEq, {num(nan), num(nan)}).as_bool());
}

TEST_CASE("values_equal is reflexive and symmetric") {
    Rng rng(20240901);
    for (int i = 0; i < 500; ++i) {
        double tol = rng.next_bool() ? 0.0 : rng.next_real(0, 1e-3);
        Value a, b;
        switch (rng.next_index(3)) {
        case 0:
            a = Value::boolean(rng.next_bool());
            b = Value::boolean(rng.next_bool());
            break;
        case 1:
            a = num(rng.next_real(-10, 10));
            b = num(a.as_num() + rng.next_real(-1e-3, 1e-3));
            break;
        default: {
            std::vector<double> xs, ys;
            for (std::size_t k = 0; k < rng.next_index(4); ++k)
                xs.push_back(rng.next_real(-5, 5));
            ys = xs;
            if (!ys.empty() && rng.next_bool())
                ys[rng.next_index(ys.size())] += rng.next_real(-1e-3, 1e-3);
            a = seq(xs);
            b = seq(ys);
        }
        }
        CHECK(values_equal(a, a, tol));
        CHECK(values_equal(b, b, tol));
        CHECK(values_equal(a, b, tol) == values_equal(b, a, tol));
    }
}

TEST_CASE("number to code-point sequence") {
    auto pts = [](const char* s) {
        std::vector<double> out;
        for (const char* p = s; *p; ++p) out.push_back((double)*p);
        return out;
    };
    CHECK(num_to_seq(16384.0).as_seq() == pts("16384"));
    CHECK(num_to_seq(0.0).as_seq() == pts("0"));
    CHECK(num_to_seq(-1.5).as_seq() == pts("-1.5"));
}

TEST_CASE("rendering round-trips") {
    CHECK(render_value(num(16384.0)) == "16384");
    CHECK(render_value(seq({1, 2.5, -3})) == "[1,2.5,-3]");
    CHECK(render_value(Value::boolean(true)) == "true");

    Rng rng(77);
    for (int i = 0; i < 1000; ++i) {
        Value v;
        switch (rng.next_index(3)) {
        case 0: v = Value::boolean(rng.next_bool()); break;
        case 1:
            v = num(rng.next_bool() ? (double)rng.next_int(-100000, 100000)
                                    : rng.next_real(-1e6, 1e6));
            break;
        default: {
            std::vector<double> xs;
            for (std::size_t k = 0; k < rng.next_index(5); ++k)
                xs.push_back(rng.next_real(-100, 100));
            v = seq(xs);
        }
        }
        Value back = parse_value(render_value(v));
        CHECK(testoracle::same_value(v, back));
    }
}

TEST_CASE("flip is an involution; remove and truncate length laws") {
    Rng rng(4242);
    for (int i = 0; i < 500; ++i) {
        std::vector<double> xs;
        for (std::size_t k = 0; k < rng.next_index(8); ++k)
            xs.push_back((double)rng.next_int(-9, 9));
        Value s = seq(xs);
        Value flipped = apply(Op::Flip, {apply(Op::Flip, {s})});
        CHECK(testoracle::same_value(flipped, s));

        double n = (double)rng.next_int(-5, 12);
        auto trunc = apply(Op::Truncate, {s, num(n)}).as_seq();
        std::size_t want =
            (std::size_t)std::min<double>(std::max(n, 0.0), (double)xs.size());
        CHECK(trunc.size() == want);

        double idx = (double)rng.next_int(-6, 6);
        auto removed = apply(Op::Remove, {s, num(idx)}).as_seq();
        CHECK((xs.size() - removed.size()) <= 1);
    }
}

TEST_CASE("exhaustive small-domain oracle across the operator table") {
    const std::vector<double> grid = {-2, -1, 0, 0.5, 1, 2};
    const auto seqs = testoracle::all_sequences({0, 1, 2}, 3);
    const double tol = 1e-6;

    for (const auto& info : kOpTable) {
        std::vector<std::vector<Value>> arg_sets;
        auto options = [&](TypeTag t) {
            std::vector<Value> out;
            if (t == TypeTag::Num)
                for (double v : grid) out.push_back(num(v));
            else if (t == TypeTag::Bool)
                for (bool v : {false, true}) out.push_back(Value::boolean(v));
            else
                for (const auto& s : seqs) out.push_back(seq(s));
            return out;
        };
        auto first = options(info.args[0]);
        if (info.arity == 1) {
            for (const auto& a : first) arg_sets.push_back({a});
        } else {
            auto second = options(info.args[1]);
            for (const auto& a : first)
                for (const auto& b : second) arg_sets.push_back({a, b});
        }
        for (const auto& args : arg_sets) {
            Value got = apply_operator(info.op, args, tol); // must not throw
            Value want = testoracle::ref_apply(info.op, args, tol);
            REQUIRE(got.tag() == info.out);
            if (!testoracle::same_value(got, want)) {
                CAPTURE(info.name);
                REQUIRE(testoracle::same_value(got, want));
            }
            if (got.tag() == TypeTag::Num && info.op != Op::Div)
                continue;
            if (info.op == Op::Div) CHECK(std::isfinite(got.as_num()));
        }
    }
}

TEST_CASE("ill-typed arguments are rejected") {
    CHECK_THROWS_AS(apply(Op::Add, {num(1), Value::boolean(true)}),
                    std::logic_error);
    CHECK_THROWS_AS(apply(Op::Not, {num(1)}), std::logic_error);
    CHECK_THROWS_AS(apply(Op::Add, {num(1)}), std::logic_error);
}
