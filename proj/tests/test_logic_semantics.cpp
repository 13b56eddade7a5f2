#include <catch2/catch_amalgamated.hpp>

#include "qkprobe/logic/semantics.hpp"
#include "support/logic_samples.hpp"

using namespace qkprobe;
using namespace qkprobe::logic;

static std::vector<Formula> parse_all(std::initializer_list<std::string> texts) {
    std::vector<Formula> out;
    for (const auto& t : texts) out.push_back(parse(t));
    return out;
}

TEST_CASE("modus ponens consequence is entailed") {
    auto theory = parse_all({"forall x (imp (atom p x) (atom q x))", "(atom p a)"});
    REQUIRE(entails(theory, parse("(atom q a)"), 2) == Verdict::Entailed);
}

TEST_CASE("unrelated query is undetermined") {
    auto theory = parse_all({"(atom p a)"});
    REQUIRE(entails(theory, parse("(atom q a)"), 2) == Verdict::Undetermined);
}

TEST_CASE("refuted query is not entailed") {
    auto theory = parse_all({"forall x (imp (atom p x) (atom q x))", "(not (atom q a))"});
    REQUIRE(entails(theory, parse("(atom p a)"), 2) == Verdict::NotEntailed);
}

TEST_CASE("negated universal conjunction entails the existential disjunction") {
    auto theory = parse_all({"(not (forall x (and (atom p x) (atom q x))))"});
    REQUIRE(entails(theory, parse("exists x (or (not (atom p x)) (not (atom q x)))"), 3) ==
            Verdict::Entailed);
}

TEST_CASE("inconsistent theory entails everything") {
    auto theory = parse_all({"(atom p a)", "(not (atom p a))"});
    REQUIRE(entails(theory, parse("(atom q a)"), 2) == Verdict::Entailed);
}

TEST_CASE("domain size one collapses quantifiers") {
    auto theory = parse_all({"(atom p a)"});
    REQUIRE(entails(theory, parse("forall x (atom p x)"), 1) == Verdict::Entailed);
    REQUIRE(entails(theory, parse("forall x (atom p x)"), 2) == Verdict::Undetermined);
}

TEST_CASE("budget and signature guards") {
    auto theory = parse_all({"forall x (imp (atom p x) (atom q x))", "(atom p a)"});
    REQUIRE_THROWS_AS(entails(theory, parse("(atom q a)"), 3, /*atom_budget=*/8),
                      DomainTooLarge);
    REQUIRE_THROWS_AS(entails(theory, parse("(atom q a)"), 0), DomainTooLarge);
    REQUIRE_THROWS_AS(entails(theory, parse("(atom q a)"), 7), DomainTooLarge);

    // more constants than domain elements
    auto crowded = parse_all({"(atom p a)", "(atom p b)", "(atom p c)"});
    REQUIRE_THROWS_AS(entails(crowded, parse("(atom p d)"), 3), DomainTooLarge);

    std::vector<Formula> bad = {Formula::atom("p", Term::constant("a"), 2)};
    REQUIRE_THROWS_AS(entails(bad, parse("(atom q a)"), 2), ArityError);
}

TEST_CASE("verdicts are deterministic") {
    auto theory = parse_all({"forall x (or (atom p x) (atom q x))", "(not (atom p a))"});
    Formula q = parse("(atom q a)");
    Verdict first = entails(theory, q, 3);
    for (int i = 0; i < 5; ++i) REQUIRE(entails(theory, q, 3) == first);
    REQUIRE(first == Verdict::Entailed);
}

// random closed theory member / query over a tiny signature
static Formula random_member(Rng& rng, const std::vector<std::string>& preds,
                             const std::vector<std::string>& consts = {"a", "b"}) {
    auto atom_v = [&](const std::string& v) {
        return Formula::atom(preds[rng.uniform(preds.size())], Term::variable(v));
    };
    auto atom_c = [&] {
        return Formula::atom(preds[rng.uniform(preds.size())],
                             Term::constant(consts[rng.uniform(consts.size())]));
    };
    switch (rng.uniform(8)) {
        case 0: return atom_c();
        case 1: return Formula::lnot(atom_c());
        case 2: return Formula::forall("x", Formula::imp(atom_v("x"), atom_v("x")));
        case 3: return Formula::forall("x", Formula::lor(atom_v("x"), atom_v("x")));
        case 4: return Formula::lnot(Formula::forall("x", Formula::land(atom_v("x"), atom_v("x"))));
        case 5: return Formula::exists("x", atom_v("x"));
        case 6: return Formula::forall("x", Formula::imp(Formula::land(atom_v("x"), atom_v("x")),
                                                         Formula::lnot(atom_v("x"))));
        default: return Formula::lor(atom_c(), atom_c());
    }
}

TEST_CASE("adding premises never flips Entailed to NotEntailed") {
    Rng rng(23);
    std::vector<std::string> preds = {"p", "q", "r"};
    int flips_checked = 0;
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<Formula> theory;
        int n = rng.range(1, 4);
        for (int i = 0; i < n; ++i) theory.push_back(random_member(rng, preds));
        Formula query = random_member(rng, preds);
        Verdict before = entails(theory, query, 2);
        theory.push_back(random_member(rng, preds));
        Verdict after = entails(theory, query, 2);
        if (before == Verdict::Entailed) {
            REQUIRE(after == Verdict::Entailed);
            ++flips_checked;
        }
        // NotEntailed may only collapse to vacuous entailment (theory made
        // inconsistent), never reopen to Undetermined.
        if (before == Verdict::NotEntailed) REQUIRE(after != Verdict::Undetermined);
    }
    REQUIRE(flips_checked > 5);  // the property was actually exercised
}

TEST_CASE("DPLL fast path agrees with exhaustive enumeration") {
    Rng rng(91);
    std::vector<std::string> preds = {"p", "q", "r"};
    for (int trial = 0; trial < 300; ++trial) {
        int domain = rng.range(1, 3);
        std::vector<std::string> consts = {"a"};
        if (domain > 1) consts.push_back("b");
        std::vector<Formula> theory;
        int n = rng.range(1, 4);
        for (int i = 0; i < n; ++i) theory.push_back(random_member(rng, preds, consts));
        Formula query = random_member(rng, preds, consts);
        INFO("domain " << domain << ", query " << print(query));
        REQUIRE(entails_fast(theory, query, domain) == entails(theory, query, domain));
    }
}
