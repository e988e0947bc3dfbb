#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "semstream/codec.hpp"
#include "semstream/pattern.hpp"
#include "semstream/term.hpp"

#include "support/fixtures.hpp"
#include "support/generators.hpp"
#include "support/oracles.hpp"

using namespace semstream;
using namespace semstream::testing;

TEST_CASE("term invariants") {
    CHECK_THROWS_AS(Term::iri(""), Error);
    CHECK_THROWS_AS(Term::iri("http://x/ y"), Error);
    CHECK_THROWS_AS(Term::blank(""), Error);
    // predicate must be an IRI, subject must not be a literal
    CHECK_THROWS_AS(Triple(demoIri("s"), Term::literal("p"), demoIri("o")), Error);
    CHECK_THROWS_AS(Triple(Term::literal("s"), demoIri("p"), demoIri("o")), Error);
}

TEST_CASE("structural equality") {
    Term q1 = Term::quoted(demoIri("b7"), demoIri("frontLeftOf"), demoIri("car1"));
    Term q2 = Term::quoted(demoIri("b7"), demoIri("frontLeftOf"), demoIri("car1"));
    CHECK(q1 == q2);
    CHECK(q1.compare(Term::quoted(demoIri("b7"), demoIri("frontLeftOf"), demoIri("car2"))) != 0);
    CHECK(Term::literal("5", vocab::kXsdInteger) != Term::literal("5", vocab::kXsdString));
    CHECK(Term::literal("a") == Term::literal("a", vocab::kXsdString));
}

TEST_CASE("graph set semantics") {
    Graph g;
    Triple t(demoIri("b1"), rdfType(), ssrIri("TrafficObstacle"));
    CHECK(g.insert(t));
    CHECK_FALSE(g.insert(t));
    CHECK(g.size() == 1);
}

TEST_CASE("match single triple") {
    Graph g;
    g.insert(Triple(demoIri("b1"), rdfType(), ssrIri("TrafficObstacle")));
    TriplePattern p(PatternTerm::var("x"), PatternTerm::ground(rdfType()),
                    PatternTerm::ground(ssrIri("TrafficObstacle")));
    BindingSet result = match(p, g);
    REQUIRE(result.size() == 1);
    CHECK(*result.begin()->lookup("x") == demoIri("b1"));
}

TEST_CASE("match concrete absent triple") {
    Graph g;
    g.insert(Triple(demoIri("b1"), rdfType(), ssrIri("TrafficObstacle")));
    TriplePattern p(PatternTerm::ground(demoIri("b2")), PatternTerm::ground(rdfType()),
                    PatternTerm::ground(ssrIri("TrafficObstacle")));
    CHECK(match(p, g).empty());
}

TEST_CASE("match quoted-triple pattern") {
    // one annotated quoted triple, matched by a pattern with a nested pattern
    Graph g;
    Term quoted = Term::quoted(demoIri("b7"), demoIri("frontLeftOf"), demoIri("car1"));
    g.insert(Triple(quoted, ssnIri("resultTime"), Term::literal("1000", vocab::kXsdInteger)));
    g.insert(Triple(demoIri("b7"), rdfType(), ssrIri("TrafficObstacle")));

    TriplePattern nested(PatternTerm::var("b"), PatternTerm::ground(demoIri("frontLeftOf")),
                         PatternTerm::var("v"));
    TriplePattern p(PatternTerm::quotedPattern(nested), PatternTerm::ground(ssnIri("resultTime")),
                    PatternTerm::var("t"));

    BindingSet result = match(p, g);
    CHECK(result == oracleMatch(p, g));
    REQUIRE(result.size() == 1);
    const Binding& b = *result.begin();
    CHECK(*b.lookup("b") == demoIri("b7"));
    CHECK(*b.lookup("v") == demoIri("car1"));
    CHECK(*b.lookup("t") == Term::literal("1000", vocab::kXsdInteger));
}

TEST_CASE("match with seed restricts result") {
    Graph g;
    g.insert(Triple(demoIri("b1"), rdfType(), ssrIri("TrafficObstacle")));
    g.insert(Triple(demoIri("b2"), rdfType(), ssrIri("TrafficObstacle")));
    Binding seed;
    seed.bind("x", demoIri("b2"));
    TriplePattern p(PatternTerm::var("x"), PatternTerm::ground(rdfType()),
                    PatternTerm::ground(ssrIri("TrafficObstacle")));
    BindingSet result = match(p, g, seed);
    REQUIRE(result.size() == 1);
    CHECK(*result.begin()->lookup("x") == demoIri("b2"));
}

TEST_CASE("all-variable pattern yields one binding per triple") {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        Rng rng(seed);
        Graph g = randomGraph(rng, 15, 2);
        TriplePattern p(PatternTerm::var("s"), PatternTerm::var("p"), PatternTerm::var("o"));
        CHECK(match(p, g).size() == g.size());
    }
}

TEST_CASE("matchBGP camera-side patterns") {
    // one observation: box typed, linked and timestamped
    Graph g;
    g.insert(Triple(demoIri("boxL1"), rdfType(), ssrIri("TrafficObstacle")));
    g.insert(Triple(demoIri("obsL1"), ssnIri("hasResult"), demoIri("boxL1")));
    g.insert(Triple(demoIri("obsL1"), ssnIri("resultTime"),
                    Term::literal("1000", vocab::kXsdInteger)));

    std::vector<TriplePattern> patterns = {
        TriplePattern(PatternTerm::var("lbox"), PatternTerm::ground(rdfType()),
                      PatternTerm::ground(ssrIri("TrafficObstacle"))),
        TriplePattern(PatternTerm::var("obs"), PatternTerm::ground(ssnIri("hasResult")),
                      PatternTerm::var("lbox")),
        TriplePattern(PatternTerm::var("obs"), PatternTerm::ground(ssnIri("resultTime")),
                      PatternTerm::var("time")),
    };
    BindingSet result = matchBGP(patterns, g);
    CHECK(result == oracleJoin(patterns, g));
    REQUIRE(result.size() == 1);
    const Binding& b = *result.begin();
    CHECK(*b.lookup("lbox") == demoIri("boxL1"));
    CHECK(*b.lookup("obs") == demoIri("obsL1"));
    CHECK(*b.lookup("time") == Term::literal("1000", vocab::kXsdInteger));
}

TEST_CASE("matchBGP disjoint patterns give cartesian product") {
    Graph g;
    g.insert(Triple(demoIri("a1"), demoIri("p"), demoIri("o1")));
    g.insert(Triple(demoIri("a2"), demoIri("p"), demoIri("o2")));
    g.insert(Triple(demoIri("c1"), demoIri("q"), demoIri("o3")));
    std::vector<TriplePattern> patterns = {
        TriplePattern(PatternTerm::var("x"), PatternTerm::ground(demoIri("p")),
                      PatternTerm::var("y")),
        TriplePattern(PatternTerm::var("u"), PatternTerm::ground(demoIri("q")),
                      PatternTerm::var("w")),
    };
    CHECK(matchBGP(patterns, g).size() == 2);
}

TEST_CASE("matchBGP contradictory shared variable") {
    Graph g;
    g.insert(Triple(demoIri("a1"), demoIri("p"), demoIri("o1")));
    g.insert(Triple(demoIri("a2"), demoIri("q"), demoIri("o2")));
    std::vector<TriplePattern> patterns = {
        TriplePattern(PatternTerm::var("x"), PatternTerm::ground(demoIri("p")),
                      PatternTerm::var("y")),
        TriplePattern(PatternTerm::var("x"), PatternTerm::ground(demoIri("q")),
                      PatternTerm::var("z")),
    };
    CHECK(matchBGP(patterns, g).empty());
}

TEST_CASE("matchBGP equals brute-force join on random instances") {
    for (std::uint64_t seed = 0; seed < 300; ++seed) {
        Rng rng(seed);
        Graph g = randomGraph(rng, 20, 2);
        std::vector<TriplePattern> patterns = randomBGP(rng, g, 5);
        CAPTURE(seed);
        CHECK(matchBGP(patterns, g) == oracleJoin(patterns, g));
    }
}

TEST_CASE("matchBGP is pattern-order independent") {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        Rng rng(seed);
        Graph g = randomGraph(rng, 12, 1);
        std::vector<TriplePattern> patterns = randomBGP(rng, g, 4);
        std::vector<TriplePattern> shuffled = patterns;
        std::shuffle(shuffled.begin(), shuffled.end(), rng.engine());
        CHECK(matchBGP(patterns, g) == matchBGP(shuffled, g));
    }
}

TEST_CASE("binding merge law") {
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        Rng rng(seed);
        Binding a, b;
        for (int i = 0; i < rng.intIn(0, 4); ++i)
            a.bind("v" + std::to_string(rng.intIn(0, 3)), randomTerm(rng, 1));
        for (int i = 0; i < rng.intIn(0, 4); ++i)
            b.bind("v" + std::to_string(rng.intIn(0, 3)), randomTerm(rng, 1));

        bool agree = true;
        for (const auto& [name, value] : a.entries()) {
            const Term* other = b.lookup(name);
            if (other != nullptr && *other != value)
                agree = false;
        }
        auto merged = Binding::merge(a, b);
        CHECK(merged.has_value() == agree);
        if (merged) {
            CHECK(merged->subsumes(a));
            CHECK(merged->subsumes(b));
            CHECK(merged->size() <= a.size() + b.size());
        }
    }
}

TEST_CASE("substitute construct template") {
    // << ?lbox :frontLeftOf ?veh >> ssn:resultTime ?time
    TriplePattern nested(PatternTerm::var("lbox"), PatternTerm::ground(demoIri("frontLeftOf")),
                         PatternTerm::var("veh"));
    std::vector<TriplePattern> tmpl = {
        TriplePattern(PatternTerm::quotedPattern(nested),
                      PatternTerm::ground(ssnIri("resultTime")), PatternTerm::var("time")),
    };
    Binding b;
    b.bind("lbox", demoIri("b7"));
    b.bind("veh", demoIri("car1"));
    b.bind("time", Term::literal("2021-07-26T12:00:05", vocab::kXsdDateTime));

    Graph out = substitute(tmpl, b);
    REQUIRE(out.size() == 1);
    const Triple& t = *out.begin();
    REQUIRE(t.subject.isQuoted());
    CHECK(t.subject.quotedTriple() ==
          Triple(demoIri("b7"), demoIri("frontLeftOf"), demoIri("car1")));
    CHECK(t.predicate == ssnIri("resultTime"));
    CHECK(t.object == Term::literal("2021-07-26T12:00:05", vocab::kXsdDateTime));
}

TEST_CASE("substitute empty template and unbound variable") {
    CHECK(substitute({}, Binding{}).empty());
    std::vector<TriplePattern> tmpl = {
        TriplePattern(PatternTerm::var("x"), PatternTerm::ground(demoIri("p")),
                      PatternTerm::var("missing")),
    };
    Binding b;
    b.bind("x", demoIri("a"));
    CHECK_THROWS_AS(substitute(tmpl, b), UnboundVariableError);
}

TEST_CASE("substitute of match-derived bindings re-creates a subgraph") {
    for (std::uint64_t seed = 0; seed < 150; ++seed) {
        Rng rng(seed);
        Graph g = randomGraph(rng, 15, 2);
        std::vector<TriplePattern> patterns = randomBGP(rng, g, 3);
        for (const Binding& b : matchBGP(patterns, g)) {
            Graph rebuilt = substitute(patterns, b);
            for (const Triple& t : rebuilt)
                CHECK(g.contains(t));
        }
    }
}

TEST_CASE("blank node scoping renames recursively") {
    Graph g;
    g.insert(Triple(Term::blank("x"), demoIri("p"),
                    Term::quoted(Term::blank("y"), demoIri("q"), demoIri("o"))));
    Graph scoped = scopeBlankNodes(g, "m42");
    REQUIRE(scoped.size() == 1);
    const Triple& t = *scoped.begin();
    CHECK(t.subject == Term::blank("m42_x"));
    CHECK(t.object.quotedTriple().subject == Term::blank("m42_y"));
}
