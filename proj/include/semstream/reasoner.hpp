#pragma once

#include <map>
#include <set>
#include <utility>
#include <vector>

#include "semstream/pattern.hpp"
#include "semstream/term.hpp"

namespace semstream {

/// Sub-property / sub-class axioms. Pairs are (sub, super); endpoints are
/// IRIs. Cycles are allowed and collapse into equivalence.
struct Ontology {
    std::set<std::pair<Term, Term>> subPropertyOf;
    std::set<std::pair<Term, Term>> subClassOf;

    friend bool operator==(const Ontology& a, const Ontology& b) {
        return a.subPropertyOf == b.subPropertyOf && a.subClassOf == b.subClassOf;
    }
};

/// Extracts rdfs:subPropertyOf / rdfs:subClassOf axioms; every other triple
/// and any axiom with a non-IRI endpoint is ignored.
Ontology ontologyFromGraph(const Graph& g);

/// Reflexive-transitive closure of an ontology, immutable once computed.
/// Terms never mentioned in an axiom implicitly relate only to themselves.
class Closure {
public:
    Closure() = default;

    /// {q | q subPropertyOf* p}, always containing p.
    std::set<Term> subPropsOf(const Term& p) const;
    /// {d | d subClassOf* c}, always containing c.
    std::set<Term> subClassesOf(const Term& c) const;
    /// {c | d subClassOf* c}, always containing d.
    std::set<Term> superClassesOf(const Term& d) const;

    bool isSubPropertyOf(const Term& sub, const Term& super) const;
    bool isSubClassOf(const Term& sub, const Term& super) const;

private:
    friend Closure computeClosure(const Ontology& o);

    std::map<Term, std::set<Term>> propSubs_;     // super -> subs (incl. self)
    std::map<Term, std::set<Term>> classSubs_;    // super -> subs (incl. self)
    std::map<Term, std::set<Term>> classSupers_;  // sub -> supers (incl. self)
};

Closure computeClosure(const Ontology& o);

/// Per-triple core of entailed matching: appends every extension of `seed`
/// that maps `pattern` onto `triple` under the closure. The window engine
/// uses this directly to attribute matches to the elements they came from.
void entailedUnifyTriple(const TriplePattern& pattern, const Triple& triple,
                         const Closure& closure, const Binding& seed,
                         std::vector<Binding>& out);

/// Like match, but a concrete predicate also accepts asserted sub-properties,
/// and an rdf:type pattern accepts sub-classes (the object variable case
/// enumerates every entailed class). A variable predicate matches asserted
/// triples only. Quoted-triple patterns stay purely structural.
BindingSet entailedMatch(const TriplePattern& pattern, const Graph& graph, const Closure& closure,
                         const Binding& seed = {});

BindingSet entailedMatchBGP(const std::vector<TriplePattern>& patterns, const Graph& graph,
                            const Closure& closure, const Binding& seed = {});

} // namespace semstream
