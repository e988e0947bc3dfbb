#include "semstream/reasoner.hpp"

#include "semstream/vocab.hpp"

namespace semstream {

namespace {

/// Reachability sets over a directed edge list, one BFS per mentioned node.
/// forward=false walks edges super<-sub (collecting subs of each super).
std::map<Term, std::set<Term>> reachability(const std::set<std::pair<Term, Term>>& edges,
                                            bool forward) {
    std::map<Term, std::set<Term>> adj;
    std::set<Term> nodes;
    for (const auto& [sub, super] : edges) {
        nodes.insert(sub);
        nodes.insert(super);
        if (forward)
            adj[sub].insert(super);
        else
            adj[super].insert(sub);
    }
    std::map<Term, std::set<Term>> out;
    for (const Term& start : nodes) {
        std::set<Term>& reach = out[start];
        std::vector<Term> frontier{start};
        reach.insert(start);
        while (!frontier.empty()) {
            Term cur = std::move(frontier.back());
            frontier.pop_back();
            auto it = adj.find(cur);
            if (it == adj.end()) continue;
            for (const Term& next : it->second)
                if (reach.insert(next).second) frontier.push_back(next);
        }
    }
    return out;
}

std::set<Term> lookupOrSelf(const std::map<Term, std::set<Term>>& m, const Term& t) {
    auto it = m.find(t);
    if (it == m.end()) return {t};
    return it->second;
}

bool related(const std::map<Term, std::set<Term>>& subsOfSuper, const Term& sub,
             const Term& super) {
    if (sub == super) return true;
    auto it = subsOfSuper.find(super);
    return it != subsOfSuper.end() && it->second.count(sub) != 0;
}

} // namespace

Ontology ontologyFromGraph(const Graph& g) {
    const Term subProp = Term::iri(vocab::kRdfsSubPropertyOf);
    const Term subClass = Term::iri(vocab::kRdfsSubClassOf);
    Ontology o;
    for (const Triple& t : g) {
        if (!t.subject.isIri() || !t.object.isIri()) continue;
        if (t.predicate == subProp)
            o.subPropertyOf.emplace(t.subject, t.object);
        else if (t.predicate == subClass)
            o.subClassOf.emplace(t.subject, t.object);
    }
    return o;
}

Closure computeClosure(const Ontology& o) {
    Closure c;
    c.propSubs_ = reachability(o.subPropertyOf, false);
    c.classSubs_ = reachability(o.subClassOf, false);
    c.classSupers_ = reachability(o.subClassOf, true);
    return c;
}

std::set<Term> Closure::subPropsOf(const Term& p) const { return lookupOrSelf(propSubs_, p); }
std::set<Term> Closure::subClassesOf(const Term& c) const { return lookupOrSelf(classSubs_, c); }
std::set<Term> Closure::superClassesOf(const Term& d) const {
    return lookupOrSelf(classSupers_, d);
}

bool Closure::isSubPropertyOf(const Term& sub, const Term& super) const {
    return related(propSubs_, sub, super);
}
bool Closure::isSubClassOf(const Term& sub, const Term& super) const {
    return related(classSubs_, sub, super);
}

void entailedUnifyTriple(const TriplePattern& pattern, const Triple& t, const Closure& closure,
                         const Binding& seed, std::vector<Binding>& out) {
    if (!pattern.predicate.isGround() || !pattern.predicate.term().isIri()) {
        Binding b = seed;
        if (unify(pattern.subject, t.subject, b) && unify(pattern.predicate, t.predicate, b) &&
            unify(pattern.object, t.object, b))
            out.push_back(std::move(b));
        return;
    }

    const Term& p = pattern.predicate.term();
    const Term rdfType = Term::iri(vocab::kRdfType);
    // asserted predicate specializes the queried one
    if (closure.isSubPropertyOf(t.predicate, p)) {
        Binding b = seed;
        if (unify(pattern.subject, t.subject, b) && unify(pattern.object, t.object, b))
            out.push_back(std::move(b));
    }
    // type assertion: the object position expands along the class hierarchy
    if (closure.isSubPropertyOf(t.predicate, rdfType) && closure.isSubPropertyOf(rdfType, p)) {
        for (const Term& super : closure.superClassesOf(t.object)) {
            Binding b = seed;
            if (unify(pattern.subject, t.subject, b) && unify(pattern.object, super, b))
                out.push_back(std::move(b));
        }
    }
}

BindingSet entailedMatch(const TriplePattern& pattern, const Graph& graph, const Closure& closure,
                         const Binding& seed) {
    BindingSet out;
    std::vector<Binding> buf;
    for (const Triple& t : graph) {
        buf.clear();
        entailedUnifyTriple(pattern, t, closure, seed, buf);
        for (Binding& b : buf) out.insert(std::move(b));
    }
    return out;
}

BindingSet entailedMatchBGP(const std::vector<TriplePattern>& patterns, const Graph& graph,
                            const Closure& closure, const Binding& seed) {
    BindingSet current{seed};
    for (const auto& pattern : patterns) {
        BindingSet next;
        for (const Binding& b : current) {
            BindingSet found = entailedMatch(pattern, graph, closure, b);
            next.insert(found.begin(), found.end());
        }
        if (next.empty()) return {};
        current = std::move(next);
    }
    return current;
}

} // namespace semstream
