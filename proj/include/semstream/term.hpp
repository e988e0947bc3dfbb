#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <set>
#include <string>

#include "semstream/errors.hpp"
#include "semstream/vocab.hpp"

namespace semstream {

struct Triple;

/// An RDF-star term: IRI, literal, blank node, or quoted triple.
/// Immutable after construction; equality and ordering are structural.
class Term {
public:
    enum class Kind { Iri, Literal, BlankNode, Quoted };

    Term() : kind_(Kind::Iri) {}

    static Term iri(std::string value);
    static Term literal(std::string lexical, std::string datatype = vocab::kXsdString);
    static Term blank(std::string label);
    static Term quoted(Triple inner);
    static Term quoted(Term subject, Term predicate, Term object);

    Kind kind() const { return kind_; }
    bool isIri() const { return kind_ == Kind::Iri; }
    bool isLiteral() const { return kind_ == Kind::Literal; }
    bool isBlank() const { return kind_ == Kind::BlankNode; }
    bool isQuoted() const { return kind_ == Kind::Quoted; }

    const std::string& iriValue() const { return a_; }
    const std::string& lexicalForm() const { return a_; }
    const std::string& datatype() const { return b_; }
    const std::string& blankLabel() const { return a_; }
    const Triple& quotedTriple() const { return *quoted_; }

    int compare(const Term& other) const;
    std::size_t hash() const;

    friend bool operator==(const Term& a, const Term& b) { return a.compare(b) == 0; }
    friend bool operator!=(const Term& a, const Term& b) { return a.compare(b) != 0; }
    friend bool operator<(const Term& a, const Term& b) { return a.compare(b) < 0; }

private:
    Kind kind_;
    std::string a_; // iri value | literal lexical form | blank label
    std::string b_; // literal datatype
    std::shared_ptr<const Triple> quoted_;
};

/// subject predicate object; the predicate is always an IRI and the
/// subject is never a literal.
struct Triple {
    Term subject;
    Term predicate;
    Term object;

    Triple(Term s, Term p, Term o);

    int compare(const Triple& other) const;
    std::size_t hash() const;

    friend bool operator==(const Triple& a, const Triple& b) { return a.compare(b) == 0; }
    friend bool operator!=(const Triple& a, const Triple& b) { return a.compare(b) != 0; }
    friend bool operator<(const Triple& a, const Triple& b) { return a.compare(b) < 0; }
};

/// A set of triples. Iteration order is the structural order, which makes
/// every traversal deterministic.
class Graph {
public:
    using const_iterator = std::set<Triple>::const_iterator;

    bool insert(Triple t) { return triples_.insert(std::move(t)).second; }
    bool contains(const Triple& t) const { return triples_.count(t) != 0; }
    void merge(const Graph& other) { triples_.insert(other.begin(), other.end()); }

    std::size_t size() const { return triples_.size(); }
    bool empty() const { return triples_.empty(); }
    const_iterator begin() const { return triples_.begin(); }
    const_iterator end() const { return triples_.end(); }

    friend bool operator==(const Graph& a, const Graph& b) { return a.triples_ == b.triples_; }
    friend bool operator!=(const Graph& a, const Graph& b) { return !(a == b); }

private:
    std::set<Triple> triples_;
};

/// Renames every blank node label to `scope + "_" + label`, recursing into
/// quoted triples. Stream messages get a per-message scope so blank nodes
/// never join across messages.
Term scopeBlankNodes(const Term& term, const std::string& scope);
Triple scopeBlankNodes(const Triple& triple, const std::string& scope);
Graph scopeBlankNodes(const Graph& graph, const std::string& scope);

} // namespace semstream
