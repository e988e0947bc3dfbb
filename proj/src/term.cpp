#include "semstream/term.hpp"

namespace semstream {

namespace {

bool containsWhitespace(const std::string& s) {
    for (char c : s)
        if (c == ' ' || c == '\t' || c == '\n' || c == '\r')
            return true;
    return false;
}

std::size_t hashCombine(std::size_t seed, std::size_t value) {
    return seed ^ (value + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2));
}

} // namespace

Term Term::iri(std::string value) {
    if (value.empty())
        throw Error("IRI must be non-empty");
    if (containsWhitespace(value))
        throw Error("IRI must not contain whitespace: " + value);
    Term t;
    t.kind_ = Kind::Iri;
    t.a_ = std::move(value);
    return t;
}

Term Term::literal(std::string lexical, std::string datatype) {
    if (datatype.empty())
        throw Error("literal datatype must be non-empty");
    Term t;
    t.kind_ = Kind::Literal;
    t.a_ = std::move(lexical);
    t.b_ = std::move(datatype);
    return t;
}

Term Term::blank(std::string label) {
    if (label.empty())
        throw Error("blank node label must be non-empty");
    Term t;
    t.kind_ = Kind::BlankNode;
    t.a_ = std::move(label);
    return t;
}

Term Term::quoted(Triple inner) {
    Term t;
    t.kind_ = Kind::Quoted;
    t.quoted_ = std::make_shared<const Triple>(std::move(inner));
    return t;
}

Term Term::quoted(Term subject, Term predicate, Term object) {
    return quoted(Triple(std::move(subject), std::move(predicate), std::move(object)));
}

int Term::compare(const Term& other) const {
    if (kind_ != other.kind_)
        return static_cast<int>(kind_) < static_cast<int>(other.kind_) ? -1 : 1;
    switch (kind_) {
    case Kind::Iri:
    case Kind::BlankNode:
        return a_.compare(other.a_);
    case Kind::Literal: {
        int c = a_.compare(other.a_);
        return c != 0 ? c : b_.compare(other.b_);
    }
    case Kind::Quoted:
        if (quoted_ == other.quoted_)
            return 0;
        return quoted_->compare(*other.quoted_);
    }
    return 0;
}

std::size_t Term::hash() const {
    std::size_t h = static_cast<std::size_t>(kind_);
    switch (kind_) {
    case Kind::Iri:
    case Kind::BlankNode:
        h = hashCombine(h, std::hash<std::string>{}(a_));
        break;
    case Kind::Literal:
        h = hashCombine(h, std::hash<std::string>{}(a_));
        h = hashCombine(h, std::hash<std::string>{}(b_));
        break;
    case Kind::Quoted:
        h = hashCombine(h, quoted_->hash());
        break;
    }
    return h;
}

Triple::Triple(Term s, Term p, Term o)
    : subject(std::move(s)), predicate(std::move(p)), object(std::move(o)) {
    if (!predicate.isIri())
        throw Error("triple predicate must be an IRI");
    if (subject.isLiteral())
        throw Error("triple subject must not be a literal");
}

int Triple::compare(const Triple& other) const {
    int c = subject.compare(other.subject);
    if (c != 0)
        return c;
    c = predicate.compare(other.predicate);
    if (c != 0)
        return c;
    return object.compare(other.object);
}

std::size_t Triple::hash() const {
    std::size_t h = subject.hash();
    h = hashCombine(h, predicate.hash());
    h = hashCombine(h, object.hash());
    return h;
}

Term scopeBlankNodes(const Term& term, const std::string& scope) {
    switch (term.kind()) {
    case Term::Kind::BlankNode:
        return Term::blank(scope + "_" + term.blankLabel());
    case Term::Kind::Quoted:
        return Term::quoted(scopeBlankNodes(term.quotedTriple(), scope));
    default:
        return term;
    }
}

Triple scopeBlankNodes(const Triple& triple, const std::string& scope) {
    return Triple(scopeBlankNodes(triple.subject, scope), triple.predicate,
                  scopeBlankNodes(triple.object, scope));
}

Graph scopeBlankNodes(const Graph& graph, const std::string& scope) {
    Graph out;
    for (const Triple& t : graph)
        out.insert(scopeBlankNodes(t, scope));
    return out;
}

} // namespace semstream
