#include "semstream/codec.hpp"

#include <algorithm>
#include <sstream>
#include <vector>

namespace semstream {

namespace {

void appendEscaped(std::string& out, const std::string& lexical) {
    for (char c : lexical) {
        switch (c) {
        case '"': out += "\\\""; break;
        case '\\': out += "\\\\"; break;
        case '\n': out += "\\n"; break;
        case '\r': out += "\\r"; break;
        case '\t': out += "\\t"; break;
        default: out += c;
        }
    }
}

void appendTerm(std::string& out, const Term& term) {
    switch (term.kind()) {
    case Term::Kind::Iri:
        out += '<';
        out += term.iriValue();
        out += '>';
        break;
    case Term::Kind::Literal:
        out += '"';
        appendEscaped(out, term.lexicalForm());
        out += "\"^^<";
        out += term.datatype();
        out += '>';
        break;
    case Term::Kind::BlankNode:
        out += "_:";
        out += term.blankLabel();
        break;
    case Term::Kind::Quoted: {
        const Triple& t = term.quotedTriple();
        out += "<< ";
        appendTerm(out, t.subject);
        out += ' ';
        appendTerm(out, t.predicate);
        out += ' ';
        appendTerm(out, t.object);
        out += " >>";
        break;
    }
    }
}

// Recursive-descent reader over one physical line.
class LineReader {
public:
    LineReader(std::string_view line, std::size_t lineNo) : line_(line), lineNo_(lineNo) {}

    Triple readTriple() {
        Term s = readTerm();
        Term p = readTerm();
        Term o = readTerm();
        skipSpace();
        if (!consume('.'))
            fail("expected '.' after object");
        skipSpace();
        if (!atEnd())
            fail("unexpected content after '.'");
        if (!p.isIri())
            fail("predicate must be an IRI");
        if (s.isLiteral())
            fail("subject must not be a literal");
        return Triple(std::move(s), std::move(p), std::move(o));
    }

private:
    [[noreturn]] void fail(const std::string& reason) { throw CodecParseError(lineNo_, reason); }

    bool atEnd() const { return pos_ >= line_.size(); }
    char peek(std::size_t ahead = 0) const {
        return pos_ + ahead < line_.size() ? line_[pos_ + ahead] : '\0';
    }
    bool consume(char c) {
        if (peek() != c)
            return false;
        ++pos_;
        return true;
    }
    void skipSpace() {
        while (!atEnd() && (line_[pos_] == ' ' || line_[pos_] == '\t'))
            ++pos_;
    }

    Term readTerm() {
        skipSpace();
        if (atEnd())
            fail("unexpected end of line, expected a term");
        char c = peek();
        if (c == '<' && peek(1) == '<')
            return readQuoted();
        if (c == '<')
            return readIri();
        if (c == '"')
            return readLiteral();
        if (c == '_')
            return readBlank();
        fail(std::string("unexpected character '") + c + "'");
    }

    Term readIri() {
        ++pos_; // '<'
        std::string value;
        while (!atEnd() && peek() != '>') {
            char c = line_[pos_++];
            if (c == ' ' || c == '\t' || c == '<')
                fail("invalid character inside IRI");
            value += c;
        }
        if (!consume('>'))
            fail("unterminated IRI");
        if (value.empty())
            fail("empty IRI");
        return Term::iri(std::move(value));
    }

    Term readQuoted() {
        pos_ += 2; // '<<'
        Term s = readTerm();
        Term p = readTerm();
        Term o = readTerm();
        skipSpace();
        if (!(consume('>') && consume('>')))
            fail("expected '>>' to close quoted triple");
        if (!p.isIri())
            fail("quoted-triple predicate must be an IRI");
        if (s.isLiteral())
            fail("quoted-triple subject must not be a literal");
        return Term::quoted(std::move(s), std::move(p), std::move(o));
    }

    Term readLiteral() {
        ++pos_; // '"'
        std::string lexical;
        while (true) {
            if (atEnd())
                fail("unterminated literal");
            char c = line_[pos_++];
            if (c == '"')
                break;
            if (c == '\\') {
                if (atEnd())
                    fail("dangling escape in literal");
                char e = line_[pos_++];
                switch (e) {
                case '"': lexical += '"'; break;
                case '\\': lexical += '\\'; break;
                case 'n': lexical += '\n'; break;
                case 'r': lexical += '\r'; break;
                case 't': lexical += '\t'; break;
                default:
                    fail(std::string("unknown escape '\\") + e + "' in literal");
                }
            } else {
                lexical += c;
            }
        }
        std::string datatype = vocab::kXsdString;
        if (peek() == '^') {
            if (peek(1) != '^')
                fail("expected '^^' before datatype");
            pos_ += 2;
            Term dt = readIriNoSpaceSkip();
            datatype = dt.iriValue();
        }
        return Term::literal(std::move(lexical), std::move(datatype));
    }

    Term readIriNoSpaceSkip() {
        if (peek() != '<' || peek(1) == '<')
            fail("expected datatype IRI after '^^'");
        return readIri();
    }

    Term readBlank() {
        ++pos_; // '_'
        if (!consume(':'))
            fail("expected ':' after '_'");
        std::string label;
        while (!atEnd()) {
            char c = peek();
            bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                      c == '_';
            if (!ok)
                break;
            label += c;
            ++pos_;
        }
        if (label.empty())
            fail("empty blank node label");
        return Term::blank(std::move(label));
    }

    std::string_view line_;
    std::size_t lineNo_;
    std::size_t pos_ = 0;
};

bool blankOrComment(std::string_view line) {
    for (char c : line) {
        if (c == ' ' || c == '\t')
            continue;
        return c == '#';
    }
    return true;
}

} // namespace

std::string serializeTerm(const Term& term) {
    std::string out;
    appendTerm(out, term);
    return out;
}

std::string serializeTriple(const Triple& triple) {
    std::string out;
    appendTerm(out, triple.subject);
    out += ' ';
    appendTerm(out, triple.predicate);
    out += ' ';
    appendTerm(out, triple.object);
    return out;
}

std::string encode(const Graph& graph) {
    std::vector<std::string> lines;
    lines.reserve(graph.size());
    for (const Triple& t : graph)
        lines.push_back(serializeTriple(t) + " .");
    std::sort(lines.begin(), lines.end());
    std::string out;
    for (const std::string& line : lines) {
        out += line;
        out += '\n';
    }
    return out;
}

Graph decode(std::string_view text) {
    Graph graph;
    std::size_t lineNo = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
        if (start == text.size()) {
            break;
        }
        std::size_t end = text.find('\n', start);
        std::string_view line =
            text.substr(start, end == std::string_view::npos ? std::string_view::npos
                                                             : end - start);
        ++lineNo;
        // Strip a trailing carriage return so CRLF payloads decode too.
        if (!line.empty() && line.back() == '\r')
            line.remove_suffix(1);
        if (!blankOrComment(line))
            graph.insert(LineReader(line, lineNo).readTriple());
        if (end == std::string_view::npos)
            break;
        start = end + 1;
    }
    return graph;
}

std::string serializeBinding(const Binding& binding) {
    std::string out;
    for (const auto& [name, value] : binding.entries()) {
        if (!out.empty())
            out += ' ';
        out += '?';
        out += name;
        out += '=';
        out += serializeTerm(value);
    }
    return out;
}

} // namespace semstream
