#include "semstream/query.hpp"

#include <cctype>
#include <limits>
#include <sstream>
#include <vector>

#include "semstream/codec.hpp"
#include "semstream/errors.hpp"
#include "semstream/vocab.hpp"

namespace semstream {
namespace {

enum class Tok {
    Eof,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Dot,
    QuoteOpen,
    QuoteClose,
    IriRef,   // text = content between < >
    PName,    // text = raw "pfx:local"
    Var,      // text = name without '?'
    String,   // text = unescaped lexical form
    HatHat,
    Number,   // text = digits, suffix = attached letters ("5s")
    Ident,    // bare word: keywords and 'a'
    Blank,    // text = label
};

struct Token {
    Tok kind = Tok::Eof;
    std::string text;
    std::string suffix;
    std::size_t line = 1;
    std::size_t col = 1;
};

[[noreturn]] void fail(const Token& at, const std::string& expected) {
    throw QuerySyntaxError(at.line, at.col, expected);
}

bool nameStart(char c) {
    return std::isalpha(static_cast<unsigned char>(c)) || c == '_';
}
bool nameChar(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

std::string upper(std::string s) {
    for (auto& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return s;
}
std::string lower(std::string s) {
    for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

class Lexer {
public:
    explicit Lexer(const std::string& text) : text_(text) {}

    std::vector<Token> run() {
        std::vector<Token> out;
        for (;;) {
            skipTrivia();
            out.push_back(next());
            if (out.back().kind == Tok::Eof) return out;
        }
    }

private:
    const std::string& text_;
    std::size_t pos_ = 0, line_ = 1, col_ = 1;

    bool atEnd() const { return pos_ >= text_.size(); }
    char peek(std::size_t ahead = 0) const {
        return pos_ + ahead < text_.size() ? text_[pos_ + ahead] : '\0';
    }
    char advance() {
        char c = text_[pos_++];
        if (c == '\n') {
            ++line_;
            col_ = 1;
        } else {
            ++col_;
        }
        return c;
    }

    void skipTrivia() {
        while (!atEnd()) {
            char c = peek();
            if (c == '#') {
                while (!atEnd() && peek() != '\n') advance();
            } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
                advance();
            } else {
                break;
            }
        }
    }

    [[noreturn]] void err(std::size_t line, std::size_t col, const std::string& msg) {
        throw QuerySyntaxError(line, col, msg);
    }

    Token next() {
        std::size_t line = line_, col = col_;
        auto tok = [&](Tok k, std::string text = {}, std::string suffix = {}) {
            return Token{k, std::move(text), std::move(suffix), line, col};
        };
        if (atEnd()) return tok(Tok::Eof);
        char c = peek();

        switch (c) {
        case '{': advance(); return tok(Tok::LBrace);
        case '}': advance(); return tok(Tok::RBrace);
        case '[': advance(); return tok(Tok::LBracket);
        case ']': advance(); return tok(Tok::RBracket);
        case '.': advance(); return tok(Tok::Dot);
        default: break;
        }

        if (c == '<') {
            if (peek(1) == '<') {
                advance();
                advance();
                return tok(Tok::QuoteOpen);
            }
            advance();
            std::string iri;
            for (;;) {
                if (atEnd() || peek() == '\n') err(line, col, "unterminated IRI reference");
                char d = advance();
                if (d == '>') break;
                iri += d;
            }
            if (iri.empty()) err(line, col, "empty IRI reference");
            return tok(Tok::IriRef, std::move(iri));
        }
        if (c == '>') {
            if (peek(1) == '>') {
                advance();
                advance();
                return tok(Tok::QuoteClose);
            }
            err(line, col, "unexpected '>'");
        }
        if (c == '?') {
            advance();
            if (!nameStart(peek())) err(line, col, "expected variable name after '?'");
            std::string name;
            while (nameChar(peek())) name += advance();
            return tok(Tok::Var, std::move(name));
        }
        if (c == '"') {
            advance();
            std::string lex;
            for (;;) {
                if (atEnd() || peek() == '\n') err(line, col, "unterminated string literal");
                char d = advance();
                if (d == '"') break;
                if (d == '\\') {
                    if (atEnd()) err(line, col, "unterminated string literal");
                    char e = advance();
                    switch (e) {
                    case '"': lex += '"'; break;
                    case '\\': lex += '\\'; break;
                    case 'n': lex += '\n'; break;
                    case 'r': lex += '\r'; break;
                    case 't': lex += '\t'; break;
                    default: err(line, col, std::string("unknown escape sequence '\\") + e + "'");
                    }
                } else {
                    lex += d;
                }
            }
            return tok(Tok::String, std::move(lex));
        }
        if (c == '^') {
            advance();
            if (peek() != '^') err(line, col, "expected '^^'");
            advance();
            return tok(Tok::HatHat);
        }
        if (std::isdigit(static_cast<unsigned char>(c))) {
            std::string digits, suffix;
            while (std::isdigit(static_cast<unsigned char>(peek()))) digits += advance();
            while (std::isalpha(static_cast<unsigned char>(peek()))) suffix += advance();
            return tok(Tok::Number, std::move(digits), std::move(suffix));
        }
        if (c == '_' && peek(1) == ':') {
            advance();
            advance();
            std::string label;
            while (nameChar(peek())) label += advance();
            if (label.empty()) err(line, col, "expected blank node label after '_:'");
            return tok(Tok::Blank, std::move(label));
        }
        if (c == ':' || nameStart(c)) {
            std::string word;
            while (nameChar(peek())) word += advance();
            if (peek() != ':') {
                if (word.empty()) err(line, col, std::string("unexpected character '") + c + "'");
                return tok(Tok::Ident, std::move(word));
            }
            advance();  // ':'
            std::string local;
            for (;;) {
                char d = peek();
                if (nameChar(d)) {
                    local += advance();
                } else if (d == '.' && nameChar(peek(1))) {
                    // dots may appear inside local names but never end one
                    local += advance();
                } else {
                    break;
                }
            }
            return tok(Tok::PName, word + ":" + local);
        }
        err(line, col, std::string("unexpected character '") + c + "'");
    }
};

enum class Role { Subject, Predicate, Object };

class Parser {
public:
    Parser(std::vector<Token> toks, const PrefixTable& ambient)
        : toks_(std::move(toks)), prefixes_(ambient) {}

    QueryAST query() {
        prologue();
        QueryAST ast;
        if (isKeyword("REGISTER")) {
            take();
            ast.registerIri = iriTerm("expected output stream IRI after REGISTER");
            expectKeyword("AS");
        }
        if (isKeyword("SELECT")) {
            take();
            ast.form = QueryAST::Form::Select;
            while (at(Tok::Var)) ast.selectVars.push_back(take().text);
            if (ast.selectVars.empty()) fail(peek(), "expected at least one variable after SELECT");
        } else if (isKeyword("CONSTRUCT")) {
            take();
            ast.form = QueryAST::Form::Construct;
            expect(Tok::LBrace, "expected '{' after CONSTRUCT");
            while (!at(Tok::RBrace)) ast.constructTemplates.push_back(triplePattern(true));
            take();
        } else {
            fail(peek(), "expected SELECT or CONSTRUCT");
        }
        expectKeyword("WHERE");
        expect(Tok::LBrace, "expected '{' after WHERE");
        while (!at(Tok::RBrace)) {
            if (isKeyword("STREAM")) {
                ast.streamPatterns.push_back(streamBlock());
            } else {
                ast.staticPatterns.push_back(triplePattern(true));
            }
        }
        take();
        if (!at(Tok::Eof)) fail(peek(), "expected end of query");
        validate(ast);
        return ast;
    }

    Graph groundGraph() {
        prologue();
        Graph g;
        while (!at(Tok::Eof)) {
            TriplePattern p = triplePattern(false, Tok::Eof);
            g.insert(Triple(p.subject.term(), p.predicate.term(), p.object.term()));
        }
        return g;
    }

private:
    std::vector<Token> toks_;
    std::size_t pos_ = 0;
    PrefixTable prefixes_;

    const Token& peek() const { return toks_[pos_]; }
    bool at(Tok k) const { return peek().kind == k; }
    const Token& take() { return toks_[pos_ + 1 < toks_.size() ? pos_++ : pos_]; }

    const Token& expect(Tok k, const std::string& what) {
        if (!at(k)) fail(peek(), what);
        return take();
    }

    bool isKeyword(const std::string& kw) const {
        return at(Tok::Ident) && upper(peek().text) == kw;
    }
    void expectKeyword(const std::string& kw) {
        if (!isKeyword(kw)) fail(peek(), "expected " + kw);
        take();
    }

    void prologue() {
        while (isKeyword("PREFIX")) {
            take();
            const Token& pn = expect(Tok::PName, "expected prefix label like 'ex:'");
            auto colon = pn.text.find(':');
            if (colon + 1 != pn.text.size())
                fail(pn, "prefix declaration label must end with ':'");
            const Token& iri = expect(Tok::IriRef, "expected IRI in prefix declaration");
            makeIri(iri, iri.text);  // validates
            prefixes_.add(pn.text.substr(0, colon), iri.text);
        }
    }

    Term makeIri(const Token& tok, const std::string& value) {
        try {
            return Term::iri(value);
        } catch (const Error& e) {
            fail(tok, e.what());
        }
    }

    Term expandPName(const Token& tok) {
        auto full = prefixes_.expand(tok.text);
        if (!full) {
            auto colon = tok.text.find(':');
            fail(tok, "undeclared prefix '" + tok.text.substr(0, colon) + ":'");
        }
        return makeIri(tok, *full);
    }

    /// IRI in keyword positions (REGISTER, selectors, window ON).
    Term iriTerm(const std::string& what) {
        if (at(Tok::IriRef)) {
            const Token& t = take();
            return makeIri(t, t.text);
        }
        if (at(Tok::PName)) return expandPName(take());
        fail(peek(), what);
    }

    PatternTerm patternTerm(bool allowVars, Role role) {
        const Token& t = peek();
        switch (t.kind) {
        case Tok::IriRef: {
            const Token& tok = take();
            return PatternTerm::ground(makeIri(tok, tok.text));
        }
        case Tok::PName:
            return PatternTerm::ground(expandPName(take()));
        case Tok::Ident:
            if (t.text == "a" && role == Role::Predicate) {
                take();
                return PatternTerm::ground(Term::iri(vocab::kRdfType));
            }
            fail(t, "unexpected keyword '" + t.text + "' in triple pattern");
        case Tok::Var:
            if (!allowVars) fail(t, "variable not allowed here");
            return PatternTerm::var(take().text);
        case Tok::String: {
            if (role == Role::Subject) fail(t, "literal not allowed as subject");
            if (role == Role::Predicate) fail(t, "literal not allowed as predicate");
            std::string lex = take().text;
            Term dt = Term::iri(vocab::kXsdString);
            if (at(Tok::HatHat)) {
                take();
                dt = iriTerm("expected datatype IRI after '^^'");
            }
            return PatternTerm::ground(Term::literal(lex, dt.iriValue()));
        }
        case Tok::Blank:
            if (role == Role::Predicate) fail(t, "blank node not allowed as predicate");
            return PatternTerm::ground(Term::blank(take().text));
        case Tok::QuoteOpen: {
            if (role == Role::Predicate) fail(t, "quoted triple not allowed as predicate");
            take();
            PatternTerm s = patternTerm(allowVars, Role::Subject);
            PatternTerm p = patternTerm(allowVars, Role::Predicate);
            PatternTerm o = patternTerm(allowVars, Role::Object);
            expect(Tok::QuoteClose, "expected '>>'");
            TriplePattern inner(std::move(s), std::move(p), std::move(o));
            if (inner.subject.isGround() && inner.predicate.isGround() &&
                inner.object.isGround()) {
                return PatternTerm::ground(Term::quoted(
                    inner.subject.term(), inner.predicate.term(), inner.object.term()));
            }
            return PatternTerm::quotedPattern(std::move(inner));
        }
        default:
            fail(t, "expected a term");
        }
    }

    /// Parses "s p o" with a dot that is mandatory except before `closer`.
    TriplePattern triplePattern(bool allowVars, Tok closer = Tok::RBrace) {
        PatternTerm s = patternTerm(allowVars, Role::Subject);
        PatternTerm p = patternTerm(allowVars, Role::Predicate);
        PatternTerm o = patternTerm(allowVars, Role::Object);
        if (at(Tok::Dot)) {
            take();
        } else if (!at(closer)) {
            fail(peek(), "expected '.' after triple");
        }
        return TriplePattern(std::move(s), std::move(p), std::move(o));
    }

    StreamPattern streamBlock() {
        take();  // STREAM
        StreamPattern sp;
        if (at(Tok::LBrace)) {
            take();
            sp.selector = PatternTerm::ground(iriTerm("expected stream IRI"));
            expect(Tok::RBrace, "expected '}' after stream IRI");
        } else if (at(Tok::Var)) {
            sp.selector = PatternTerm::var(take().text);
        } else {
            fail(peek(), "expected '{' or variable after STREAM");
        }
        expect(Tok::LBracket, "expected '[' to open window clause");
        expectKeyword("RANGE");
        const Token& num = expect(Tok::Number, "expected window duration");
        std::string unit = lower(num.suffix);
        if (unit.empty()) unit = lower(expect(Tok::Ident, "expected duration unit").text);
        std::int64_t factor;
        if (unit == "ms") {
            factor = 1;
        } else if (unit == "s") {
            factor = 1000;
        } else if (unit == "m") {
            factor = 60000;
        } else {
            fail(num, "unknown duration unit '" + unit + "'");
        }
        std::int64_t value;
        try {
            value = std::stoll(num.text);
        } catch (const std::exception&) {
            fail(num, "duration out of range");
        }
        if (value > std::numeric_limits<std::int64_t>::max() / factor)
            fail(num, "duration out of range");
        sp.window.rangeMs = value * factor;
        expectKeyword("ON");
        sp.window.onPredicate = iriTerm("expected predicate IRI after ON");
        expect(Tok::RBracket, "expected ']' to close window clause");
        expect(Tok::LBrace, "expected '{' to open STREAM block");
        while (!at(Tok::RBrace)) sp.patterns.push_back(triplePattern(true));
        take();
        return sp;
    }

    static void validate(const QueryAST& ast) {
        if (ast.streamPatterns.empty())
            throw QueryValidationError("query has no STREAM clause");
        std::set<std::string> whereVars;
        for (const auto& sp : ast.streamPatterns) {
            if (sp.patterns.empty())
                throw QueryValidationError("STREAM block has no triple patterns");
            if (sp.window.rangeMs <= 0)
                throw QueryValidationError("window range must be positive");
            if (sp.selector.isVar()) whereVars.insert(sp.selector.varName());
            for (const auto& p : sp.patterns) collectVariables(p, whereVars);
        }
        for (const auto& p : ast.staticPatterns) collectVariables(p, whereVars);
        if (ast.registerIri && ast.form != QueryAST::Form::Construct)
            throw QueryValidationError("REGISTER requires a CONSTRUCT result form");
        if (ast.form == QueryAST::Form::Select) {
            for (const auto& v : ast.selectVars)
                if (!whereVars.count(v))
                    throw QueryValidationError("SELECT variable ?" + v +
                                               " does not occur in WHERE");
        } else {
            std::set<std::string> tmplVars = collectVariables(ast.constructTemplates);
            for (const auto& v : tmplVars)
                if (!whereVars.count(v))
                    throw QueryValidationError("CONSTRUCT template variable ?" + v +
                                               " does not occur in WHERE");
        }
    }
};

void writePatternTerm(std::ostream& os, const PatternTerm& t) {
    switch (t.kind()) {
    case PatternTerm::Kind::Var:
        os << '?' << t.varName();
        break;
    case PatternTerm::Kind::Ground:
        os << serializeTerm(t.term());
        break;
    case PatternTerm::Kind::QuotedPattern:
        os << "<< ";
        writePatternTerm(os, t.quoted().subject);
        os << ' ';
        writePatternTerm(os, t.quoted().predicate);
        os << ' ';
        writePatternTerm(os, t.quoted().object);
        os << " >>";
        break;
    }
}

void writeTriplePattern(std::ostream& os, const TriplePattern& p) {
    writePatternTerm(os, p.subject);
    os << ' ';
    writePatternTerm(os, p.predicate);
    os << ' ';
    writePatternTerm(os, p.object);
    os << " .";
}

void writeSelector(std::ostream& os, const PatternTerm& selector, bool braced) {
    if (selector.isVar()) {
        os << '?' << selector.varName();
    } else if (braced) {
        os << '{' << serializeTerm(selector.term()) << '}';
    } else {
        os << serializeTerm(selector.term());
    }
}

}  // namespace

QueryAST parseQuery(const std::string& text, const PrefixTable& ambient) {
    return Parser(Lexer(text).run(), ambient).query();
}

Graph parseGroundGraph(const std::string& text, const PrefixTable& ambient) {
    return Parser(Lexer(text).run(), ambient).groundGraph();
}

std::string prettyPrint(const QueryAST& ast) {
    std::ostringstream os;
    if (ast.registerIri) os << "REGISTER " << serializeTerm(*ast.registerIri) << " AS\n";
    if (ast.form == QueryAST::Form::Select) {
        os << "SELECT";
        for (const auto& v : ast.selectVars) os << " ?" << v;
        os << '\n';
    } else {
        os << "CONSTRUCT {\n";
        for (const auto& t : ast.constructTemplates) {
            os << "  ";
            writeTriplePattern(os, t);
            os << '\n';
        }
        os << "}\n";
    }
    os << "WHERE {\n";
    for (const auto& sp : ast.streamPatterns) {
        os << "  STREAM ";
        writeSelector(os, sp.selector, true);
        os << " [RANGE " << sp.window.rangeMs << "ms ON " << serializeTerm(sp.window.onPredicate)
           << "] {\n";
        for (const auto& p : sp.patterns) {
            os << "    ";
            writeTriplePattern(os, p);
            os << '\n';
        }
        os << "  }\n";
    }
    for (const auto& p : ast.staticPatterns) {
        os << "  ";
        writeTriplePattern(os, p);
        os << '\n';
    }
    os << "}\n";
    return os.str();
}

std::string toDebugString(const QueryAST& ast) {
    std::ostringstream os;
    os << "query\n";
    if (ast.registerIri) os << "  register " << serializeTerm(*ast.registerIri) << '\n';
    if (ast.form == QueryAST::Form::Select) {
        os << "  select";
        for (const auto& v : ast.selectVars) os << " ?" << v;
        os << '\n';
    } else {
        os << "  construct\n";
        for (const auto& t : ast.constructTemplates) {
            os << "    template ";
            writeTriplePattern(os, t);
            os << '\n';
        }
    }
    for (const auto& sp : ast.streamPatterns) {
        os << "  stream ";
        writeSelector(os, sp.selector, false);
        os << " [range " << sp.window.rangeMs << "ms on "
           << serializeTerm(sp.window.onPredicate) << "]\n";
        for (const auto& p : sp.patterns) {
            os << "    pattern ";
            writeTriplePattern(os, p);
            os << '\n';
        }
    }
    for (const auto& p : ast.staticPatterns) {
        os << "  static ";
        writeTriplePattern(os, p);
        os << '\n';
    }
    return os.str();
}

} // namespace semstream
