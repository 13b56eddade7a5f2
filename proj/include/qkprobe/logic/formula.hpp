#pragma once

//! Unary first-order formulas over a finite signature.
//!
//! The fragment covers everything the dataset generators and the inference
//! rule table need: unary predicate atoms, the boolean connectives, and
//! quantifiers of nesting depth one.  Formulas serialize to a canonical
//! prefix text form, e.g.
//!
//!     forall x (imp (atom p x) (atom q x))
//!
//! and parsing that form back yields a structurally identical formula.
//! Constant and variable names live in disjoint pools; inside an atom a term
//! symbol is a variable exactly when a quantifier in scope binds it.
//! Predicate names may span several words ("own a telescope"); the last
//! token of an atom is always its term, everything before it the predicate.

#include <algorithm>
#include <cctype>
#include <set>
#include <string>
#include <vector>

#include "qkprobe/common.hpp"

namespace qkprobe::logic {

enum class Conn { Atom, Not, And, Or, Imp, ForAll, Exists };

struct Term {
    enum class Kind { Constant, Variable };
    Kind kind = Kind::Constant;
    std::string name;

    static Term constant(std::string n) { return {Kind::Constant, std::move(n)}; }
    static Term variable(std::string n) { return {Kind::Variable, std::move(n)}; }

    bool is_var() const { return kind == Kind::Variable; }
    bool operator==(const Term& o) const { return kind == o.kind && name == o.name; }
};

struct Predicate {
    std::string name;
    int arity = 1;

    bool operator==(const Predicate& o) const { return name == o.name && arity == o.arity; }
};

struct Formula {
    Conn kind = Conn::Atom;
    Predicate pred;              // Atom
    Term term;                   // Atom
    std::string var;             // ForAll / Exists
    std::vector<Formula> kids;   // Not: 1, And/Or/Imp: 2, quantifiers: 1

    // -- factories ----------------------------------------------------------

    static Formula atom(std::string pred_name, Term t, int arity = 1) {
        Formula f;
        f.kind = Conn::Atom;
        f.pred = {std::move(pred_name), arity};
        f.term = std::move(t);
        return f;
    }
    static Formula lnot(Formula a) { return node(Conn::Not, {std::move(a)}); }
    static Formula land(Formula a, Formula b) { return node(Conn::And, {std::move(a), std::move(b)}); }
    static Formula lor(Formula a, Formula b) { return node(Conn::Or, {std::move(a), std::move(b)}); }
    static Formula imp(Formula a, Formula b) { return node(Conn::Imp, {std::move(a), std::move(b)}); }
    static Formula forall(std::string v, Formula body) {
        Formula f = node(Conn::ForAll, {std::move(body)});
        f.var = std::move(v);
        return f;
    }
    static Formula exists(std::string v, Formula body) {
        Formula f = node(Conn::Exists, {std::move(body)});
        f.var = std::move(v);
        return f;
    }

    bool operator==(const Formula& o) const {
        if (kind != o.kind) return false;
        switch (kind) {
            case Conn::Atom:
                return pred == o.pred && term == o.term;
            case Conn::ForAll:
            case Conn::Exists:
                if (var != o.var) return false;
                break;
            default:
                break;
        }
        return kids == o.kids;
    }
    bool operator!=(const Formula& o) const { return !(*this == o); }

private:
    static Formula node(Conn k, std::vector<Formula> kids) {
        Formula f;
        f.kind = k;
        f.kids = std::move(kids);
        return f;
    }
};

// Negation with double-negation elimination, so that neg(neg(f)) == f.
// Structural negation.  Pushes through connectives and quantifiers so the
// result stays in the same shape family the generators and the derivation
// search understand; atoms keep a plain Not wrapper.
inline Formula neg(const Formula& f) {
    switch (f.kind) {
        case Conn::Not:
            return f.kids[0];
        case Conn::And:
            return Formula::lor(neg(f.kids[0]), neg(f.kids[1]));
        case Conn::Or:
            return Formula::land(neg(f.kids[0]), neg(f.kids[1]));
        case Conn::Imp:
            return Formula::land(f.kids[0], neg(f.kids[1]));
        case Conn::ForAll:
            return Formula::exists(f.var, neg(f.kids[0]));
        case Conn::Exists:
            return Formula::forall(f.var, neg(f.kids[0]));
        case Conn::Atom:
            break;
    }
    return Formula::lnot(f);
}

// ---------------------------------------------------------------------------
// Printing
// ---------------------------------------------------------------------------

namespace detail {

inline void print_inner(const Formula& f, std::string& out) {
    switch (f.kind) {
        case Conn::Atom:
            out += "(atom ";
            out += f.pred.name;
            out += ' ';
            out += f.term.name;
            out += ')';
            break;
        case Conn::Not:
            out += "(not ";
            print_inner(f.kids[0], out);
            out += ')';
            break;
        case Conn::And:
        case Conn::Or:
        case Conn::Imp: {
            out += '(';
            out += (f.kind == Conn::And ? "and" : f.kind == Conn::Or ? "or" : "imp");
            out += ' ';
            print_inner(f.kids[0], out);
            out += ' ';
            print_inner(f.kids[1], out);
            out += ')';
            break;
        }
        case Conn::ForAll:
        case Conn::Exists:
            out += '(';
            out += (f.kind == Conn::ForAll ? "forall " : "exists ");
            out += f.var;
            out += ' ';
            print_inner(f.kids[0], out);
            out += ')';
            break;
    }
}

}  // namespace detail

// Canonical text. Top-level quantifiers print unparenthesized, nested ones
// with parens; parse() accepts both at the top level.
inline std::string print(const Formula& f) {
    std::string out;
    if (f.kind == Conn::ForAll || f.kind == Conn::Exists) {
        out += (f.kind == Conn::ForAll ? "forall " : "exists ");
        out += f.var;
        out += ' ';
        detail::print_inner(f.kids[0], out);
        return out;
    }
    detail::print_inner(f, out);
    return out;
}

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

namespace detail {

struct Lexer {
    const std::string& text;
    size_t pos = 0;

    void skip_ws() {
        while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
    }
    bool at_end() {
        skip_ws();
        return pos >= text.size();
    }
    char peek_char() {
        skip_ws();
        return pos < text.size() ? text[pos] : '\0';
    }
    std::string next_token() {
        skip_ws();
        if (pos >= text.size()) throw FormatError("formula parse: unexpected end of input");
        char c = text[pos];
        if (c == '(' || c == ')') {
            ++pos;
            return std::string(1, c);
        }
        size_t start = pos;
        while (pos < text.size() && !std::isspace(static_cast<unsigned char>(text[pos])) &&
               text[pos] != '(' && text[pos] != ')') {
            ++pos;
        }
        return text.substr(start, pos - start);
    }
    std::string peek_token() {
        size_t save = pos;
        std::string t = next_token();
        pos = save;
        return t;
    }
    void expect(const std::string& tok) {
        std::string t = next_token();
        if (t != tok) throw FormatError("formula parse: expected '" + tok + "', got '" + t + "'");
    }
};

inline Formula parse_sexp(Lexer& lx, std::vector<std::string>& bound) {
    lx.expect("(");
    std::string op = lx.next_token();
    Formula f;
    if (op == "atom") {
        // everything up to the closing paren; the last word is the term,
        // the rest the (possibly multi-word) predicate name
        std::vector<std::string> words;
        while (lx.peek_char() != ')') {
            std::string w = lx.next_token();
            if (w == "(") throw FormatError("formula parse: expected predicate symbol");
            words.push_back(std::move(w));
        }
        if (words.size() < 2)
            throw FormatError("formula parse: atom needs a predicate and a term");
        bool is_var = std::find(bound.begin(), bound.end(), words.back()) != bound.end();
        Term t = is_var ? Term::variable(words.back()) : Term::constant(words.back());
        std::string pred = words.front();
        for (size_t i = 1; i + 1 < words.size(); ++i) pred += " " + words[i];
        f = Formula::atom(std::move(pred), std::move(t));
    } else if (op == "not") {
        f = Formula::lnot(parse_sexp(lx, bound));
    } else if (op == "and" || op == "or" || op == "imp") {
        Formula a = parse_sexp(lx, bound);
        Formula b = parse_sexp(lx, bound);
        f = (op == "and") ? Formula::land(std::move(a), std::move(b))
            : (op == "or") ? Formula::lor(std::move(a), std::move(b))
                           : Formula::imp(std::move(a), std::move(b));
    } else if (op == "forall" || op == "exists") {
        std::string v = lx.next_token();
        if (v == "(" || v == ")") throw FormatError("formula parse: expected quantifier variable");
        bound.push_back(v);
        Formula body = parse_sexp(lx, bound);
        bound.pop_back();
        f = (op == "forall") ? Formula::forall(v, std::move(body)) : Formula::exists(v, std::move(body));
    } else {
        throw FormatError("formula parse: unknown operator '" + op + "'");
    }
    lx.expect(")");
    return f;
}

}  // namespace detail

inline Formula parse(const std::string& text) {
    detail::Lexer lx{text};
    std::vector<std::string> bound;
    Formula f;
    std::string head = lx.peek_token();
    if (head == "forall" || head == "exists") {
        lx.next_token();
        std::string v = lx.next_token();
        if (v == "(" || v == ")") throw FormatError("formula parse: expected quantifier variable");
        bound.push_back(v);
        Formula body = detail::parse_sexp(lx, bound);
        bound.pop_back();
        f = (head == "forall") ? Formula::forall(v, std::move(body)) : Formula::exists(v, std::move(body));
    } else {
        f = detail::parse_sexp(lx, bound);
    }
    if (!lx.at_end()) throw FormatError("formula parse: trailing input after formula");
    return f;
}

// ---------------------------------------------------------------------------
// Structural queries
// ---------------------------------------------------------------------------

inline int quantifier_depth(const Formula& f) {
    int inner = 0;
    for (const auto& k : f.kids) inner = std::max(inner, quantifier_depth(k));
    if (f.kind == Conn::ForAll || f.kind == Conn::Exists) return inner + 1;
    return inner;
}

inline bool is_closed(const Formula& f, std::vector<std::string>& bound) {
    switch (f.kind) {
        case Conn::Atom:
            if (f.term.is_var())
                return std::find(bound.begin(), bound.end(), f.term.name) != bound.end();
            return true;
        case Conn::ForAll:
        case Conn::Exists: {
            bound.push_back(f.var);
            bool ok = is_closed(f.kids[0], bound);
            bound.pop_back();
            return ok;
        }
        default:
            for (const auto& k : f.kids)
                if (!is_closed(k, bound)) return false;
            return true;
    }
}

inline bool is_closed(const Formula& f) {
    std::vector<std::string> bound;
    return is_closed(f, bound);
}

inline void collect_predicates(const Formula& f, std::set<std::string>& out) {
    if (f.kind == Conn::Atom) out.insert(f.pred.name);
    for (const auto& k : f.kids) collect_predicates(k, out);
}

inline void collect_constants(const Formula& f, std::set<std::string>& out) {
    if (f.kind == Conn::Atom && !f.term.is_var()) out.insert(f.term.name);
    for (const auto& k : f.kids) collect_constants(k, out);
}

// Ground literal inspection: an atom over a constant, possibly negated.
inline bool is_ground_literal(const Formula& f) {
    const Formula* a = (f.kind == Conn::Not) ? &f.kids[0] : &f;
    return a->kind == Conn::Atom && !a->term.is_var();
}

}  // namespace qkprobe::logic
