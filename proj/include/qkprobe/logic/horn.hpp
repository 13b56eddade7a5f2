#pragma once

//! Forward chaining over the Horn-style fragment: ground literal facts plus
//! universally quantified implications whose antecedent is a conjunction of
//! positive atoms (the consequent may be a positive or negated atom).
//! Returns every derivable ground literal together with its minimal chained
//! depth: facts are depth 0, and a rule firing on premises of depths
//! d1..dn yields depth 1 + max(di).  Anything outside the fragment raises
//! FragmentViolation.

#include <map>
#include <span>
#include <string>
#include <vector>

#include "qkprobe/logic/formula.hpp"

namespace qkprobe::logic {

struct Literal {
    bool positive = true;
    std::string pred;
    std::string constant;

    bool operator<(const Literal& o) const {
        if (pred != o.pred) return pred < o.pred;
        if (constant != o.constant) return constant < o.constant;
        return positive < o.positive;
    }
    bool operator==(const Literal& o) const {
        return positive == o.positive && pred == o.pred && constant == o.constant;
    }

    Formula to_formula() const {
        Formula a = Formula::atom(pred, Term::constant(constant));
        return positive ? a : Formula::lnot(a);
    }
    std::string text() const { return print(to_formula()); }
};

inline Literal literal_from(const Formula& f) {
    const Formula* a = &f;
    bool pos = true;
    if (f.kind == Conn::Not) {
        a = &f.kids[0];
        pos = false;
    }
    if (a->kind != Conn::Atom || a->term.is_var())
        throw FragmentViolation("not a ground literal: " + print(f));
    return Literal{pos, a->pred.name, a->term.name};
}

struct HornRule {
    std::vector<std::string> antecedent;  // positive atom predicates over the bound variable
    bool head_positive = true;
    std::string head_pred;
};

namespace detail {

inline void flatten_conj_atoms(const Formula& f, const std::string& var,
                               std::vector<std::string>& out) {
    if (f.kind == Conn::And) {
        flatten_conj_atoms(f.kids[0], var, out);
        flatten_conj_atoms(f.kids[1], var, out);
        return;
    }
    if (f.kind == Conn::Atom && f.term.is_var() && f.term.name == var) {
        out.push_back(f.pred.name);
        return;
    }
    throw FragmentViolation("rule antecedent must be a conjunction of positive atoms: " + print(f));
}

}  // namespace detail

// Classifies one theory member as either a ground literal fact or a Horn rule.
struct HornMember {
    bool is_fact = false;
    Literal fact;
    HornRule rule;
};

inline HornMember classify_horn(const Formula& f) {
    HornMember m;
    if (is_ground_literal(f)) {
        m.is_fact = true;
        m.fact = literal_from(f);
        return m;
    }
    if (f.kind == Conn::ForAll && f.kids[0].kind == Conn::Imp) {
        const Formula& body = f.kids[0];
        detail::flatten_conj_atoms(body.kids[0], f.var, m.rule.antecedent);
        const Formula* head = &body.kids[1];
        if (head->kind == Conn::Not) {
            m.rule.head_positive = false;
            head = &head->kids[0];
        }
        if (head->kind != Conn::Atom || !head->term.is_var() || head->term.name != f.var)
            throw FragmentViolation("rule consequent must be a literal over the bound variable: " +
                                    print(f));
        m.rule.head_pred = head->pred.name;
        return m;
    }
    throw FragmentViolation("theory member outside the Horn fragment: " + print(f));
}

inline std::map<Literal, int> forward_chain(std::span<const Formula> theory, int max_depth = 64) {
    std::vector<Literal> facts;
    std::vector<HornRule> rules;
    std::vector<std::string> constants;
    for (const auto& f : theory) {
        HornMember m = classify_horn(f);
        if (m.is_fact) {
            facts.push_back(m.fact);
            bool seen = false;
            for (const auto& c : constants) seen = seen || c == m.fact.constant;
            if (!seen) constants.push_back(m.fact.constant);
        } else {
            rules.push_back(m.rule);
        }
    }

    std::map<Literal, int> depth;
    for (const auto& f : facts) depth[f] = 0;

    // Relax rule firings until fixpoint; each update lowers a depth so this
    // terminates.
    bool changed = true;
    while (changed) {
        changed = false;
        for (const auto& r : rules) {
            for (const auto& c : constants) {
                int longest = 0;
                bool all_present = true;
                for (const auto& p : r.antecedent) {
                    auto it = depth.find(Literal{true, p, c});
                    if (it == depth.end()) {
                        all_present = false;
                        break;
                    }
                    longest = std::max(longest, it->second);
                }
                if (!all_present) continue;
                int cand = longest + 1;
                if (cand > max_depth) continue;
                Literal head{r.head_positive, r.head_pred, c};
                auto it = depth.find(head);
                if (it == depth.end() || cand < it->second) {
                    depth[head] = cand;
                    changed = true;
                }
            }
        }
    }
    return depth;
}

inline std::map<Literal, int> forward_chain(const std::vector<Formula>& theory,
                                            int max_depth = 64) {
    return forward_chain(std::span<const Formula>(theory.data(), theory.size()), max_depth);
}

}  // namespace qkprobe::logic
