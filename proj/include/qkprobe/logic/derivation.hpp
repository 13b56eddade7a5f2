#pragma once

//! Minimal-depth derivation search.
//!
//! A generalization of the Horn chainer that also knows the contrapositive,
//! disjunctive-syllogism, constructive/destructive/bidirectional-dilemma,
//! instantiation/generalization and single-step rewrite moves the dataset
//! generators compose.  Depth is the chained count: theory members cost 0,
//! a step deriving an item from premises of depths d1..dn lands at
//! 1 + max(di).  The search relaxes to fixpoint, so reported depths are
//! minimal over all derivations the step library can express.  Soundness is
//! cross-checked against the semantic oracle in the test suite.

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qkprobe/logic/formula.hpp"
#include "qkprobe/logic/horn.hpp"

namespace qkprobe::logic {

class DerivationEngine {
public:
    DerivationEngine(std::span<const Formula> theory, std::vector<std::string> extra_constants = {},
                     int max_depth = 32)
        : max_depth_(max_depth) {
        constants_ = std::move(extra_constants);
        for (const auto& f : theory) {  // constants first: rewrites instantiate over them
            members_.push_back(print(f));
            std::set<std::string> cs;
            collect_constants(f, cs);
            for (const auto& c : cs) add_constant(c);
        }
        // Domains are nonempty, so a theory that names no individual still
        // supports instantiation: give it one anonymous witness.
        if (constants_.empty()) constants_.push_back("_w");
        for (const auto& f : theory) classify(f);
        close();
    }

    DerivationEngine(const std::vector<Formula>& theory,
                     std::vector<std::string> extra_constants = {}, int max_depth = 32)
        : DerivationEngine(std::span<const Formula>(theory.data(), theory.size()),
                           std::move(extra_constants), max_depth) {}

    /// Minimal chained depth of `target`, or nullopt when the step library
    /// cannot derive it.  Theory members report depth 0.
    std::optional<int> depth_of(const Formula& target) const {
        // members match structurally: a statement "is" a premise only when it
        // reads as one, not merely when it is materially equal to one
        std::string raw = print(target);
        for (const auto& m : members_)
            if (m == raw) return 0;
        std::string key = key_of(target);
        std::optional<int> best;
        auto consider = [&](std::optional<int> d) {
            if (d && *d <= max_depth_ && (!best || *d < *best)) best = d;
        };
        auto it = items_.find(key);
        if (it != items_.end()) consider(it->second);

        if (target.kind == Conn::And) {  // conjunction introduction
            auto a = depth_of(target.kids[0]);
            auto b = depth_of(target.kids[1]);
            if (a && b) consider(1 + std::max(*a, *b));
        }
        if (target.kind == Conn::Or) {  // disjunction introduction from either side
            auto a = depth_of(target.kids[0]);
            auto b = depth_of(target.kids[1]);
            if (a) consider(1 + *a);
            if (b) consider(1 + *b);
        }
        if (target.kind == Conn::Exists && is_literal_over(target.kids[0], target.var)) {
            // existential generalization from any witnessing constant
            for (const auto& c : constants_) {
                auto d = depth_of(substitute(target.kids[0], target.var, c));
                if (d) consider(1 + *d);
            }
        }
        return best;
    }

private:
    struct UImp {  // forall x (a1 ^ .. ^ an -> head)
        std::vector<std::string> ante;
        Literal head;  // constant field unused in the pattern
    };
    struct UDisj {  // forall x (l1 v l2)
        Literal l1, l2;
    };
    struct UPair {  // forall x ((a1 -> c1) ^ (a2 -> c2))
        std::string a1, a2;
        Literal c1, c2;
    };

    int max_depth_;
    std::vector<std::string> members_;
    std::vector<std::string> constants_;
    std::vector<UImp> uimps_;
    std::vector<UDisj> udisjs_;
    std::vector<UPair> upairs_;
    std::vector<Literal> ulits_;                       // forall x (l)
    std::vector<std::pair<Formula, int>> seeds_;       // pre-derived items with fixed depth
    std::map<std::string, int> items_;                 // canonical text -> depth

    void add_constant(const std::string& c) {
        for (const auto& k : constants_)
            if (k == c) return;
        constants_.push_back(c);
    }

    // Items are indexed by their negation-normal form with implications
    // rewritten away, so materially equal statements share one depth entry
    // (p -> q and !p v q are the same item).
    static Formula to_nnf(const Formula& f, bool negated) {
        switch (f.kind) {
            case Conn::Atom:
                return negated ? Formula::lnot(f) : f;
            case Conn::Not:
                return to_nnf(f.kids[0], !negated);
            case Conn::And:
                if (negated)
                    return Formula::lor(to_nnf(f.kids[0], true), to_nnf(f.kids[1], true));
                return Formula::land(to_nnf(f.kids[0], false), to_nnf(f.kids[1], false));
            case Conn::Or:
                if (negated)
                    return Formula::land(to_nnf(f.kids[0], true), to_nnf(f.kids[1], true));
                return Formula::lor(to_nnf(f.kids[0], false), to_nnf(f.kids[1], false));
            case Conn::Imp:
                if (negated)
                    return Formula::land(to_nnf(f.kids[0], false), to_nnf(f.kids[1], true));
                return Formula::lor(to_nnf(f.kids[0], true), to_nnf(f.kids[1], false));
            case Conn::ForAll:
                if (negated) return Formula::exists(f.var, to_nnf(f.kids[0], true));
                return Formula::forall(f.var, to_nnf(f.kids[0], false));
            case Conn::Exists:
                if (negated) return Formula::forall(f.var, to_nnf(f.kids[0], true));
                return Formula::exists(f.var, to_nnf(f.kids[0], false));
        }
        return f;
    }
    static std::string key_of(const Formula& f) { return print(to_nnf(f, false)); }

    static bool is_literal_over(const Formula& f, const std::string& var) {
        const Formula* a = f.kind == Conn::Not ? &f.kids[0] : &f;
        return a->kind == Conn::Atom && a->term.is_var() && a->term.name == var;
    }
    static Literal literal_pattern(const Formula& f) {
        // literal over a bound variable; constant filled in at firing time
        const Formula* a = f.kind == Conn::Not ? &f.kids[0] : &f;
        return Literal{f.kind != Conn::Not, a->pred.name, ""};
    }
    static Formula substitute(const Formula& f, const std::string& var, const std::string& c) {
        Formula out = f;
        if (out.kind == Conn::Atom) {
            if (out.term.is_var() && out.term.name == var) out.term = Term::constant(c);
            return out;
        }
        for (auto& k : out.kids) k = substitute(k, var, c);
        return out;
    }
    static Formula lit_formula(Literal l, const std::string& c) {
        l.constant = c;
        return l.to_formula();
    }
    static Literal negated(Literal l) {
        l.positive = !l.positive;
        return l;
    }

    void classify(const Formula& f) {
        if (is_ground_literal(f)) {
            seeds_.emplace_back(f, 0);
            return;
        }
        // ground conjunction fact: components extractable in one step
        if (f.kind == Conn::And && is_ground_literal(f.kids[0]) && is_ground_literal(f.kids[1])) {
            seeds_.emplace_back(f, 0);
            seeds_.emplace_back(f.kids[0], 1);
            seeds_.emplace_back(f.kids[1], 1);
            return;
        }
        if (f.kind == Conn::Or && is_ground_literal(f.kids[0]) && is_ground_literal(f.kids[1])) {
            seeds_.emplace_back(f, 0);
            return;
        }
        if (f.kind == Conn::Not && f.kids[0].kind == Conn::ForAll) {
            // not forall x (p ^ q)  =>  exists x (!p v !q)
            const Formula& u = f.kids[0];
            const Formula& body = u.kids[0];
            if (body.kind == Conn::And && is_literal_over(body.kids[0], u.var) &&
                is_literal_over(body.kids[1], u.var)) {
                Formula ex = Formula::exists(
                    u.var, Formula::lor(neg(body.kids[0]), neg(body.kids[1])));
                seeds_.emplace_back(ex, 1);
            }
            return;
        }
        if (f.kind != Conn::ForAll) return;
        const std::string& v = f.var;
        const Formula& body = f.kids[0];

        if (is_literal_over(body, v)) {
            ulits_.push_back(literal_pattern(body));
            return;
        }
        if (body.kind == Conn::Or && is_literal_over(body.kids[0], v) &&
            is_literal_over(body.kids[1], v)) {
            udisjs_.push_back({literal_pattern(body.kids[0]), literal_pattern(body.kids[1])});
            // commutation rewrite
            seeds_.emplace_back(Formula::forall(v, Formula::lor(body.kids[1], body.kids[0])), 1);
            return;
        }
        if (body.kind == Conn::Imp) {
            const Formula& ante = body.kids[0];
            const Formula& cons = body.kids[1];
            // nested implication: forall x (a -> (b -> c))  =>  forall x ((a ^ b) -> c)
            if (ante.kind == Conn::Atom && ante.term.is_var() && cons.kind == Conn::Imp &&
                cons.kids[0].kind == Conn::Atom && is_literal_over(cons.kids[1], v)) {
                seeds_.emplace_back(
                    Formula::forall(v, Formula::imp(Formula::land(ante, cons.kids[0]),
                                                    cons.kids[1])),
                    1);
            }
            // conjunctive-antecedent rule
            std::vector<std::string> antes;
            if (collect_pos_atoms(ante, v, antes) && is_literal_over(cons, v)) {
                uimps_.push_back({std::move(antes), literal_pattern(cons)});
            }
            return;
        }
        if (body.kind == Conn::And && body.kids[0].kind == Conn::Imp &&
            body.kids[1].kind == Conn::Imp) {
            const Formula& i1 = body.kids[0];
            const Formula& i2 = body.kids[1];
            if (i1.kids[0].kind == Conn::Atom && i1.kids[0].term.is_var() &&
                i2.kids[0].kind == Conn::Atom && i2.kids[0].term.is_var() &&
                is_literal_over(i1.kids[1], v) && is_literal_over(i2.kids[1], v)) {
                UPair pr;
                pr.a1 = i1.kids[0].pred.name;
                pr.c1 = literal_pattern(i1.kids[1]);
                pr.a2 = i2.kids[0].pred.name;
                pr.c2 = literal_pattern(i2.kids[1]);
                upairs_.push_back(pr);
                // transitive chain: (p -> q) ^ (q -> r) gives the ground implication
                if (pr.c1.positive && pr.c1.pred == pr.a2) {
                    for (const auto& c : constants_) {
                        seeds_.emplace_back(
                            Formula::imp(Formula::atom(pr.a1, Term::constant(c)),
                                         lit_formula(pr.c2, c)),
                            1);
                    }
                }
                // shared antecedent: (p -> q) ^ (p -> r) gives forall x (p -> (q ^ r))
                if (pr.a1 == pr.a2 && pr.c1.positive && pr.c2.positive) {
                    seeds_.emplace_back(
                        Formula::forall(
                            v, Formula::imp(Formula::atom(pr.a1, Term::variable(v)),
                                            Formula::land(Formula::atom(pr.c1.pred, Term::variable(v)),
                                                          Formula::atom(pr.c2.pred, Term::variable(v))))),
                        1);
                }
            }
            return;
        }
    }

    static bool collect_pos_atoms(const Formula& f, const std::string& var,
                                  std::vector<std::string>& out) {
        if (f.kind == Conn::And)
            return collect_pos_atoms(f.kids[0], var, out) && collect_pos_atoms(f.kids[1], var, out);
        if (f.kind == Conn::Atom && f.term.is_var() && f.term.name == var) {
            out.push_back(f.pred.name);
            return true;
        }
        return false;
    }

    bool offer(const Formula& f, int d) {
        if (d > max_depth_) return false;
        std::string key = key_of(f);
        auto it = items_.find(key);
        if (it != items_.end() && it->second <= d) return false;
        items_[key] = d;
        return true;
    }

    std::optional<int> lit_depth(const Literal& l, const std::string& c) const {
        auto it = items_.find(key_of(lit_formula(l, c)));
        if (it == items_.end()) return std::nullopt;
        return it->second;
    }
    std::optional<int> disj_depth(const Formula& a, const Formula& b) const {
        auto it = items_.find(key_of(Formula::lor(a, b)));
        auto jt = items_.find(key_of(Formula::lor(b, a)));
        std::optional<int> best;
        if (it != items_.end()) best = it->second;
        if (jt != items_.end() && (!best || jt->second < *best)) best = jt->second;
        return best;
    }

    void close() {
        for (const auto& [f, d] : seeds_) offer(f, d);
        // UI over every known constant
        for (const auto& ul : ulits_)
            for (const auto& c : constants_) offer(lit_formula(ul, c), 1);

        bool changed = true;
        while (changed) {
            changed = false;
            for (const auto& c : constants_) {
                for (const auto& r : uimps_) {
                    // forward firing
                    int longest = 0;
                    bool ok = true;
                    for (const auto& p : r.ante) {
                        auto d = lit_depth(Literal{true, p, ""}, c);
                        if (!d) {
                            ok = false;
                            break;
                        }
                        longest = std::max(longest, *d);
                    }
                    if (ok) changed |= offer(lit_formula(r.head, c), longest + 1);
                    // contrapositive, single-antecedent rules only
                    if (r.ante.size() == 1) {
                        auto d = lit_depth(negated(r.head), c);
                        if (d) changed |= offer(lit_formula(Literal{false, r.ante[0], ""}, c), *d + 1);
                    }
                }
                for (const auto& u : udisjs_) {
                    auto d1 = lit_depth(negated(u.l1), c);
                    if (d1) changed |= offer(lit_formula(u.l2, c), *d1 + 1);
                    auto d2 = lit_depth(negated(u.l2), c);
                    if (d2) changed |= offer(lit_formula(u.l1, c), *d2 + 1);
                }
                for (const auto& pr : upairs_) {
                    Formula a1 = Formula::atom(pr.a1, Term::constant(c));
                    Formula a2 = Formula::atom(pr.a2, Term::constant(c));
                    Formula c1 = lit_formula(pr.c1, c);
                    Formula c2 = lit_formula(pr.c2, c);
                    // constructive dilemma
                    if (auto d = disj_depth(a1, a2))
                        changed |= offer(Formula::lor(c1, c2), *d + 1);
                    // destructive dilemma
                    if (auto d = disj_depth(neg(c1), neg(c2)))
                        changed |= offer(Formula::lor(neg(a1), neg(a2)), *d + 1);
                    // bidirectional dilemma
                    if (auto d = disj_depth(a1, neg(c2)))
                        changed |= offer(Formula::lor(c1, neg(a2)), *d + 1);
                }
                // disjunction elimination: two single-antecedent rules with one head
                for (const auto& ra : uimps_) {
                    if (ra.ante.size() != 1) continue;
                    for (const auto& rb : uimps_) {
                        if (rb.ante.size() != 1) continue;
                        if (!(ra.head == rb.head) || ra.ante[0] == rb.ante[0]) continue;
                        Formula a = Formula::atom(ra.ante[0], Term::constant(c));
                        Formula b = Formula::atom(rb.ante[0], Term::constant(c));
                        if (auto d = disj_depth(a, b))
                            changed |= offer(lit_formula(ra.head, c), *d + 1);
                    }
                }
            }
        }
    }
};

/// Minimal chained-rule count needed to derive `statement` or, failing that,
/// its negation.  Throws NotDerivable when neither polarity is reachable.
inline int proof_depth(std::span<const Formula> theory, const Formula& statement,
                       int max_depth = 32) {
    std::set<std::string> cs;
    collect_constants(statement, cs);
    DerivationEngine eng(theory, std::vector<std::string>(cs.begin(), cs.end()), max_depth);
    if (auto d = eng.depth_of(statement)) return *d;
    if (auto d = eng.depth_of(neg(statement))) return *d;
    throw NotDerivable("neither the statement nor its negation is derivable: " + print(statement));
}

inline int proof_depth(const std::vector<Formula>& theory, const Formula& statement,
                       int max_depth = 32) {
    return proof_depth(std::span<const Formula>(theory.data(), theory.size()), statement,
                       max_depth);
}

}  // namespace qkprobe::logic
