#pragma once

//! Finite-domain semantic entailment.
//!
//! Models range over a domain {0, ..., domain_size-1}.  Constants are pinned
//! to distinct domain elements in sorted-name order (unique names); a model
//! is then exactly one truth assignment to the ground atoms (predicate,
//! element).  `entails` enumerates every assignment and reports whether the
//! query holds in all / none / some of the theory's models.  An atom budget
//! guards the enumeration; realistic generator contexts exceed it, so
//! `entails_fast` decides the same question with a small DPLL over the
//! grounded theory.  The two routes are equivalence-tested against each
//! other and callers at scale use the fast one.

#include <cstdint>
#include <cstdlib>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "qkprobe/logic/formula.hpp"

namespace qkprobe::logic {

enum class Verdict { Entailed, NotEntailed, Undetermined };

inline std::string verdict_name(Verdict v) {
    switch (v) {
        case Verdict::Entailed: return "Entailed";
        case Verdict::NotEntailed: return "NotEntailed";
        case Verdict::Undetermined: return "Undetermined";
    }
    return "?";
}

namespace detail {

struct GroundContext {
    std::vector<std::string> preds;            // index -> name
    std::map<std::string, int> pred_index;
    std::vector<std::string> consts;           // sorted; index -> pinned element
    std::map<std::string, int> const_elem;
    int domain = 1;

    int atom_id(int pred, int elem) const { return pred * domain + elem; }
    int n_atoms() const { return static_cast<int>(preds.size()) * domain; }
};

inline GroundContext make_ground_context(std::span<const Formula> theory, const Formula& query,
                                         int domain_size) {
    if (domain_size < 1 || domain_size > 6)
        throw DomainTooLarge("domain_size must be in [1, 6], got " + std::to_string(domain_size));
    std::set<std::string> preds, consts;
    auto collect_arity = [](const Formula& f, auto&& self) -> void {
        if (f.kind == Conn::Atom && f.pred.arity != 1)
            throw ArityError("non-unary predicate in theory/query: " + f.pred.name);
        for (const auto& k : f.kids) self(k, self);
    };
    for (const auto& f : theory) {
        collect_arity(f, collect_arity);
        collect_predicates(f, preds);
        collect_constants(f, consts);
    }
    collect_arity(query, collect_arity);
    collect_predicates(query, preds);
    collect_constants(query, consts);

    GroundContext ctx;
    ctx.domain = domain_size;
    for (const auto& p : preds) {
        ctx.pred_index[p] = static_cast<int>(ctx.preds.size());
        ctx.preds.push_back(p);
    }
    if (static_cast<int>(consts.size()) > domain_size)
        throw DomainTooLarge("theory mentions " + std::to_string(consts.size()) +
                             " constants but domain has only " + std::to_string(domain_size) +
                             " elements");
    for (const auto& c : consts) {
        ctx.const_elem[c] = static_cast<int>(ctx.consts.size());
        ctx.consts.push_back(c);
    }
    return ctx;
}

// Compiled formula: term references resolved to pinned elements / variable
// slots so the enumeration loop never touches strings.
struct Compiled {
    Conn kind;
    int pred = -1;
    int elem = -1;   // >= 0: pinned constant element; -1: variable slot
    int var_slot = -1;
    std::vector<Compiled> kids;
};

inline Compiled compile(const Formula& f, const GroundContext& ctx,
                        std::vector<std::string>& var_stack) {
    Compiled c;
    c.kind = f.kind;
    switch (f.kind) {
        case Conn::Atom: {
            c.pred = ctx.pred_index.at(f.pred.name);
            if (f.term.is_var()) {
                for (int i = static_cast<int>(var_stack.size()) - 1; i >= 0; --i) {
                    if (var_stack[i] == f.term.name) {
                        c.var_slot = i;
                        break;
                    }
                }
                if (c.var_slot < 0)
                    throw FormatError("free variable in formula: " + f.term.name);
            } else {
                c.elem = ctx.const_elem.at(f.term.name);
            }
            break;
        }
        case Conn::ForAll:
        case Conn::Exists:
            var_stack.push_back(f.var);
            c.kids.push_back(compile(f.kids[0], ctx, var_stack));
            var_stack.pop_back();
            break;
        default:
            for (const auto& k : f.kids) c.kids.push_back(compile(k, ctx, var_stack));
            break;
    }
    return c;
}

inline bool eval_compiled(const Compiled& c, const GroundContext& ctx, uint64_t assignment,
                          std::vector<int>& env) {
    switch (c.kind) {
        case Conn::Atom: {
            int elem = c.elem >= 0 ? c.elem : env[c.var_slot];
            return (assignment >> ctx.atom_id(c.pred, elem)) & 1ull;
        }
        case Conn::Not:
            return !eval_compiled(c.kids[0], ctx, assignment, env);
        case Conn::And:
            return eval_compiled(c.kids[0], ctx, assignment, env) &&
                   eval_compiled(c.kids[1], ctx, assignment, env);
        case Conn::Or:
            return eval_compiled(c.kids[0], ctx, assignment, env) ||
                   eval_compiled(c.kids[1], ctx, assignment, env);
        case Conn::Imp:
            return !eval_compiled(c.kids[0], ctx, assignment, env) ||
                   eval_compiled(c.kids[1], ctx, assignment, env);
        case Conn::ForAll: {
            env.push_back(0);
            for (int e = 0; e < ctx.domain; ++e) {
                env.back() = e;
                if (!eval_compiled(c.kids[0], ctx, assignment, env)) {
                    env.pop_back();
                    return false;
                }
            }
            env.pop_back();
            return true;
        }
        case Conn::Exists: {
            env.push_back(0);
            for (int e = 0; e < ctx.domain; ++e) {
                env.back() = e;
                if (eval_compiled(c.kids[0], ctx, assignment, env)) {
                    env.pop_back();
                    return true;
                }
            }
            env.pop_back();
            return false;
        }
    }
    return false;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Exhaustive enumeration
// ---------------------------------------------------------------------------

inline Verdict entails(std::span<const Formula> theory, const Formula& query, int domain_size,
                       uint64_t atom_budget = (1ull << 24)) {
    detail::GroundContext ctx = detail::make_ground_context(theory, query, domain_size);
    int n = ctx.n_atoms();
    if (n >= 63 || (1ull << n) > atom_budget)
        throw DomainTooLarge("enumeration of 2^" + std::to_string(n) +
                             " assignments exceeds the atom budget");

    std::vector<std::string> vs;
    std::vector<detail::Compiled> cth;
    cth.reserve(theory.size());
    for (const auto& f : theory) cth.push_back(detail::compile(f, ctx, vs));
    detail::Compiled cq = detail::compile(query, ctx, vs);

    bool any_model = false, all_true = true, all_false = true;
    std::vector<int> env;
    const uint64_t total = 1ull << n;
    for (uint64_t a = 0; a < total; ++a) {
        bool sat = true;
        for (const auto& c : cth) {
            if (!detail::eval_compiled(c, ctx, a, env)) {
                sat = false;
                break;
            }
        }
        if (!sat) continue;
        any_model = true;
        bool q = detail::eval_compiled(cq, ctx, a, env);
        all_true = all_true && q;
        all_false = all_false && !q;
        if (!all_true && !all_false) return Verdict::Undetermined;
    }
    if (!any_model) return Verdict::Entailed;  // inconsistent theory entails everything
    if (all_true) return Verdict::Entailed;
    return Verdict::NotEntailed;
}

inline Verdict entails(const std::vector<Formula>& theory, const Formula& query, int domain_size,
                       uint64_t atom_budget = (1ull << 24)) {
    return entails(std::span<const Formula>(theory.data(), theory.size()), query, domain_size,
                   atom_budget);
}

// ---------------------------------------------------------------------------
// DPLL fast path
// ---------------------------------------------------------------------------

namespace detail {

// Grounded propositional tree, negation-normal after push_neg.
struct Prop {
    enum class Kind { Var, NVar, And, Or } kind;
    int var = -1;
    std::vector<Prop> kids;
};

inline Prop ground_formula(const Compiled& c, const GroundContext& ctx, std::vector<int>& env,
                           bool negated) {
    Prop p;
    switch (c.kind) {
        case Conn::Atom: {
            int elem = c.elem >= 0 ? c.elem : env[c.var_slot];
            p.kind = negated ? Prop::Kind::NVar : Prop::Kind::Var;
            p.var = ctx.atom_id(c.pred, elem);
            return p;
        }
        case Conn::Not:
            return ground_formula(c.kids[0], ctx, env, !negated);
        case Conn::And:
        case Conn::Or: {
            bool conj = (c.kind == Conn::And) != negated;
            p.kind = conj ? Prop::Kind::And : Prop::Kind::Or;
            p.kids.push_back(ground_formula(c.kids[0], ctx, env, negated));
            p.kids.push_back(ground_formula(c.kids[1], ctx, env, negated));
            return p;
        }
        case Conn::Imp: {
            // a -> b  ==  !a or b
            p.kind = negated ? Prop::Kind::And : Prop::Kind::Or;
            p.kids.push_back(ground_formula(c.kids[0], ctx, env, !negated));
            p.kids.push_back(ground_formula(c.kids[1], ctx, env, negated));
            return p;
        }
        case Conn::ForAll:
        case Conn::Exists: {
            bool conj = (c.kind == Conn::ForAll) != negated;
            p.kind = conj ? Prop::Kind::And : Prop::Kind::Or;
            env.push_back(0);
            for (int e = 0; e < ctx.domain; ++e) {
                env.back() = e;
                p.kids.push_back(ground_formula(c.kids[0], ctx, env, negated));
            }
            env.pop_back();
            return p;
        }
    }
    throw FormatError("unreachable ground node");
}

// CNF by distribution. Clause literals: +(v+1) / -(v+1).
using Clause = std::vector<int>;

inline void to_cnf(const Prop& p, std::vector<Clause>& out, size_t clause_cap) {
    switch (p.kind) {
        case Prop::Kind::Var:
            out.push_back({p.var + 1});
            return;
        case Prop::Kind::NVar:
            out.push_back({-(p.var + 1)});
            return;
        case Prop::Kind::And:
            for (const auto& k : p.kids) to_cnf(k, out, clause_cap);
            return;
        case Prop::Kind::Or: {
            std::vector<Clause> acc = {{}};
            for (const auto& k : p.kids) {
                std::vector<Clause> sub;
                to_cnf(k, sub, clause_cap);
                std::vector<Clause> next;
                next.reserve(acc.size() * sub.size());
                for (const auto& a : acc)
                    for (const auto& s : sub) {
                        Clause c = a;
                        c.insert(c.end(), s.begin(), s.end());
                        next.push_back(std::move(c));
                    }
                acc = std::move(next);
                if (acc.size() > clause_cap)
                    throw DomainTooLarge("CNF grounding exceeded the clause budget");
            }
            for (auto& c : acc) out.push_back(std::move(c));
            return;
        }
    }
}

inline bool dpll(std::vector<Clause> clauses, std::vector<int8_t> assign) {
    // unit propagation to fixpoint
    bool changed = true;
    while (changed) {
        changed = false;
        for (const auto& c : clauses) {
            int unassigned = 0, last_lit = 0;
            bool satisfied = false;
            for (int lit : c) {
                int v = std::abs(lit) - 1;
                int8_t a = assign[v];
                if (a == 0) {
                    ++unassigned;
                    last_lit = lit;
                } else if ((a > 0) == (lit > 0)) {
                    satisfied = true;
                    break;
                }
            }
            if (satisfied) continue;
            if (unassigned == 0) return false;  // conflict
            if (unassigned == 1) {
                assign[std::abs(last_lit) - 1] = last_lit > 0 ? 1 : -1;
                changed = true;
            }
        }
    }
    // pick a branching variable from the first unsatisfied clause
    for (const auto& c : clauses) {
        bool satisfied = false;
        int branch = 0;
        for (int lit : c) {
            int v = std::abs(lit) - 1;
            if (assign[v] == 0) {
                if (!branch) branch = lit;
            } else if ((assign[v] > 0) == (lit > 0)) {
                satisfied = true;
                break;
            }
        }
        if (satisfied) continue;
        if (!branch) return false;
        std::vector<int8_t> left = assign;
        left[std::abs(branch) - 1] = branch > 0 ? 1 : -1;
        if (dpll(clauses, std::move(left))) return true;
        assign[std::abs(branch) - 1] = branch > 0 ? -1 : 1;
        return dpll(std::move(clauses), std::move(assign));
    }
    return true;  // all clauses satisfied
}

inline bool satisfiable(const std::vector<Clause>& clauses, int n_vars) {
    return dpll(clauses, std::vector<int8_t>(static_cast<size_t>(n_vars), 0));
}

}  // namespace detail

inline Verdict entails_fast(std::span<const Formula> theory, const Formula& query,
                            int domain_size) {
    detail::GroundContext ctx = detail::make_ground_context(theory, query, domain_size);
    constexpr size_t kClauseCap = 200000;

    std::vector<std::string> vs;
    std::vector<int> env;
    std::vector<detail::Clause> base;
    for (const auto& f : theory) {
        detail::Compiled c = detail::compile(f, ctx, vs);
        detail::Prop p = detail::ground_formula(c, ctx, env, false);
        detail::to_cnf(p, base, kClauseCap);
    }
    detail::Compiled cq = detail::compile(query, ctx, vs);
    std::vector<detail::Clause> with_negq = base;
    detail::to_cnf(detail::ground_formula(cq, ctx, env, true), with_negq, kClauseCap);
    std::vector<detail::Clause> with_q = base;
    detail::to_cnf(detail::ground_formula(cq, ctx, env, false), with_q, kClauseCap);

    int n = ctx.n_atoms();
    if (!detail::satisfiable(base, n)) return Verdict::Entailed;
    bool sat_negq = detail::satisfiable(with_negq, n);
    if (!sat_negq) return Verdict::Entailed;
    bool sat_q = detail::satisfiable(with_q, n);
    if (!sat_q) return Verdict::NotEntailed;
    return Verdict::Undetermined;
}

inline Verdict entails_fast(const std::vector<Formula>& theory, const Formula& query,
                            int domain_size) {
    return entails_fast(std::span<const Formula>(theory.data(), theory.size()), query,
                        domain_size);
}

}  // namespace qkprobe::logic
