#pragma once

//! The thirteen first-order inference rules and schema application.
//!
//! Each rule is stored as a premise/conclusion schema written in the same
//! canonical prefix form the rest of the engine uses.  Schema predicates
//! p, q, r, s are placeholders; matching binds them to concrete predicate
//! names (injectively - p and q may never alias), the schema variable binds
//! to the actual quantified variable, and the schema constant binds to the
//! actual constant.  Unification proceeds left to right over the premise
//! list and takes the first consistent binding.

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qkprobe/logic/formula.hpp"

namespace qkprobe::logic {

enum class InferenceRule { MP, MT, HS, DS, CD, DD, BD, CT, DMT, CO, IM, EG, UI };

inline const std::vector<std::pair<InferenceRule, std::string>>& rule_names() {
    static const std::vector<std::pair<InferenceRule, std::string>> names = {
        {InferenceRule::MP, "MP"},   {InferenceRule::MT, "MT"}, {InferenceRule::HS, "HS"},
        {InferenceRule::DS, "DS"},   {InferenceRule::CD, "CD"}, {InferenceRule::DD, "DD"},
        {InferenceRule::BD, "BD"},   {InferenceRule::CT, "CT"}, {InferenceRule::DMT, "DMT"},
        {InferenceRule::CO, "CO"},   {InferenceRule::IM, "IM"}, {InferenceRule::EG, "EG"},
        {InferenceRule::UI, "UI"},
    };
    return names;
}

inline std::string rule_name(InferenceRule r) {
    for (const auto& [rule, name] : rule_names())
        if (rule == r) return name;
    throw ConfigError("unknown inference rule tag");
}

inline InferenceRule rule_from_name(const std::string& name) {
    for (const auto& [rule, n] : rule_names())
        if (n == name) return rule;
    throw ConfigError("unknown inference rule name: " + name);
}

struct RuleSchema {
    InferenceRule tag;
    std::vector<Formula> premises;
    Formula conclusion;
};

inline const std::vector<RuleSchema>& rule_schemas() {
    static const std::vector<RuleSchema> schemas = [] {
        auto mk = [](InferenceRule tag, std::vector<std::string> prem, std::string concl) {
            RuleSchema s;
            s.tag = tag;
            for (const auto& p : prem) s.premises.push_back(parse(p));
            s.conclusion = parse(concl);
            return s;
        };
        std::vector<RuleSchema> v;
        v.push_back(mk(InferenceRule::MP,
                       {"forall x (imp (atom p x) (atom q x))", "(atom p a)"},
                       "(atom q a)"));
        v.push_back(mk(InferenceRule::MT,
                       {"forall x (imp (atom p x) (atom q x))", "(not (atom q a))"},
                       "(not (atom p a))"));
        v.push_back(mk(InferenceRule::HS,
                       {"forall x (and (imp (atom p x) (atom q x)) (imp (atom q x) (atom r x)))"},
                       "(imp (atom p a) (atom r a))"));
        v.push_back(mk(InferenceRule::DS,
                       {"forall x (or (atom p x) (atom q x))", "(not (atom p a))"},
                       "(atom q a)"));
        v.push_back(mk(InferenceRule::CD,
                       {"forall x (and (imp (atom p x) (atom q x)) (imp (atom r x) (atom s x)))",
                        "(or (atom p a) (atom r a))"},
                       "(or (atom q a) (atom s a))"));
        v.push_back(mk(InferenceRule::DD,
                       {"forall x (and (imp (atom p x) (atom q x)) (imp (atom r x) (atom s x)))",
                        "(or (not (atom q a)) (not (atom s a)))"},
                       "(or (not (atom p a)) (not (atom r a)))"));
        v.push_back(mk(InferenceRule::BD,
                       {"forall x (and (imp (atom p x) (atom q x)) (imp (atom r x) (atom s x)))",
                        "(or (atom p a) (not (atom s a)))"},
                       "(or (atom q a) (not (atom r a)))"));
        v.push_back(mk(InferenceRule::CT,
                       {"forall x (or (atom p x) (atom q x))"},
                       "forall x (or (atom q x) (atom p x))"));
        v.push_back(mk(InferenceRule::DMT,
                       {"(not (forall x (and (atom p x) (atom q x))))"},
                       "exists x (or (not (atom p x)) (not (atom q x)))"));
        v.push_back(mk(InferenceRule::CO,
                       {"forall x (and (imp (atom p x) (atom q x)) (imp (atom p x) (atom r x)))"},
                       "forall x (imp (atom p x) (and (atom q x) (atom r x)))"));
        v.push_back(mk(InferenceRule::IM,
                       {"forall x (imp (atom p x) (imp (atom q x) (atom r x)))"},
                       "forall x (imp (and (atom p x) (atom q x)) (atom r x))"));
        v.push_back(mk(InferenceRule::EG, {"(atom p a)"}, "exists x (atom p x)"));
        v.push_back(mk(InferenceRule::UI, {"forall x (atom p x)"}, "(atom p a)"));
        return v;
    }();
    return schemas;
}

inline const RuleSchema& schema_for(InferenceRule r) {
    for (const auto& s : rule_schemas())
        if (s.tag == r) return s;
    throw ConfigError("no schema for rule");
}

// ---------------------------------------------------------------------------
// Schema matching
// ---------------------------------------------------------------------------

namespace detail {

struct Bindings {
    std::map<std::string, std::string> pred;      // placeholder -> actual
    std::map<std::string, std::string> pred_rev;  // actual -> placeholder (injectivity)
    std::map<std::string, std::string> var;
    std::optional<std::string> constant;

    bool bind_pred(const std::string& ph, const std::string& actual) {
        auto it = pred.find(ph);
        if (it != pred.end()) return it->second == actual;
        auto rit = pred_rev.find(actual);
        if (rit != pred_rev.end()) return false;  // aliasing: two placeholders, one predicate
        pred[ph] = actual;
        pred_rev[actual] = ph;
        return true;
    }
    bool bind_var(const std::string& ph, const std::string& actual) {
        auto it = var.find(ph);
        if (it != var.end()) return it->second == actual;
        var[ph] = actual;
        return true;
    }
    bool bind_const(const std::string& actual) {
        if (constant) return *constant == actual;
        constant = actual;
        return true;
    }
};

inline bool match_schema(const Formula& schema, const Formula& actual, Bindings& b) {
    if (schema.kind != actual.kind) return false;
    switch (schema.kind) {
        case Conn::Atom: {
            if (actual.pred.arity != 1)
                throw ArityError("non-unary predicate in rule application: " + actual.pred.name);
            if (!b.bind_pred(schema.pred.name, actual.pred.name)) return false;
            if (schema.term.is_var()) {
                if (!actual.term.is_var()) return false;
                return b.bind_var(schema.term.name, actual.term.name);
            }
            if (actual.term.is_var()) return false;
            return b.bind_const(actual.term.name);
        }
        case Conn::ForAll:
        case Conn::Exists:
            if (!b.bind_var(schema.var, actual.var)) return false;
            return match_schema(schema.kids[0], actual.kids[0], b);
        default:
            for (size_t i = 0; i < schema.kids.size(); ++i)
                if (!match_schema(schema.kids[i], actual.kids[i], b)) return false;
            return true;
    }
}

inline Formula instantiate(const Formula& schema, const Bindings& b, const Term& fallback_const) {
    switch (schema.kind) {
        case Conn::Atom: {
            auto it = b.pred.find(schema.pred.name);
            if (it == b.pred.end())
                throw SchemaMismatch("conclusion predicate unbound: " + schema.pred.name);
            Term t;
            if (schema.term.is_var()) {
                auto vit = b.var.find(schema.term.name);
                // EG introduces a fresh quantified variable; keep the schema name.
                t = Term::variable(vit != b.var.end() ? vit->second : schema.term.name);
            } else {
                t = b.constant ? Term::constant(*b.constant) : fallback_const;
            }
            return Formula::atom(it->second, t);
        }
        case Conn::Not:
            return Formula::lnot(instantiate(schema.kids[0], b, fallback_const));
        case Conn::And:
            return Formula::land(instantiate(schema.kids[0], b, fallback_const),
                                 instantiate(schema.kids[1], b, fallback_const));
        case Conn::Or:
            return Formula::lor(instantiate(schema.kids[0], b, fallback_const),
                                instantiate(schema.kids[1], b, fallback_const));
        case Conn::Imp:
            return Formula::imp(instantiate(schema.kids[0], b, fallback_const),
                                instantiate(schema.kids[1], b, fallback_const));
        case Conn::ForAll:
        case Conn::Exists: {
            auto vit = b.var.find(schema.var);
            std::string v = vit != b.var.end() ? vit->second : schema.var;
            Formula body = instantiate(schema.kids[0], b, fallback_const);
            return schema.kind == Conn::ForAll ? Formula::forall(v, std::move(body))
                                               : Formula::exists(v, std::move(body));
        }
    }
    throw SchemaMismatch("unreachable schema node");
}

}  // namespace detail

/// Applies `rule` to `premises` and returns the instantiated conclusion.
/// `constant` supplies the target constant for rules whose conclusion
/// mentions a constant that no premise binds (UI, HS).
inline Formula apply_rule(InferenceRule rule, std::span<const Formula> premises,
                          const Term& constant = Term::constant("a")) {
    const RuleSchema& schema = schema_for(rule);
    if (premises.size() != schema.premises.size())
        throw SchemaMismatch(rule_name(rule) + ": expected " + std::to_string(schema.premises.size()) +
                             " premises, got " + std::to_string(premises.size()));
    detail::Bindings b;
    for (size_t i = 0; i < premises.size(); ++i) {
        if (!detail::match_schema(schema.premises[i], premises[i], b))
            throw SchemaMismatch(rule_name(rule) + ": premise " + std::to_string(i + 1) +
                                 " does not match schema: " + print(premises[i]));
    }
    if (constant.is_var()) throw SchemaMismatch("supplied rule constant must not be a variable");
    return detail::instantiate(schema.conclusion, b, constant);
}

inline Formula apply_rule(InferenceRule rule, const std::vector<Formula>& premises,
                          const Term& constant = Term::constant("a")) {
    return apply_rule(rule, std::span<const Formula>(premises.data(), premises.size()), constant);
}

// ---------------------------------------------------------------------------
// Derivation traces
// ---------------------------------------------------------------------------

// One recorded proof step.  `rule` is a free-form label ("MP", "AndIntro",
// ...); premise indices < theory size refer to theory members, larger ones
// to earlier steps (theory size + step index).
struct DerivationStep {
    std::string rule;
    std::vector<int> premise_indices;
    Formula derived;
};

struct DerivationTrace {
    std::vector<DerivationStep> steps;
    int depth = 0;  // chained depth: longest premise chain ending in the final step
};

// Validates index bounds and that the recorded depth equals the chained
// depth of the final step (theory members count as depth 0).
inline bool validate_trace(size_t theory_size, const DerivationTrace& trace) {
    if (trace.steps.empty()) return trace.depth == 0;
    std::vector<int> depth(trace.steps.size(), 0);
    for (size_t i = 0; i < trace.steps.size(); ++i) {
        int longest = 0;
        for (int idx : trace.steps[i].premise_indices) {
            if (idx < 0 || static_cast<size_t>(idx) >= theory_size + i) return false;
            if (static_cast<size_t>(idx) >= theory_size)
                longest = std::max(longest, depth[idx - static_cast<int>(theory_size)]);
        }
        depth[i] = longest + 1;
    }
    return depth.back() == trace.depth;
}

}  // namespace qkprobe::logic
