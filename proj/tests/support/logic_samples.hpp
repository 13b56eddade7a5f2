#pragma once

// Shared helpers for randomized logic testing: fresh-name pools, schema
// renaming, and random theory construction.  Used by the unit suite and the
// acceptance runner.

#include <string>
#include <vector>

#include "qkprobe/common.hpp"
#include "qkprobe/logic/formula.hpp"
#include "qkprobe/logic/rules.hpp"

namespace testsupport {

using qkprobe::Rng;
using namespace qkprobe::logic;

// Renames schema placeholders (predicates p/q/r/s, variable x, constant a)
// to a fresh concrete signature, producing a valid rule instance.
struct NamePool {
    std::vector<std::string> preds;  // distinct
    std::string var;
    std::string cst;
};

inline NamePool random_names(Rng& rng) {
    static const std::vector<std::string> pred_pool = {
        "blue", "calm", "deep", "fast", "grim", "huge", "icy",  "keen",
        "loud", "mild", "neat", "odd",  "pale", "raw",  "slow", "tame"};
    static const std::vector<std::string> var_pool = {"x", "y", "z"};
    static const std::vector<std::string> const_pool = {"alma", "brin", "cato", "dora"};
    NamePool np;
    std::vector<std::string> preds = pred_pool;
    rng.shuffle(preds);
    np.preds.assign(preds.begin(), preds.begin() + 4);
    np.var = var_pool[rng.uniform(var_pool.size())];
    np.cst = const_pool[rng.uniform(const_pool.size())];
    return np;
}

inline Formula rename_schema(const Formula& f, const NamePool& np) {
    Formula out = f;
    switch (out.kind) {
        case Conn::Atom: {
            std::string p = out.pred.name;
            int idx = p == "p" ? 0 : p == "q" ? 1 : p == "r" ? 2 : 3;
            out.pred.name = np.preds[static_cast<size_t>(idx)];
            if (out.term.is_var())
                out.term = Term::variable(np.var);
            else
                out.term = Term::constant(np.cst);
            return out;
        }
        case Conn::ForAll:
        case Conn::Exists:
            out.var = np.var;
            break;
        default:
            break;
    }
    for (auto& k : out.kids) k = rename_schema(k, np);
    return out;
}

struct RuleInstance {
    std::vector<Formula> premises;
    Formula conclusion;
    Term constant;
};

inline RuleInstance random_rule_instance(InferenceRule rule, Rng& rng) {
    NamePool np = random_names(rng);
    // the generalization schema's premise never mentions the bound variable,
    // so application keeps the schema's own name; mirror that here
    if (rule == InferenceRule::EG) np.var = "x";
    const RuleSchema& s = schema_for(rule);
    RuleInstance inst;
    for (const auto& p : s.premises) inst.premises.push_back(rename_schema(p, np));
    inst.conclusion = rename_schema(s.conclusion, np);
    inst.constant = Term::constant(np.cst);
    return inst;
}

// Random positive-Horn theory: ground facts + conjunctive-antecedent rules,
// all positive, over a small signature (exhaustive-oracle friendly).
inline std::vector<Formula> random_horn_theory(Rng& rng, int n_preds = 5, int n_rules = 5) {
    std::vector<std::string> preds;
    for (int i = 0; i < n_preds; ++i) preds.push_back(std::string(1, static_cast<char>('p' + i)));
    std::vector<Formula> theory;
    int n_facts = rng.range(1, 3);
    for (int i = 0; i < n_facts; ++i)
        theory.push_back(Formula::atom(preds[rng.uniform(preds.size())], Term::constant("a")));
    for (int i = 0; i < n_rules; ++i) {
        int n_ante = rng.range(1, 2);
        Formula ante = Formula::atom(preds[rng.uniform(preds.size())], Term::variable("x"));
        for (int j = 1; j < n_ante; ++j)
            ante = Formula::land(ante, Formula::atom(preds[rng.uniform(preds.size())],
                                                     Term::variable("x")));
        Formula head = Formula::atom(preds[rng.uniform(preds.size())], Term::variable("x"));
        theory.push_back(Formula::forall("x", Formula::imp(ante, head)));
    }
    return theory;
}

}  // namespace testsupport
