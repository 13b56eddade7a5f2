#pragma once

//! Fictional-ontology true/false generation.
//!
//! Samples are category chains over pseudoword taxonomies ("Each rompus is a
//! wumpus.") ending in an attribute, with the statement probing the chain's
//! conclusion.  Two rule modes: mp_only emits pure implication chains;
//! composed mixes in conjunction/disjunction introduction and elimination
//! plus contrapositive (proof-by-contradiction) chains.  Every base sample
//! gets a negation counterpart (statement and gold flipped, same context), so
//! positive/negative surface forms and true/false classes stay balanced.

#include <algorithm>
#include <set>
#include <string>
#include <vector>

#include "qkprobe/common.hpp"
#include "qkprobe/datagen/certify.hpp"
#include "qkprobe/datagen/lexicon.hpp"
#include "qkprobe/datagen/sample.hpp"
#include "qkprobe/datagen/split.hpp"
#include "qkprobe/logic/formula.hpp"

namespace qkprobe::datagen {

using logic::Conn;
using logic::Term;

namespace detail {

/// "Polly is a wumpus" / "Polly is not opaque" (no trailing period).
inline std::string subject_clause(const std::string& name, const std::string& pred,
                                  bool positive) {
    std::string out = capitalized(name) + " is ";
    if (!positive) out += "not ";
    if (is_category_name(pred)) out += article_for(pred);
    return out + pred;
}

inline std::string render_literal_clause(const logic::Formula& f) {
    const logic::Formula* a = f.kind == Conn::Not ? &f.kids[0] : &f;
    return subject_clause(a->term.name, a->pred.name, f.kind != Conn::Not);
}

}  // namespace detail

/// Statement surface text for the shapes this family emits: a literal, or a
/// two-literal conjunction/disjunction.
inline std::string render_pronto_statement(const logic::Formula& f) {
    switch (f.kind) {
        case Conn::And:
            return detail::render_literal_clause(f.kids[0]) + " and " +
                   detail::render_literal_clause(f.kids[1]) + ".";
        case Conn::Or:
            return detail::render_literal_clause(f.kids[0]) + " or " +
                   detail::render_literal_clause(f.kids[1]) + ".";
        default:
            return detail::render_literal_clause(f) + ".";
    }
}

inline bool statement_form_positive(const logic::Formula& f) {
    if (f.kind == Conn::And || f.kind == Conn::Or)
        return f.kids[0].kind != Conn::Not && f.kids[1].kind != Conn::Not;
    return f.kind != Conn::Not;
}

/// Same context, negated statement, flipped gold.  Ids cross-link; applying
/// the operation twice reproduces the original sample up to id.
inline LogicSample negation_counterpart(const LogicSample& sample) {
    if (sample.family != "pronto")
        throw ConfigError("negation counterparts are a pronto-family operation");
    LogicSample out = sample;
    out.id = sample.id + "n";
    out.counterpart_id = sample.id;
    out.statement = logic::neg(sample.statement);
    out.statement_text = render_pronto_statement(out.statement);
    out.gold = 1 - sample.gold;
    out.polarity = statement_form_positive(out.statement) ? "positive" : "negative";
    return out;
}

namespace detail {

struct ProntoPools {
    std::vector<std::string> cats;
    std::vector<std::string> attrs;
    size_t next_cat = 0;
    size_t next_attr = 0;

    ProntoPools(int category_count, Rng& rng) {
        cats = category_lexicon(category_count);
        attrs = attribute_lexicon();
        rng.shuffle(cats);
        rng.shuffle(attrs);
    }
    std::string cat() {
        if (next_cat == cats.size())
            throw ExhaustedOntology("sample needs more than " + std::to_string(cats.size()) +
                                    " distinct categories");
        return cats[next_cat++];
    }
    std::string attr() {
        if (next_attr == attrs.size()) throw ExhaustedOntology("attribute pool exhausted");
        return attrs[next_attr++];
    }
};

inline logic::Formula ulit_rule(const std::string& a, const std::string& b, bool positive) {
    using logic::Formula;
    Formula head = Formula::atom(b, Term::variable("x"));
    if (!positive) head = Formula::lnot(head);
    return Formula::forall("x", Formula::imp(Formula::atom(a, Term::variable("x")), head));
}

inline std::string rule_text(const std::string& a, const std::string& b, bool positive,
                             int variant) {
    std::string b_side = (is_category_name(b) ? article_for(b) : "") + b;
    switch (variant % 3) {
        case 0: return "Each " + a + " is " + (positive ? "" : "not ") + b_side + ".";
        case 1: return "Every " + a + " is " + (positive ? "" : "not ") + b_side + ".";
        default: {
            std::string plural_b = is_category_name(b) ? b + "es" : b;
            return capitalized(a) + "es are " + (positive ? "" : "not ") + plural_b + ".";
        }
    }
}

struct Recipe {
    enum class Start { Fact, ConjFact, DisjPair };
    enum class End { Lit, OrIntro, AndIntro };
    Start start = Start::Fact;
    End end = End::Lit;
    int mid = 1;            // implication links in the chain body
    bool mt_chain = false;  // whole chain runs on contrapositives
};

inline Recipe pick_recipe(const std::string& rule_mode, int hops, bool negative_form, Rng& rng) {
    if (rule_mode == "mp_only" || hops == 0) return {Recipe::Start::Fact, Recipe::End::Lit, hops};
    std::vector<Recipe> options;
    if (negative_form) {
        // a negated statement needs a negative-headed final link or a
        // contrapositive cascade
        options.push_back({Recipe::Start::Fact, Recipe::End::Lit, hops});
        if (hops >= 2) options.push_back({Recipe::Start::ConjFact, Recipe::End::Lit, hops - 1});
        if (hops >= 2) options.push_back({Recipe::Start::DisjPair, Recipe::End::Lit, hops - 1});
        options.push_back({Recipe::Start::Fact, Recipe::End::Lit, hops, true});
    } else {
        for (int s = 0; s <= 2; ++s) {
            for (int e = 0; e <= 2; ++e) {
                int extras = (s > 0 ? 1 : 0) + (e > 0 ? 1 : 0);
                int mid = hops - extras;
                if (mid < 0) continue;
                if (s == 0 && e == 0 && mid == 0) continue;  // statement would be a fact
                // conjunct/disjunct starts yield a category literal; a bare
                // literal statement about a category reads fine, but keep at
                // least one link so mp-style and composed chains differ
                options.push_back({static_cast<Recipe::Start>(s), static_cast<Recipe::End>(e),
                                   mid});
            }
        }
    }
    return options[rng.uniform(options.size())];
}

struct BaseDraft {
    std::vector<Premise> premises;
    logic::Formula statement = logic::Formula::atom("x", Term::constant("x"));
    int depth = 0;
    std::set<std::string> tags;
};

inline BaseDraft build_chain(const std::string& subject, int hops, const Recipe& r,
                             bool negative_form, ProntoPools& pools, Rng& rng) {
    using logic::Formula;
    BaseDraft d;
    Term subj = Term::constant(subject);
    auto fact = [&](const std::string& pred, bool positive) {
        Formula f = Formula::atom(pred, subj);
        if (!positive) f = Formula::lnot(f);
        d.premises.push_back({render_literal_clause(f) + ".", f});
        return f;
    };
    auto rule = [&](const std::string& a, const std::string& b, bool positive) {
        d.premises.push_back(
            {rule_text(a, b, positive, static_cast<int>(rng.uniform(3))), ulit_rule(a, b, positive)});
    };

    if (r.mt_chain) {
        // rules c0 -> c1 -> .. -> attr with the attribute refuted: the chain
        // cascades backwards, statement "subject is not a c0"
        std::vector<std::string> cats;
        for (int i = 0; i < r.mid; ++i) cats.push_back(pools.cat());
        std::string attr = pools.attr();
        for (int i = 0; i + 1 < r.mid; ++i) rule(cats[static_cast<size_t>(i)], cats[static_cast<size_t>(i) + 1], true);
        rule(cats[static_cast<size_t>(r.mid) - 1], attr, true);
        fact(attr, false);
        d.statement = Formula::lnot(Formula::atom(cats[0], subj));
        d.depth = hops;
        d.tags = {"MT"};
        return d;
    }

    std::string cur;     // predicate the derivation currently sits on
    int cur_depth = 0;
    switch (r.start) {
        case Recipe::Start::Fact: {
            cur = pools.cat();
            fact(cur, true);
            break;
        }
        case Recipe::Start::ConjFact: {
            cur = pools.cat();
            std::string other = pools.cat();
            Formula f = Formula::land(Formula::atom(cur, subj), Formula::atom(other, subj));
            d.premises.push_back({render_literal_clause(f.kids[0]) + " and " +
                                      render_literal_clause(f.kids[1]) + ".",
                                  f});
            cur_depth = 1;
            break;
        }
        case Recipe::Start::DisjPair: {
            std::string c1 = pools.cat();
            std::string c2 = pools.cat();
            cur = pools.cat();
            Formula f = Formula::lor(Formula::atom(c1, subj), Formula::atom(c2, subj));
            d.premises.push_back({render_literal_clause(f.kids[0]) + " or " +
                                      render_literal_clause(f.kids[1]) + ".",
                                  f});
            rule(c1, cur, true);
            rule(c2, cur, true);
            cur_depth = 1;
            break;
        }
    }

    // chain body: category links, then an attribute at the head
    bool statement_is_attr = r.mid > 0;
    for (int i = 0; i < r.mid; ++i) {
        bool last = i + 1 == r.mid;
        bool positive = !(last && negative_form && r.end == Recipe::End::Lit);
        std::string next = last ? pools.attr() : pools.cat();
        rule(cur, next, positive);
        d.tags.insert("MP");
        cur = next;
        ++cur_depth;
    }

    Formula cur_lit = Formula::atom(cur, subj);
    if (r.mid > 0 && negative_form && r.end == Recipe::End::Lit) cur_lit = Formula::lnot(cur_lit);

    switch (r.end) {
        case Recipe::End::Lit:
            d.statement = cur_lit;
            break;
        case Recipe::End::OrIntro: {
            std::string other = statement_is_attr ? pools.attr() : pools.cat();
            d.statement = Formula::lor(cur_lit, Formula::atom(other, subj));
            ++cur_depth;
            break;
        }
        case Recipe::End::AndIntro: {
            Formula extra = fact(pools.cat(), true);
            d.statement = Formula::land(cur_lit, extra);
            ++cur_depth;
            break;
        }
    }
    d.depth = cur_depth;
    return d;
}

}  // namespace detail

/// Insert k irrelevant premises about ontology branches disjoint from the
/// sample's derivation.  The entailment verdict is untouched; insertion
/// positions are randomized by the seed.
inline LogicSample add_distractors(const LogicSample& sample, int k, uint64_t seed) {
    if (sample.family != "pronto")
        throw ConfigError("distractor insertion is a pronto-family operation");
    if (k < 0) throw ConfigError("distractor count must be nonnegative");
    if (k == 0) return sample;

    std::set<std::string> used;
    logic::collect_predicates(sample.statement, used);
    std::set<std::string> used_consts;
    logic::collect_constants(sample.statement, used_consts);
    for (const auto& p : sample.context) {
        logic::collect_predicates(p.formula, used);
        logic::collect_constants(p.formula, used_consts);
    }

    Rng rng(seed);
    std::vector<std::string> fresh_cats;
    for (const auto& c : category_lexicon(400))
        if (!used.count(c)) fresh_cats.push_back(c);
    std::vector<std::string> fresh_attrs;
    for (const auto& a : attribute_lexicon())
        if (!used.count(a)) fresh_attrs.push_back(a);
    rng.shuffle(fresh_cats);
    rng.shuffle(fresh_attrs);
    std::string other_name;
    for (const auto& n : pet_names()) {
        std::string lower = n;
        lower[0] = static_cast<char>(lower[0] - 'A' + 'a');
        if (!used_consts.count(lower)) {
            other_name = lower;
            break;
        }
    }

    size_t cat_i = 0, attr_i = 0;
    auto next_cat = [&] {
        if (cat_i == fresh_cats.size())
            throw ExhaustedOntology("no disjoint category left for a distractor");
        return fresh_cats[cat_i++];
    };

    LogicSample out = sample;
    using logic::Formula;
    for (int i = 0; i < k; ++i) {
        Premise p;
        switch (rng.uniform(4)) {
            case 0: {  // category rule on a fresh branch
                std::string a = next_cat(), b = next_cat();
                p = {detail::rule_text(a, b, true, static_cast<int>(rng.uniform(3))),
                     detail::ulit_rule(a, b, true)};
                break;
            }
            case 1: {  // attribute rule on a fresh branch
                if (attr_i == fresh_attrs.size())
                    throw ExhaustedOntology("no disjoint attribute left for a distractor");
                std::string a = next_cat(), b = fresh_attrs[attr_i++];
                p = {detail::rule_text(a, b, true, static_cast<int>(rng.uniform(3))),
                     detail::ulit_rule(a, b, true)};
                break;
            }
            case 2: {  // negative attribute rule on a fresh branch
                if (attr_i == fresh_attrs.size())
                    throw ExhaustedOntology("no disjoint attribute left for a distractor");
                std::string a = next_cat(), b = fresh_attrs[attr_i++];
                p = {detail::rule_text(a, b, false, static_cast<int>(rng.uniform(3))),
                     detail::ulit_rule(a, b, false)};
                break;
            }
            default: {  // membership fact about a different subject
                if (other_name.empty())
                    throw ExhaustedOntology("no unused subject name for a distractor fact");
                Formula f = Formula::atom(next_cat(), Term::constant(other_name));
                p = {detail::render_literal_clause(f) + ".", f};
                break;
            }
        }
        size_t pos = rng.uniform(out.context.size() + 1);
        out.context.insert(out.context.begin() + static_cast<long>(pos), std::move(p));
    }
    out.distractors = sample.distractors + k;
    return out;
}

inline DatasetSplit gen_prontoqa(const GenConfig& config) {
    config.validate();
    if (config.family != "pronto") throw ConfigError("gen_prontoqa expects family=pronto");
    if (config.rule_mode == "scheme")
        throw ConfigError("pronto rule_mode must be mp_only or composed");

    int total = config.n_calibration + config.n_evaluation;
    int pairs = total / 2;
    std::vector<LogicSample> samples;
    samples.reserve(static_cast<size_t>(total));

    for (int i = 0; i < pairs; ++i) {
        Rng rng(mix_seed(config.seed, static_cast<uint64_t>(i)));
        detail::ProntoPools pools(config.category_count, rng);
        int hops = rng.range(config.hops_min, config.hops_max);
        bool negative_form = i % 2 == 1;  // alternate base surface form
        detail::Recipe recipe = detail::pick_recipe(config.rule_mode, hops, negative_form, rng);
        std::string subject = pet_names()[rng.uniform(pet_names().size())];
        std::string subject_const = subject;
        subject_const[0] = static_cast<char>(subject_const[0] - 'A' + 'a');

        detail::BaseDraft draft =
            detail::build_chain(subject_const, hops, recipe, negative_form, pools, rng);
        rng.shuffle(draft.premises);

        LogicSample base;
        char idbuf[32];
        std::snprintf(idbuf, sizeof(idbuf), "pronto-%06d", i);
        base.id = idbuf;
        base.family = "pronto";
        base.depth = draft.depth;
        base.polarity = statement_form_positive(draft.statement) ? "positive" : "negative";
        base.gold = 0;  // base statements are entailed; counterparts cover gold=a1
        base.context = std::move(draft.premises);
        base.statement = draft.statement;
        base.statement_text = render_pronto_statement(draft.statement);
        base.rule_tags.assign(draft.tags.begin(), draft.tags.end());

        int n_distract = rng.range(config.distractors_min, config.distractors_max);
        if (n_distract > 0) base = add_distractors(base, n_distract, rng.next_u64());

        LogicSample twin = negation_counterpart(base);
        base.counterpart_id = twin.id;

        CertResult cr = certify_sample(base);
        if (!cr.ok) throw ConfigError("generator produced an uncertifiable sample: " + cr.reason);
        cr = certify_sample(twin);
        if (!cr.ok)
            throw ConfigError("generator produced an uncertifiable counterpart: " + cr.reason);

        samples.push_back(std::move(base));
        samples.push_back(std::move(twin));
    }

    DatasetSplit split = split_calibration_eval(samples, config.n_calibration, config.seed);
    split.config = config;
    return split;
}

}  // namespace qkprobe::datagen
