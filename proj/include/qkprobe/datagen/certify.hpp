#pragma once

//! Sample certification against the logic oracles.
//!
//! A sample is certified when the semantic verdict on its statement matches
//! the recorded gold answer (a0 iff entailed, a1 iff refuted; an undetermined
//! statement always fails) and the recomputed minimal derivation depth equals
//! the recorded depth.  Generators certify at emit time; the test suite and
//! dataset consumers re-run the same checks independently.

#include <algorithm>
#include <set>
#include <string>
#include <vector>

#include "qkprobe/datagen/sample.hpp"
#include "qkprobe/logic/derivation.hpp"
#include "qkprobe/logic/semantics.hpp"

namespace qkprobe::datagen {

struct CertResult {
    bool ok = true;
    std::string reason;
};

/// Domain size 0 means auto: at least three elements, grown to fit however
/// many named individuals the sample mentions (they pin to distinct elements).
inline CertResult certify_sample(const LogicSample& s, int domain_size = 0) {
    auto theory = s.context_formulas();
    if (domain_size == 0) {
        std::set<std::string> consts;
        logic::collect_constants(s.statement, consts);
        for (const auto& f : theory) logic::collect_constants(f, consts);
        domain_size = std::max<int>(3, static_cast<int>(consts.size()));
    }
    logic::Verdict v = logic::entails_fast(theory, s.statement, domain_size);
    if (v == logic::Verdict::Undetermined)
        return {false, s.id + ": statement is undetermined, no polarity entailed"};
    int expect_gold = v == logic::Verdict::Entailed ? 0 : 1;
    if (s.gold != expect_gold)
        return {false, s.id + ": gold disagrees with the semantic verdict " +
                           std::string(logic::verdict_name(v))};
    int depth = 0;
    try {
        depth = logic::proof_depth(theory, s.statement);
    } catch (const NotDerivable&) {
        return {false, s.id + ": no derivation found for either polarity"};
    }
    if (depth != s.depth)
        return {false, s.id + ": recomputed depth " + std::to_string(depth) +
                           " != recorded depth " + std::to_string(s.depth)};
    return {};
}

/// First failure wins; empty reason means the whole batch certified.
inline CertResult certify_batch(const std::vector<LogicSample>& samples, int domain_size = 0) {
    for (const auto& s : samples) {
        CertResult r = certify_sample(s, domain_size);
        if (!r.ok) return r;
    }
    return {};
}

}  // namespace qkprobe::datagen
