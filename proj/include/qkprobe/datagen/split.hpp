#pragma once

//! Calibration/evaluation splitting.
//!
//! Samples sharing a dedupe key (same context formula set and statement) or
//! linked as negation counterparts always land on the same side, so the two
//! splits stay disjoint on content.  The calibration side is filled to an
//! exact per-class quota; everything else becomes evaluation.

#include <map>
#include <string>
#include <vector>

#include "qkprobe/common.hpp"
#include "qkprobe/datagen/sample.hpp"

namespace qkprobe::datagen {

namespace detail {

class UnionFind {
public:
    explicit UnionFind(size_t n) : parent_(n) {
        for (size_t i = 0; i < n; ++i) parent_[i] = i;
    }
    size_t find(size_t x) {
        while (parent_[x] != x) {
            parent_[x] = parent_[parent_[x]];
            x = parent_[x];
        }
        return x;
    }
    void unite(size_t a, size_t b) {
        a = find(a);
        b = find(b);
        if (a != b) parent_[b] = a;
    }

private:
    std::vector<size_t> parent_;
};

}  // namespace detail

/// Deterministic split: groups samples into atomic units (shared dedupe key
/// or counterpart link), shuffles unit order by seed, then fills calibration
/// to exactly n_cal/2 per gold class.  Unit internal order is preserved.
inline DatasetSplit split_calibration_eval(const std::vector<LogicSample>& samples, int n_cal,
                                           uint64_t seed) {
    if (n_cal <= 0 || n_cal % 2 != 0) throw ConfigError("n_cal must be positive and even");
    detail::UnionFind uf(samples.size());
    std::map<std::string, size_t> by_key;
    std::map<std::string, size_t> by_id;
    for (size_t i = 0; i < samples.size(); ++i) by_id[samples[i].id] = i;
    for (size_t i = 0; i < samples.size(); ++i) {
        auto [it, fresh] = by_key.emplace(dedupe_key(samples[i]), i);
        if (!fresh) uf.unite(it->second, i);
        if (!samples[i].counterpart_id.empty()) {
            auto jt = by_id.find(samples[i].counterpart_id);
            if (jt != by_id.end()) uf.unite(i, jt->second);
        }
    }

    // units in first-appearance order, members in input order
    std::vector<std::vector<size_t>> units;
    std::map<size_t, size_t> root_to_unit;
    for (size_t i = 0; i < samples.size(); ++i) {
        size_t root = uf.find(i);
        auto [it, fresh] = root_to_unit.emplace(root, units.size());
        if (fresh) units.emplace_back();
        units[it->second].push_back(i);
    }

    Rng rng(seed);
    rng.shuffle(units);

    int need[2] = {n_cal / 2, n_cal / 2};
    DatasetSplit split;
    std::vector<const std::vector<size_t>*> rest;
    for (const auto& unit : units) {
        int want[2] = {0, 0};
        for (size_t i : unit) ++want[samples[i].gold];
        if (want[0] <= need[0] && want[1] <= need[1] && (need[0] > 0 || need[1] > 0)) {
            for (size_t i : unit) split.calibration.push_back(samples[i]);
            need[0] -= want[0];
            need[1] -= want[1];
        } else {
            rest.push_back(&unit);
        }
    }
    if (need[0] != 0 || need[1] != 0)
        throw InsufficientSamples("cannot fill calibration quota: still need " +
                                  std::to_string(need[0]) + " of class a0 and " +
                                  std::to_string(need[1]) + " of class a1");
    for (const auto* unit : rest)
        for (size_t i : *unit) split.evaluation.push_back(samples[i]);
    return split;
}

}  // namespace qkprobe::datagen
