#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "mlcop/stats.hpp"

namespace mlcop {

/// Component labels of a subset mask: 0-based lags in the serial case,
/// 1-based column indices otherwise.
inline std::vector<int> mask_labels(std::uint32_t mask, bool serial) {
    std::vector<int> out;
    for (int j = 0; j < 32; ++j) {
        if (mask & (1u << j)) out.push_back(serial ? j : j + 1);
    }
    return out;
}

/// Stable JSON form of a test report:
/// {"serial":...,"n":...,"d":...,"pmax":...,"family":[...],
///  "subsets":[{"lags_or_cols":[...],"gamma":...,"r":...,"sqrt_n_r":...}],
///  "wald":{"stat":...,"df":...,"pvalue":...},
///  "fisher":{"stat":...,"df":...,"pvalue":...}, "s2":[...]}
inline nlohmann::ordered_json report_to_json(const test_report& rep) {
    nlohmann::ordered_json j;
    j["serial"] = rep.serial;
    j["n"] = rep.n;
    j["d"] = rep.d;
    j["pmax"] = rep.pmax;
    nlohmann::ordered_json fams = nlohmann::ordered_json::array();
    for (const score_family f : rep.families) fams.push_back(std::string(to_token(f)));
    j["family"] = std::move(fams);
    nlohmann::ordered_json subsets = nlohmann::ordered_json::array();
    for (std::size_t k = 0; k < rep.subsets.masks.size(); ++k) {
        nlohmann::ordered_json s;
        s["lags_or_cols"] = mask_labels(rep.subsets.masks[k], rep.serial);
        s["gamma"] = rep.gamma[k];
        s["r"] = rep.r[k];
        s["sqrt_n_r"] = rep.sqrt_n_r[k];
        subsets.push_back(std::move(s));
    }
    j["subsets"] = std::move(subsets);
    j["wald"] = {{"stat", rep.wald_stat}, {"df", rep.wald_df}, {"pvalue", rep.pvalue_chi2}};
    j["fisher"] = {{"stat", rep.fisher_stat},
                   {"df", rep.fisher_df},
                   {"pvalue", rep.fisher_pvalue},
                   {"clamped", rep.fisher_clamped}};
    j["s2"] = rep.s2_per_column;
    return j;
}

}  // namespace mlcop
