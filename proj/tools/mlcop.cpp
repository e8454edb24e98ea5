// mlcop: copula-based tests of independence and randomness for arbitrary
// (possibly tied) data, plus the Monte Carlo power-study harness.

#include <bit>
#include <charconv>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mlcop/mlcop.hpp"

namespace {

using nlohmann::ordered_json;

constexpr int exit_input_error = 2;
constexpr int exit_degenerate = 3;

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

bool parse_number(const std::string& field, double& out) {
    const std::string t = trim(field);
    if (t.empty()) return false;
    const char* begin = t.data();
    const char* end = t.data() + t.size();
    const auto res = std::from_chars(begin, end, out);
    return res.ec == std::errc{} && res.ptr == end;
}

struct csv_data {
    std::vector<std::string> header;  // empty when the file has none
    std::vector<std::vector<double>> columns;
    std::size_t rows = 0;
};

csv_data read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open file '" + path + "'");
    csv_data data;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        const std::vector<std::string> fields = split(line, ',');
        if (first) {
            // Header auto-detection: a non-numeric first row is a header.
            bool numeric = true;
            double v;
            for (const auto& f : fields) {
                if (!parse_number(f, v)) {
                    numeric = false;
                    break;
                }
            }
            data.columns.resize(fields.size());
            if (!numeric) {
                for (const auto& f : fields) data.header.push_back(trim(f));
                first = false;
                continue;
            }
            first = false;
        }
        if (fields.size() != data.columns.size()) {
            throw std::invalid_argument("ragged CSV row with " +
                                        std::to_string(fields.size()) + " fields, expected " +
                                        std::to_string(data.columns.size()));
        }
        for (std::size_t j = 0; j < fields.size(); ++j) {
            double v;
            if (!parse_number(fields[j], v)) {
                throw std::invalid_argument("non-numeric field '" + trim(fields[j]) +
                                            "' in data row");
            }
            data.columns[j].push_back(v);
        }
        ++data.rows;
    }
    if (data.rows == 0) throw std::invalid_argument("file '" + path + "' has no data rows");
    return data;
}

std::vector<mlcop::score_family> parse_family_list(const std::string& tokens) {
    std::vector<mlcop::score_family> out;
    for (const auto& t : split(tokens, ',')) {
        out.push_back(mlcop::parse_score_family(trim(t)));
    }
    return out;
}

ordered_json labels_json(std::uint32_t mask, bool serial) {
    return ordered_json(mlcop::mask_labels(mask, serial));
}

int run_test(const std::string& file, bool serial_flag, bool nonserial_flag, int d_flag,
             int pmax_flag, const std::string& score, double alpha, int perm_b,
             std::uint64_t seed, bool want_dependogram, bool sidak) {
    const csv_data data = read_csv(file);
    const bool serial = serial_flag || (data.columns.size() == 1 && !nonserial_flag);
    if (serial && data.columns.size() != 1) {
        throw std::invalid_argument("serial mode expects a single-column file");
    }
    if (!serial && data.columns.size() < 2) {
        throw std::invalid_argument("non-serial mode needs at least two columns");
    }

    std::vector<mlcop::score_family> families = parse_family_list(score);
    mlcop::test_report rep;
    if (serial) {
        if (families.size() != 1) {
            throw std::invalid_argument("serial mode takes a single score family");
        }
        const int d = d_flag > 0 ? d_flag : 2;
        const int pmax = pmax_flag > 0 ? pmax_flag : d;
        rep = mlcop::test_randomness(data.columns[0], d, families[0], pmax);
    } else {
        const int d = static_cast<int>(data.columns.size());
        if (d_flag > 0 && d_flag != d) {
            throw std::invalid_argument("--d does not match the number of columns");
        }
        if (families.size() == 1) {
            families.assign(static_cast<std::size_t>(d), families[0]);
        }
        if (families.size() != data.columns.size()) {
            throw std::invalid_argument("--score must list one family or one per column");
        }
        const int pmax = pmax_flag > 0 ? pmax_flag : d;
        rep = mlcop::test_independence(data.columns, families, pmax);
    }

    ordered_json out = mlcop::report_to_json(rep);

    if (rep.pmax > 2) {
        // Pairs-only Wald summary alongside the full combination.
        std::vector<double> pair_rs;
        for (std::size_t k = 0; k < rep.subsets.masks.size(); ++k) {
            if (std::popcount(rep.subsets.masks[k]) == 2) pair_rs.push_back(rep.r[k]);
        }
        const mlcop::wald_result w = mlcop::wald_statistic(pair_rs, rep.n);
        out["wald_pairs"] = {{"stat", w.stat},
                             {"df", w.df},
                             {"pvalue", mlcop::chi2_sf(w.stat, static_cast<int>(w.df))}};
    }

    if (want_dependogram) {
        const auto entries = mlcop::dependogram(rep, alpha, sidak);
        ordered_json dep;
        dep["alpha"] = alpha;
        dep["method"] = sidak ? "sidak" : "bonferroni";
        dep["critical"] = entries.empty() ? 0.0 : entries.front().critical;
        ordered_json list = ordered_json::array();
        for (const auto& e : entries) {
            list.push_back({{"lags_or_cols", labels_json(e.mask, rep.serial)},
                            {"sqrt_n_r", e.sqrt_n_r},
                            {"exceeds", e.exceeds}});
        }
        dep["entries"] = std::move(list);
        out["dependogram"] = std::move(dep);
    }

    if (perm_b > 0) {
        double p;
        if (serial) {
            p = mlcop::permutation_pvalue_serial(data.columns[0], rep.d,
                                                 rep.families[0], rep.pmax, perm_b, seed);
        } else {
            p = mlcop::permutation_pvalue(data.columns, families, rep.pmax, perm_b, seed);
        }
        out["permutation"] = {{"B", perm_b}, {"pvalue", p}, {"seed", seed}};
    }

    std::cout << out.dump() << "\n";
    return 0;
}

struct power_options {
    std::string config_file;
    std::string models = "indep,tent,fgm,clayton,frank,gaussian";
    std::string margins = "f1,f2,f3,f4,f5,f6,f7";
    std::string n_list = "100,250";
    std::size_t replications = 500;
    double alpha = 0.05;
    int d = 5;
    std::string families = "spearman,vdw,savage";
    std::string pmax_list = "2,5";
    std::uint64_t seed = 20260811;
    int threads = 0;
    bool parse_only = false;
};

void apply_config_file(power_options& opt) {
    std::ifstream in(opt.config_file);
    if (!in) throw std::invalid_argument("cannot open config '" + opt.config_file + "'");
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos) {
            throw std::invalid_argument("config line " + std::to_string(lineno) +
                                        ": expected key=value");
        }
        const std::string key = trim(t.substr(0, eq));
        const std::string value = trim(t.substr(eq + 1));
        if (key == "models") opt.models = value;
        else if (key == "margins") opt.margins = value;
        else if (key == "n") opt.n_list = value;
        else if (key == "N") opt.replications = std::stoull(value);
        else if (key == "alpha") opt.alpha = std::stod(value);
        else if (key == "d") opt.d = std::stoi(value);
        else if (key == "families") opt.families = value;
        else if (key == "pmax") opt.pmax_list = value;
        else if (key == "seed") opt.seed = std::stoull(value);
        else if (key == "threads") opt.threads = std::stoi(value);
        else {
            throw std::invalid_argument("config line " + std::to_string(lineno) +
                                        ": unknown key '" + key + "'");
        }
    }
}

mlcop::power_study_config resolve_power_config(const power_options& opt) {
    mlcop::power_study_config cfg;
    for (const auto& t : split(opt.models, ',')) {
        cfg.models.push_back(mlcop::copula_model::from_token(trim(t)));
    }
    for (const auto& t : split(opt.margins, ',')) {
        cfg.margins.push_back(mlcop::margin_spec::from_token(trim(t)));
    }
    for (const auto& t : split(opt.n_list, ',')) {
        cfg.n_values.push_back(std::stoull(trim(t)));
    }
    cfg.replications = opt.replications;
    cfg.alpha = opt.alpha;
    cfg.d = opt.d;
    cfg.families = parse_family_list(opt.families);
    for (const auto& t : split(opt.pmax_list, ',')) {
        cfg.pmax_values.push_back(std::stoi(trim(t)));
    }
    cfg.master_seed = opt.seed;
    cfg.threads = opt.threads;
    cfg.validate();
    return cfg;
}

int run_power(const power_options& opt_in) {
    power_options opt = opt_in;
    if (!opt.config_file.empty()) apply_config_file(opt);
    const mlcop::power_study_config cfg = resolve_power_config(opt);
    if (opt.parse_only) {
        std::cout << "models=" << cfg.models.size() << " margins=" << cfg.margins.size()
                  << " n_values=" << cfg.n_values.size() << " N=" << cfg.replications
                  << " d=" << cfg.d << " families=" << cfg.families.size()
                  << " pmax=" << cfg.pmax_values.size() << " seed=" << cfg.master_seed
                  << "\n";
        return 0;
    }
    const mlcop::power_table table = mlcop::run_power_study(cfg);
    mlcop::write_power_csv(std::cout, table);
    return 0;
}

mlcop::theoretical_margin parse_margin_spec(const std::string& spec) {
    const std::string s = trim(spec);
    if (s == "continuous" || s == "uniform") {
        return mlcop::theoretical_margin::continuous([](double u) { return u; });
    }
    if (s.rfind("bernoulli", 0) == 0) {
        double p = 0.5;
        if (const auto pos = s.find(":p="); pos != std::string::npos) {
            p = std::stod(s.substr(pos + 3));
        }
        if (!(p > 0.0 && p < 1.0)) {
            throw std::invalid_argument("bernoulli margin needs p in (0,1)");
        }
        return mlcop::theoretical_margin::discrete(
            {{0.0, 0.0, 1.0 - p}, {1.0, 1.0 - p, 1.0}});
    }
    return mlcop::to_theoretical(mlcop::margin_spec::from_token(s));
}

int run_are(const std::string& k_token, const std::string& g_token,
            const std::string& margin_token, int card) {
    const mlcop::score_family k = mlcop::parse_score_family(k_token);
    const mlcop::score_family g = mlcop::parse_score_family(g_token);
    const mlcop::theoretical_margin margin = parse_margin_spec(margin_token);

    ordered_json out;
    out["k"] = std::string(mlcop::to_token(k));
    out["g"] = std::string(mlcop::to_token(g));
    out["margin"] = margin_token;
    out["card"] = card;
    out["are"] = mlcop::are(k, g, margin, card);
    out["cov"] = mlcop::local_power_mean(k, margin, g);
    out["var_k"] = mlcop::local_power_mean(k, margin, k);
    out["var_g"] = mlcop::local_power_mean(g, margin, g);
    std::cout << out.dump() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Copula-based tests of independence and randomness for arbitrary data"};
    app.require_subcommand(1);

    // test
    std::string test_file;
    bool serial_flag = false, nonserial_flag = false;
    int d_flag = 0, pmax_flag = 0, perm_b = 0;
    std::string score = "spearman";
    double alpha = 0.05;
    std::uint64_t seed = 20260811;
    bool want_dependogram = false, sidak = false;
    CLI::App* test = app.add_subcommand("test", "Run a test on a CSV file");
    test->add_option("file", test_file, "CSV input; one column per variable "
                                        "(single column in serial mode)")
        ->required();
    test->add_flag("--serial", serial_flag, "Test randomness of a single series");
    test->add_flag("--nonserial", nonserial_flag, "Test independence of columns");
    test->add_option("--d", d_flag, "Serial embedding dimension (default 2)");
    test->add_option("--pmax", pmax_flag, "Max subset cardinality (default d)");
    test->add_option("--score", score,
                     "Score family token(s): spearman|vdw|savage|blest, "
                     "comma-separated for per-column choices");
    test->add_option("--alpha", alpha, "Level for the dependogram critical line");
    test->add_option("--perm", perm_b, "Permutation replicates B (0 = off)");
    test->add_option("--seed", seed, "Seed for the permutation test");
    test->add_flag("--dependogram", want_dependogram, "Emit dependogram data");
    test->add_flag("--sidak", sidak, "Sidak instead of Bonferroni criticals");

    // power
    power_options popt;
    CLI::App* power = app.add_subcommand("power", "Run a Monte Carlo power study");
    power->add_option("--config", popt.config_file, "key=value config file");
    power->add_option("--models", popt.models, "Comma list of copula models");
    power->add_option("--margins", popt.margins, "Comma list of margins f1..f7");
    power->add_option("--n", popt.n_list, "Comma list of series lengths");
    power->add_option("--N", popt.replications, "Replications per cell");
    power->add_option("--alpha", popt.alpha, "Nominal level");
    power->add_option("--d", popt.d, "Embedding dimension");
    power->add_option("--families", popt.families, "Comma list of score families");
    power->add_option("--pmax", popt.pmax_list, "Comma list of max cardinalities");
    power->add_option("--seed", popt.seed, "Master seed");
    power->add_option("--threads", popt.threads, "Worker threads (0 = auto)");
    power->add_flag("--parse-only", popt.parse_only, "Resolve the grid and exit");

    // are
    std::string are_k, are_g, are_margin;
    int are_card = 2;
    CLI::App* are_cmd = app.add_subcommand("are", "Asymptotic relative efficiency");
    are_cmd->add_option("--k", are_k, "Test score family")->required();
    are_cmd->add_option("--g", are_g, "Alternative's score family")->required();
    are_cmd->add_option("--margin", are_margin,
                        "continuous | bernoulli:p=X | f1..f7")
        ->required();
    are_cmd->add_option("--card", are_card, "Subset cardinality (default 2)");

    try {
        app.parse(argc, argv);
        if (test->parsed()) {
            return run_test(test_file, serial_flag, nonserial_flag, d_flag, pmax_flag,
                            score, alpha, perm_b, seed, want_dependogram, sidak);
        }
        if (power->parsed()) return run_power(popt);
        if (are_cmd->parsed()) return run_are(are_k, are_g, are_margin, are_card);
        return exit_input_error;
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : exit_input_error;
    } catch (const mlcop::degenerate_data_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_degenerate;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_input_error;
    } catch (const std::domain_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_input_error;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
