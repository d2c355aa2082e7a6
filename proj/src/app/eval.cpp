#include <algorithm>
#include <cstdio>
#include <set>
#include <sstream>

#include "common.hpp"
#include "pastagen/error.hpp"
#include "pastagen/io.hpp"
#include "pastagen/rng.hpp"
#include "pastagen/stats.hpp"

namespace pastagen {

namespace {

std::string trim(std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? "" : s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') cur += '"', ++i;
            else if (c == '"') quoted = false;
            else cur += c;
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(trim(cur));
    return out;
}

double parse_number(const std::string& s, std::size_t line) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size() || !std::isfinite(v)) throw std::invalid_argument(s);
        return v;
    } catch (const std::logic_error&) {
        throw InvalidInput("results line " + std::to_string(line) + ": '" + s + "' is not a finite number");
    }
}

struct Table {
    bool scored = false;
    // model -> case -> (value) or (score, label)
    std::map<std::string, std::map<std::string, std::pair<double, int>>> rows;
};

Table read_results(const fs::path& path) {
    std::istringstream in(read_text_file(path));
    std::string line;
    if (!std::getline(in, line)) throw InvalidInput("results file is empty");
    const auto header = split_csv_line(line);
    auto column = [&](const std::string& name) -> std::optional<std::size_t> {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return i;
        return std::nullopt;
    };
    const auto c_case = column("case_id"), c_model = column("model"), c_value = column("value"), c_score = column("score"),
               c_label = column("label");
    if (!c_case || !c_model) throw InvalidInput("results header needs case_id and model columns");
    Table t;
    t.scored = !c_value.has_value();
    if (t.scored && !(c_score && c_label)) throw InvalidInput("results header needs a value column or score and label columns");
    std::size_t number = 1;
    while (std::getline(in, line)) {
        ++number;
        if (trim(line).empty()) continue;
        const auto f = split_csv_line(line);
        if (f.size() != header.size()) throw InvalidInput("results line " + std::to_string(number) + ": wrong number of fields");
        std::pair<double, int> v{0.0, 0};
        if (t.scored) {
            v.first = parse_number(f[*c_score], number);
            const double label = parse_number(f[*c_label], number);
            if (label != 0.0 && label != 1.0) throw InvalidInput("results line " + std::to_string(number) + ": label must be 0 or 1");
            v.second = static_cast<int>(label);
        } else {
            v.first = parse_number(f[*c_value], number);
        }
        if (!t.rows[f[*c_model]].emplace(f[*c_case], v).second)
            throw InvalidInput("results line " + std::to_string(number) + ": duplicate case " + f[*c_case] + " for model " + f[*c_model]);
    }
    if (t.rows.empty()) throw InvalidInput("results file has no rows");
    return t;
}

MetricSummary auc_bootstrap(const std::vector<double>& scores, const std::vector<int>& labels, std::size_t B, double level,
                            std::uint64_t seed) {
    std::vector<std::size_t> pos, neg;
    for (std::size_t i = 0; i < labels.size(); ++i) (labels[i] ? pos : neg).push_back(i);
    MetricSummary m;
    m.point = auc(scores, labels);
    m.replicates = B;
    m.level = level;
    // Stratified resampling keeps both classes in every replicate.
    std::vector<double> reps(B), s(labels.size());
    std::vector<int> l(labels.size());
    for (std::size_t r = 0; r < B; ++r) {
        Rng rng(derive_seed(seed, {r}));
        std::size_t k = 0;
        for (std::size_t i = 0; i < pos.size(); ++i, ++k) s[k] = scores[pos[rng.index(pos.size())]], l[k] = 1;
        for (std::size_t i = 0; i < neg.size(); ++i, ++k) s[k] = scores[neg[rng.index(neg.size())]], l[k] = 0;
        reps[r] = auc(s, l);
    }
    std::sort(reps.begin(), reps.end());
    m.low = quantile_sorted(reps, (1.0 - level) / 2.0);
    m.high = quantile_sorted(reps, 1.0 - (1.0 - level) / 2.0);
    return m;
}

std::string fixed(double v, int digits = 4) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

}  // namespace

EvalResult cmd_eval(const EvalOptions& opt) {
    if (opt.bootstrap == 0) throw InvalidInput("--bootstrap must be positive");
    if (!(opt.level > 0.0 && opt.level < 1.0)) throw InvalidInput("--level must lie in (0, 1)");
    const Table table = read_results(opt.results);
    if (opt.test != ComparisonTest::None && table.rows.size() < 2)
        throw InvalidInput("a comparison test needs results for at least two models");
    if (opt.test != ComparisonTest::None && table.scored)
        throw InvalidInput("comparison tests need per-case metric values (case_id,model,value)");

    // Every model must cover the same cases.
    std::set<std::string> all_cases;
    for (const auto& [model, cases] : table.rows)
        for (const auto& [c, v] : cases) all_cases.insert(c);
    std::vector<std::string> offenders;
    for (const auto& [model, cases] : table.rows)
        for (const auto& c : all_cases)
            if (!cases.count(c)) offenders.push_back(model + " lacks " + c);
    if (!offenders.empty() && table.rows.size() > 1) {
        std::string msg = "case ids differ between models:";
        for (const auto& o : offenders) msg += "\n  " + o;
        throw InvalidInput(msg);
    }

    EvalResult result;
    for (const auto& [model, cases] : table.rows) {
        std::vector<double> values;
        std::vector<int> labels;
        for (const auto& [c, v] : cases) values.push_back(v.first), labels.push_back(v.second);
        const std::uint64_t seed = derive_seed(opt.seed, model);
        MetricSummary m = table.scored ? auc_bootstrap(values, labels, opt.bootstrap, opt.level, seed)
                                       : bootstrap_ci(values, mean_of, opt.bootstrap, opt.level, seed);
        result.models.push_back({model, table.scored ? "auc" : "mean", m.point, m.low, m.high, values.size()});
    }
    std::stable_sort(result.models.begin(), result.models.end(),
                     [](const ModelSummary& a, const ModelSummary& b) { return a.point > b.point; });

    if (opt.test != ComparisonTest::None) {
        PairedScores paired;
        const auto& a = table.rows.at(result.models[0].model);
        const auto& b = table.rows.at(result.models[1].model);
        for (const auto& [c, v] : a) {
            paired.case_ids.push_back(c);
            paired.a.push_back(v.first);
            paired.b.push_back(b.at(c).first);
        }
        if (opt.test == ComparisonTest::Wilcoxon) {
            result.test_name = "wilcoxon";
            result.p_value = wilcoxon_one_sided(paired);
        } else {
            result.test_name = "permutation";
            result.p_value = paired_permutation_one_sided(paired, opt.permutations, opt.seed);
        }
    }

    const int pct = static_cast<int>(std::lround(opt.level * 100));
    std::ostringstream os;
    char line[256];
    std::snprintf(line, sizeof line, "%-20s %-6s %5s %10s  %s\n", "model", "metric", "n", "estimate",
                  (std::to_string(pct) + "% CI").c_str());
    os << line;
    for (const auto& m : result.models) {
        std::snprintf(line, sizeof line, "%-20s %-6s %5zu %10s  [%s, %s]\n", m.model.c_str(), m.metric.c_str(), m.n,
                      fixed(m.point).c_str(), fixed(m.low).c_str(), fixed(m.high).c_str());
        os << line;
    }
    if (result.p_value)
        os << result.test_name << " one-sided (" << result.models[0].model << " > " << result.models[1].model
           << "): p = " << format_p(*result.p_value) << "\n";
    result.table = os.str();

    if (opt.out) {
        std::ostringstream csv;
        csv << "model,metric,n,estimate,ci_low,ci_high,level,replicates,test,compared_with,p_value\n";
        nlohmann::ordered_json j;
        j["level"] = opt.level;
        j["replicates"] = opt.bootstrap;
        j["models"] = nlohmann::json::array();
        for (std::size_t i = 0; i < result.models.size(); ++i) {
            const auto& m = result.models[i];
            const bool top = i == 0 && result.p_value;
            csv << m.model << ',' << m.metric << ',' << m.n << ',' << fixed(m.point, 6) << ',' << fixed(m.low, 6) << ','
                << fixed(m.high, 6) << ',' << opt.level << ',' << opt.bootstrap << ',' << (top ? result.test_name : "") << ','
                << (top ? result.models[1].model : "") << ',' << (top ? format_p(*result.p_value) : "") << '\n';
            nlohmann::ordered_json mj{{"model", m.model}, {"metric", m.metric}, {"n", m.n},
                                      {"estimate", m.point}, {"ci_low", m.low}, {"ci_high", m.high}};
            j["models"].push_back(mj);
        }
        if (result.p_value)
            j["comparison"] = {{"test", result.test_name},
                               {"model_a", result.models[0].model},
                               {"model_b", result.models[1].model},
                               {"alternative", "a > b"},
                               {"p_value", *result.p_value},
                               {"p_display", format_p(*result.p_value)}};
        fs::path csv_path = *opt.out, json_path = *opt.out;
        csv_path += ".csv";
        json_path += ".json";
        if (opt.out->has_parent_path()) fs::create_directories(opt.out->parent_path());
        write_file_atomic(csv_path, csv.str());
        write_file_atomic(json_path, j.dump(2) + "\n");
    }
    return result;
}

}  // namespace pastagen
