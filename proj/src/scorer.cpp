#include "simple/scorer.hpp"

#include <algorithm>
#include <fstream>

#include <nlohmann/json.hpp>

#include "simple/errors.hpp"

namespace simple {

using nlohmann::json;

namespace {

bool is_placeholder(std::string_view name) {
    return std::any_of(std::begin(kPlaceholders), std::end(kPlaceholders),
                       [&](const char* p) { return name == p; });
}

// Calls on_text(literal) and on_placeholder(name) in pattern order.
template <typename OnText, typename OnPlaceholder>
void scan_pattern(const std::string& pattern, OnText on_text, OnPlaceholder on_placeholder) {
    std::size_t pos = 0;
    while (pos < pattern.size()) {
        const auto open = pattern.find('{', pos);
        if (open == std::string::npos) {
            on_text(std::string_view(pattern).substr(pos));
            return;
        }
        const auto close = pattern.find('}', open + 1);
        if (close == std::string::npos) {
            on_text(std::string_view(pattern).substr(pos));
            return;
        }
        const auto name = std::string_view(pattern).substr(open + 1, close - open - 1);
        if (is_placeholder(name)) {
            on_text(std::string_view(pattern).substr(pos, open - pos));
            on_placeholder(std::string(name));
            pos = close + 1;
        } else {
            on_text(std::string_view(pattern).substr(pos, open + 1 - pos));
            pos = open + 1;
        }
    }
}

}  // namespace

std::vector<std::string> SuppositionTemplate::placeholders() const {
    std::vector<std::string> names;
    scan_pattern(
            pattern, [](std::string_view) {},
            [&](std::string name) {
                if (std::find(names.begin(), names.end(), name) == names.end()) names.push_back(std::move(name));
            });
    return names;
}

std::string build_supposition(const SuppositionTemplate& tmpl,
                              const std::map<std::string, std::string>& bindings) {
    std::string out;
    bool any = false;
    scan_pattern(
            tmpl.pattern, [&](std::string_view text) { out.append(text); },
            [&](const std::string& name) {
                any = true;
                const auto it = bindings.find(name);
                if (it == bindings.end())
                    throw TemplateError("template '" + tmpl.task_name + "' has no binding for {" + name + "}",
                                        name);
                out.append(it->second);
            });
    if (!any) throw TemplateError("template '" + tmpl.task_name + "' has no placeholder", "");
    return out;
}

std::vector<SuppositionTemplate> builtin_templates() {
    return {
            {"MNLI", "{h} is entailed by {p}", {}},
            {"RTE", "{h} is entailed by {p}", {}},
            {"QNLI", "The answer to {q} is entailed by {t}", {}},
            {"QQP", "{q1}'s answer is entailed by {q2}'s answer", {}},
            {"SST2", "The movie is good is entailed by {x}", {}},
            {"EMOTION", "I am {label_text} is entailed by {x}", {"happy", "sad", "shocked"}},
    };
}

const SuppositionTemplate& builtin_template(const std::string& task_name) {
    static const std::vector<SuppositionTemplate> templates = builtin_templates();
    for (const auto& t : templates)
        if (t.task_name == task_name) return t;
    throw TemplateError("no built-in template for task '" + task_name + "'", "");
}

std::vector<SuppositionTemplate> load_template_registry(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IntegrityError("cannot open " + path.string());
    std::vector<SuppositionTemplate> out;
    std::string line;
    std::uint64_t offset = 0;
    while (std::getline(in, line)) {
        if (!line.empty()) {
            try {
                const json row = json::parse(line);
                SuppositionTemplate t;
                t.task_name = row.at("task").get<std::string>();
                t.pattern = row.at("pattern").get<std::string>();
                if (row.contains("label_texts")) t.label_texts = row.at("label_texts").get<std::vector<std::string>>();
                if (t.placeholders().empty())
                    throw TemplateError("template '" + t.task_name + "' has no placeholder", "");
                out.push_back(std::move(t));
            } catch (const json::exception& e) {
                throw FormatError(std::string("malformed template row: ") + e.what(), offset);
            }
        }
        offset += line.size() + 1;
    }
    return out;
}

void write_template_registry(const std::vector<SuppositionTemplate>& templates,
                             const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IntegrityError("cannot open " + path.string() + " for writing");
    for (const auto& t : templates)
        out << json{{"task", t.task_name}, {"pattern", t.pattern}, {"label_texts", t.label_texts}}.dump() << '\n';
}

const char* to_string(Truth t) {
    switch (t) {
        case Truth::Entail:
            return "entail";
        case Truth::Neutral:
            return "neutral";
        case Truth::Contradict:
            return "contradict";
    }
    return "entail";
}

TruthProb binary_truth_prob(const EntailmentScores& scores, bool allow_uniform) {
    const double mass = scores.entail + scores.contradict;
    if (!(mass > 0.0)) {
        if (allow_uniform) return {0.5, 0.5};
        throw DegenerateScoreError("entail and contradict scores are both zero");
    }
    const double p_true = scores.entail / mass;
    return {p_true, 1.0 - p_true};
}

RankResult rank_multiclass(std::span<const EntailmentScores> per_class, bool renormalized) {
    if (per_class.empty()) throw ArgumentError("rank_multiclass needs at least one supposition");
    RankResult best{0, -1.0};
    for (std::size_t c = 0; c < per_class.size(); ++c) {
        const double key = renormalized ? binary_truth_prob(per_class[c]).p_true : per_class[c].entail;
        if (key > best.confidence) best = {static_cast<int>(c), key};
    }
    return best;
}

McTargetPolicy parse_mc_target(const std::string& text) {
    if (text == "predicted") return McTargetPolicy::Predicted;
    if (text == "entail") return McTargetPolicy::Entail;
    throw ConfigError("unknown mc-target policy '" + text + "' (expected predicted or entail)");
}

Truth argmax_truth(const EntailmentScores& s) {
    Truth best = Truth::Entail;
    if (s.neutral > s[best]) best = Truth::Neutral;
    if (s.contradict > s[best]) best = Truth::Contradict;
    return best;
}

MaxConfidenceTarget max_confidence_target(std::span<const EntailmentScores> per_class, int winner,
                                          McTargetPolicy policy) {
    if (per_class.empty()) throw ArgumentError("max_confidence_target needs at least one supposition");
    if (winner < 0 || static_cast<std::size_t>(winner) >= per_class.size())
        throw ArgumentError("winner index out of range");
    const Truth label = policy == McTargetPolicy::Entail ? Truth::Entail : argmax_truth(per_class[winner]);
    return {winner, label};
}

std::vector<double> Scorer::score(const SampleInput& input, bool stochastic, std::uint64_t pass_seed) const {
    Evaluation ev = evaluate(input, stochastic, pass_seed);
    if (!ev.class_scores.empty()) return std::move(ev.class_scores);
    std::vector<double> flat;
    for (const auto& s : ev.suppositions) flat.insert(flat.end(), {s.entail, s.neutral, s.contradict});
    return flat;
}

std::vector<float> Scorer::embed(const SampleInput& input, bool stochastic, std::uint64_t pass_seed) const {
    Evaluation ev = evaluate(input, stochastic, pass_seed);
    std::vector<float> flat;
    for (const auto& e : ev.embeddings) flat.insert(flat.end(), e.begin(), e.end());
    return flat;
}

}  // namespace simple
